//! Transmit baseband: symbol mapping, pulse shaping with per-symbol timing
//! jitter, and a quantizing DAC rendered as an oversampled zero-order hold.
//!
//! Symbol `m` starts at `t_m = T_0 + ... + T_{m-1}`, where each realized
//! period `T_k = T + e_k` carries an i.i.d. Gaussian time-interval error.
//! Pulses overlap-add when jitter stretches or shrinks a symbol.

use crate::error::{invalid, Error, Result};
use crate::rng::{rng_from_seed, standard_normal};
use crate::signal::ComplexSignal;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

/// Chip sequence for 802.15.4 data symbol 0. The all-zero preamble is eight
/// repetitions of it.
pub const SYMBOL_ZERO_CHIPS: [u8; 32] = [
    1, 1, 0, 1, 1, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1, 1, 0, 1, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 1, 0,
];

/// 256 chips, i.e. 128 per I/Q branch.
pub fn preamble_chips() -> Vec<u8> {
    let mut out = Vec::with_capacity(256);
    for _ in 0..8 {
        out.extend_from_slice(&SYMBOL_ZERO_CHIPS);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", content = "order", rename_all = "snake_case"))]
pub enum Modulation {
    Psk(u32),
    Qam(u32),
    /// One stream entry per chip, alternately on I and Q.
    Oqpsk,
}

impl Modulation {
    pub fn order(self) -> u32 {
        match self {
            Modulation::Psk(m) | Modulation::Qam(m) => m,
            Modulation::Oqpsk => 4,
        }
    }

    pub fn bits_per_symbol(self) -> Result<usize> {
        match self {
            Modulation::Psk(m) => {
                if m < 2 || !m.is_power_of_two() {
                    return Err(invalid("PSK order", format!("{m}")));
                }
                Ok(m.trailing_zeros() as usize)
            }
            Modulation::Qam(m) => {
                let k = m.trailing_zeros();
                if m < 4 || !m.is_power_of_two() || k % 2 != 0 {
                    return Err(invalid("QAM order", format!("{m} (square constellations only)")));
                }
                Ok(k as usize)
            }
            // bits are consumed in I/Q pairs
            Modulation::Oqpsk => Ok(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    pub symbols: Vec<Complex64>,
    /// Nominal spacing `T` between consecutive stream entries, seconds.
    pub symbol_period: f64,
    pub modulation: Modulation,
}

impl SymbolStream {
    pub fn new(symbols: Vec<Complex64>, symbol_period: f64, modulation: Modulation) -> Result<Self> {
        if symbols.is_empty() {
            return Err(invalid("symbol stream", "empty"));
        }
        if !(symbol_period > 0.0) || !symbol_period.is_finite() {
            return Err(invalid("symbol period", format!("{symbol_period}")));
        }
        Ok(Self {
            symbols,
            symbol_period,
            modulation,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// M-PSK point for integer label `x`: `exp(jπx/M)`.
pub fn psk_point(x: i64, m: u32) -> Complex64 {
    let a = PI * x as f64 / m as f64;
    Complex64::new(libm::cos(a), libm::sin(a))
}

fn gray_decode(mut g: u32) -> u32 {
    let mut b = g;
    while g > 1 {
        g >>= 1;
        b ^= g;
    }
    b
}

fn bits_to_int(bits: &[u8]) -> u32 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u32)
}

/// Gray-coded square QAM constellation with unit average power, indexed by
/// the bit label.
pub fn qam_constellation(m: u32) -> Result<Vec<Complex64>> {
    let k = Modulation::Qam(m).bits_per_symbol()? / 2;
    let side = 1u32 << k;
    let scale = libm::sqrt(3.0 / (2.0 * (m as f64 - 1.0)));
    let level = |g: u32| (2.0 * gray_decode(g) as f64 - (side as f64 - 1.0)) * scale;
    Ok((0..m)
        .map(|label| {
            let gi = label >> k;
            let gq = label & (side - 1);
            Complex64::new(level(gi), level(gq))
        })
        .collect())
}

/// Maps a bit sequence (each entry 0 or 1) onto complex symbols.
///
/// PSK labels use odd integers `x = 2i + 1` with `i` the Gray-decoded bit
/// group, which gives the usual constellation rotated off the axes.
pub fn map_symbols(bits: &[u8], modulation: Modulation, symbol_period: f64) -> Result<SymbolStream> {
    if let Some(pos) = bits.iter().position(|&b| b > 1) {
        return Err(invalid("bit", format!("value {} at index {pos}", bits[pos])));
    }
    let k = modulation.bits_per_symbol()?;
    if bits.is_empty() || !bits.len().is_multiple_of(k) {
        return Err(Error::BitCount {
            bits: bits.len(),
            bits_per_symbol: k,
        });
    }
    let symbols: Vec<Complex64> = match modulation {
        Modulation::Psk(m) => bits
            .chunks(k)
            .map(|c| psk_point(2 * gray_decode(bits_to_int(c)) as i64 + 1, m))
            .collect(),
        Modulation::Qam(m) => {
            let table = qam_constellation(m)?;
            bits.chunks(k).map(|c| table[bits_to_int(c) as usize]).collect()
        }
        Modulation::Oqpsk => bits
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let v = if b == 1 { 1.0 } else { -1.0 };
                if i % 2 == 0 {
                    Complex64::new(v, 0.0)
                } else {
                    Complex64::new(0.0, v)
                }
            })
            .collect(),
    };
    SymbolStream::new(symbols, symbol_period, modulation)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum ShapingFilter {
    /// `sin(πt/2T)` on `[0, 2T]`.
    HalfSine,
    /// Centred root-raised-cosine truncated to `span_symbols` periods.
    RootRaisedCosine { rolloff: f64, span_symbols: u32 },
}

impl ShapingFilter {
    pub fn rrc(rolloff: f64) -> Self {
        ShapingFilter::RootRaisedCosine {
            rolloff,
            span_symbols: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ShapingFilter::RootRaisedCosine {
            rolloff,
            span_symbols,
        } = *self
        {
            if !(rolloff > 0.0 && rolloff <= 1.0) {
                return Err(invalid("rolloff", format!("{rolloff} not in (0, 1]")));
            }
            if span_symbols < 2 {
                return Err(invalid("RRC span", format!("{span_symbols} symbols")));
            }
        }
        Ok(())
    }

    /// Support `[lo, hi]` relative to the symbol start for period `t`.
    pub fn support(&self, t: f64) -> (f64, f64) {
        match *self {
            ShapingFilter::HalfSine => (0.0, 2.0 * t),
            ShapingFilter::RootRaisedCosine { span_symbols, .. } => {
                let h = 0.5 * span_symbols as f64 * t;
                (-h, h)
            }
        }
    }

    /// Pulse value at time `t` for symbol duration `period`.
    pub fn eval(&self, t: f64, period: f64) -> f64 {
        let (lo, hi) = self.support(period);
        if t < lo || t > hi {
            return 0.0;
        }
        match *self {
            ShapingFilter::HalfSine => libm::sin(PI * t / (2.0 * period)),
            ShapingFilter::RootRaisedCosine { rolloff, .. } => rrc(t, period, rolloff),
        }
    }
}

/// Root-raised-cosine impulse response with unit energy; the removable
/// singularities at `t = 0` and `|t| = T/4β` return their limits.
pub fn rrc(t: f64, period: f64, beta: f64) -> f64 {
    let x = t / period;
    let norm = 1.0 / libm::sqrt(period);
    if x.abs() < 1e-12 {
        return norm * (1.0 - beta + 4.0 * beta / PI);
    }
    let q = 4.0 * beta * x;
    if (q.abs() - 1.0).abs() < 1e-9 {
        let a = PI / (4.0 * beta);
        return norm * beta / libm::sqrt(2.0)
            * ((1.0 + 2.0 / PI) * libm::sin(a) + (1.0 - 2.0 / PI) * libm::cos(a));
    }
    let num = libm::cos((1.0 + beta) * PI * x) + libm::sin((1.0 - beta) * PI * x) / q;
    norm * 4.0 * beta * num / (PI * (1.0 - q * q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ClockModel {
    /// Standard deviation of the per-symbol period error, seconds.
    pub tie_sigma: f64,
    pub seed: u64,
}

impl ClockModel {
    pub fn ideal() -> Self {
        Self {
            tie_sigma: 0.0,
            seed: 0,
        }
    }

    /// Realized periods `T_m` for `n` symbols.
    pub fn periods(&self, nominal: f64, n: usize) -> Result<Vec<f64>> {
        if !(self.tie_sigma >= 0.0) || !self.tie_sigma.is_finite() {
            return Err(invalid("TIE sigma", format!("{}", self.tie_sigma)));
        }
        if self.tie_sigma == 0.0 {
            return Ok(vec![nominal; n]);
        }
        let mut rng = rng_from_seed(self.seed);
        (0..n)
            .map(|symbol| {
                let period = nominal + self.tie_sigma * standard_normal(&mut rng);
                if period > 0.0 {
                    Ok(period)
                } else {
                    Err(Error::NonPositivePeriod { symbol, period })
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DacModel {
    pub bits: u32,
    /// Full-scale amplitude `U` per rail.
    pub full_scale: f64,
    /// Seconds between DAC updates.
    pub generation_period: f64,
    /// Per-code output deviation, `2^bits` entries. `None` is an ideal DAC.
    #[cfg_attr(feature = "serde", serde(default))]
    pub inl: Option<Vec<f64>>,
    pub amplitude_gain: f64,
    /// Zero-order-hold samples per DAC update.
    pub oversample: u32,
}

impl DacModel {
    /// 12-bit DAC at `T/8` with a 16x hold proxy.
    pub fn for_symbol_period(t: f64) -> Self {
        Self {
            bits: 12,
            full_scale: 1.0,
            generation_period: t / 8.0,
            inl: None,
            amplitude_gain: 0.9,
            oversample: 16,
        }
    }

    pub fn validate(&self, symbol_period: f64) -> Result<()> {
        if self.bits == 0 || self.bits > 24 {
            return Err(invalid("DAC bits", format!("{} not in 1..=24", self.bits)));
        }
        if !(self.full_scale > 0.0) {
            return Err(invalid("DAC full scale", format!("{}", self.full_scale)));
        }
        if !(self.generation_period > 0.0) || self.generation_period > symbol_period / 8.0 * (1.0 + 1e-12) {
            return Err(invalid(
                "DAC generation period",
                format!("{} s must be positive and at most T/8", self.generation_period),
            ));
        }
        if self.oversample < 16 {
            return Err(invalid("DAC oversample", format!("{} < 16", self.oversample)));
        }
        if !(self.amplitude_gain > 0.0) || !self.amplitude_gain.is_finite() {
            return Err(invalid("DAC gain", format!("{}", self.amplitude_gain)));
        }
        if let Some(inl) = &self.inl {
            if inl.len() != 1usize << self.bits {
                return Err(invalid(
                    "INL table",
                    format!("{} entries, expected {}", inl.len(), 1usize << self.bits),
                ));
            }
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        2.0 * self.full_scale / libm::exp2(self.bits as f64)
    }

    /// Largest possible quantization error, `2^-bits · U`.
    pub fn max_error(&self) -> f64 {
        self.full_scale / libm::exp2(self.bits as f64)
    }

    /// Mid-rise code for one rail. Values must already be inside full scale.
    pub fn code(&self, v: f64) -> usize {
        let levels = 1usize << self.bits;
        let c = libm::floor((v + self.full_scale) / self.step()) as i64;
        c.clamp(0, levels as i64 - 1) as usize
    }

    pub fn level(&self, code: usize) -> f64 {
        let inl = self.inl.as_ref().map_or(0.0, |t| t[code]);
        (code as f64 + 0.5) * self.step() - self.full_scale + inl
    }

    pub fn quantize(&self, v: f64) -> f64 {
        self.level(self.code(v))
    }
}

/// Computes `u[n]` on the DAC grid `n·T_g`.
pub fn shape_and_jitter(
    stream: &SymbolStream,
    filter: &ShapingFilter,
    clock: &ClockModel,
    dac: &DacModel,
) -> Result<Vec<Complex64>> {
    filter.validate()?;
    dac.validate(stream.symbol_period)?;
    let periods = clock.periods(stream.symbol_period, stream.len())?;
    let tg = dac.generation_period;

    let mut starts = Vec::with_capacity(periods.len());
    let mut t = 0.0;
    for p in &periods {
        starts.push(t);
        t += p;
    }
    let mut lo_min = 0.0f64;
    let mut hi_max = 0.0f64;
    for (s, p) in starts.iter().zip(&periods) {
        let (lo, hi) = filter.support(*p);
        lo_min = lo_min.min(s + lo);
        hi_max = hi_max.max(s + hi);
    }
    // shift so the earliest pulse starts at t = 0
    let offset = -lo_min;
    let n = libm::ceil((hi_max + offset) / tg - 1e-9) as usize + 1;
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    for ((x, s), p) in stream.symbols.iter().zip(&starts).zip(&periods) {
        let (lo, hi) = filter.support(*p);
        let first = libm::ceil((s + offset + lo) / tg - 1e-9).max(0.0) as usize;
        let last = (libm::floor((s + offset + hi) / tg + 1e-9) as usize).min(n - 1);
        for (k, slot) in u.iter_mut().enumerate().take(last + 1).skip(first) {
            let tau = k as f64 * tg - s - offset;
            *slot += x * filter.eval(tau, *p);
        }
    }
    for v in &mut u {
        *v *= dac.amplitude_gain;
    }
    Ok(u)
}

/// Quantizes each rail and renders the zero-order-hold proxy at
/// `oversample / T_g`.
pub fn dac_convert(u: &[Complex64], dac: &DacModel) -> Result<ComplexSignal> {
    if u.is_empty() {
        return Err(invalid("DAC input", "empty"));
    }
    let mut clipped = 0;
    let mut peak = 0.0f64;
    for v in u {
        let m = v.re.abs().max(v.im.abs());
        peak = peak.max(m);
        if m > dac.full_scale {
            clipped += 1;
        }
    }
    if clipped > 0 {
        return Err(Error::Clipping {
            clipped,
            total: u.len(),
            peak,
            full_scale: dac.full_scale,
        });
    }
    let os = dac.oversample as usize;
    let mut out = Vec::with_capacity(u.len() * os);
    for v in u {
        let q = Complex64::new(dac.quantize(v.re), dac.quantize(v.im));
        out.extend(core::iter::repeat_n(q, os));
    }
    ComplexSignal::baseband(out, os as f64 / dac.generation_period)
}

/// Bits to analog proxy in one call.
pub fn generate_baseband(
    bits: &[u8],
    modulation: Modulation,
    symbol_period: f64,
    filter: &ShapingFilter,
    clock: &ClockModel,
    dac: &DacModel,
) -> Result<ComplexSignal> {
    let stream = map_symbols(bits, modulation, symbol_period)?;
    let u = shape_and_jitter(&stream, filter, clock, dac)?;
    dac_convert(&u, dac)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psk_labels() {
        assert!((psk_point(1, 4) - Complex64::from_polar(1.0, PI / 4.0)).norm() < 1e-15);
        assert_eq!(psk_point(0, 4), Complex64::new(1.0, 0.0));
        let s = map_symbols(&[0, 0, 0, 1, 1, 1, 1, 0], Modulation::Psk(4), 1.0).unwrap();
        for x in &s.symbols {
            assert!((x.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gray_neighbours_differ_by_one_bit() {
        let m = 8u32;
        let mut by_angle = vec![0u32; m as usize];
        for label in 0..m {
            by_angle[gray_decode(label) as usize] = label;
        }
        for i in 0..m as usize {
            let a = by_angle[i];
            let b = by_angle[(i + 1) % m as usize];
            assert_eq!((a ^ b).count_ones(), 1);
        }
    }

    #[test]
    fn rejects_bad_orders_and_counts() {
        assert!(map_symbols(&[0, 1, 0], Modulation::Psk(4), 1.0).is_err());
        assert!(map_symbols(&[0, 1, 0], Modulation::Psk(6), 1.0).is_err());
        assert!(map_symbols(&[0; 8], Modulation::Qam(8), 1.0).is_err());
        assert!(map_symbols(&[0, 2], Modulation::Oqpsk, 1.0).is_err());
    }

    #[test]
    fn oqpsk_alternates_rails() {
        let s = map_symbols(&[1, 0, 0, 1], Modulation::Oqpsk, 0.5e-6).unwrap();
        assert_eq!(
            s.symbols,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, 1.0),
            ]
        );
    }

    #[test]
    fn quantizer_is_mid_rise() {
        let dac = DacModel {
            bits: 2,
            ..DacModel::for_symbol_period(1.0)
        };
        assert_eq!(dac.quantize(0.01), 0.25);
        assert_eq!(dac.quantize(-0.01), -0.25);
        assert_eq!(dac.quantize(0.99), 0.75);
    }

    #[test]
    fn clipping_is_an_error() {
        let dac = DacModel::for_symbol_period(1.0);
        let err = dac_convert(&[Complex64::new(1.5, 0.0)], &dac).unwrap_err();
        assert!(matches!(err, Error::Clipping { clipped: 1, .. }));
    }

    #[test]
    fn inl_table_length_checked() {
        let dac = DacModel {
            bits: 4,
            inl: Some(vec![0.0; 15]),
            ..DacModel::for_symbol_period(1.0)
        };
        assert!(dac.validate(1.0).is_err());
    }
}
