//! Capture chain: RX nonlinearity, quadrature down-conversion, two-level
//! low-pass, decimation to the ADC rate and quantization; plus preamble
//! detection and the FFT fingerprint.

use crate::error::{invalid, Error, Result};
use crate::fft::{fft, fft_frequencies, fftshift, ifft};
use crate::rfchain::{pa_apply, MixerModel, PaPowerSeries};
use crate::signal::{ComplexSignal, Origin};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

/// Fraction of `W` used for the cosine transition below the cutoff.
const TRANSITION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LowPass {
    pub passband_gain: f64,
    pub stopband_gain: f64,
    /// `W`; `None` means half the ADC rate.
    #[cfg_attr(feature = "serde", serde(default))]
    pub cutoff_hz: Option<f64>,
}

impl LowPass {
    pub fn ideal() -> Self {
        Self {
            passband_gain: 1.0,
            stopband_gain: 0.0,
            cutoff_hz: None,
        }
    }

    /// Zero-phase amplitude response: `A_p` below `0.95 W`, `A_s` above `W`,
    /// raised-cosine in between.
    pub fn response(&self, f: f64, cutoff: f64) -> f64 {
        let f = f.abs();
        let edge = cutoff * (1.0 - TRANSITION);
        if f <= edge {
            self.passband_gain
        } else if f >= cutoff {
            self.stopband_gain
        } else {
            let t = (f - edge) / (cutoff - edge);
            let w = 0.5 * (1.0 + libm::cos(PI * t));
            self.stopband_gain + (self.passband_gain - self.stopband_gain) * w
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ReceiverProfile {
    pub pa_rx: PaPowerSeries,
    pub mixer: MixerModel,
    pub lpf: LowPass,
    pub adc_bits: u32,
    /// Per-rail full scale `V`.
    pub adc_full_scale: f64,
    pub sample_rate_hz: f64,
}

impl ReceiverProfile {
    pub fn ideal(sample_rate_hz: f64, carrier_hz: f64) -> Self {
        Self {
            pa_rx: PaPowerSeries::linear(1.0),
            mixer: MixerModel::ideal(carrier_hz),
            lpf: LowPass::ideal(),
            adc_bits: 24,
            adc_full_scale: 4.0,
            sample_rate_hz,
        }
    }

    pub fn cutoff(&self) -> f64 {
        self.lpf.cutoff_hz.unwrap_or(self.sample_rate_hz / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.pa_rx.validate()?;
        self.mixer.validate()?;
        if !(self.sample_rate_hz > 0.0) || !self.sample_rate_hz.is_finite() {
            return Err(invalid("ADC rate", format!("{}", self.sample_rate_hz)));
        }
        let w = self.cutoff();
        if !(w > 0.0) || w > self.sample_rate_hz / 2.0 * (1.0 + 1e-12) {
            return Err(invalid("LPF cutoff", format!("{w} Hz outside (0, fs/2]")));
        }
        if !(self.lpf.passband_gain > self.lpf.stopband_gain) || !(self.lpf.stopband_gain >= 0.0) {
            return Err(invalid("LPF gains", "need A_p > A_s ≥ 0"));
        }
        if self.adc_bits == 0 || self.adc_bits > 24 {
            return Err(invalid("ADC bits", format!("{}", self.adc_bits)));
        }
        if !(self.adc_full_scale > 0.0) {
            return Err(invalid("ADC full scale", format!("{}", self.adc_full_scale)));
        }
        Ok(())
    }

    /// Integer ratio between the simulation rate and the ADC rate.
    pub fn decimation(&self, input_rate: f64) -> Result<usize> {
        let d = input_rate / self.sample_rate_hz;
        let r = libm::round(d);
        if r < 1.0 || (d - r).abs() > 1e-9 * d {
            return Err(invalid(
                "ADC rate",
                format!("{} Hz does not divide the {input_rate} Hz input", self.sample_rate_hz),
            ));
        }
        Ok(r as usize)
    }

    /// Quantizes one rail, saturating at full scale. Returns the level and
    /// whether it clipped.
    pub fn quantize(&self, v: f64) -> (f64, bool) {
        let fsr = self.adc_full_scale;
        let step = 2.0 * fsr / libm::exp2(self.adc_bits as f64);
        let levels = 1i64 << self.adc_bits;
        let raw = libm::floor((v + fsr) / step) as i64;
        let code = raw.clamp(0, levels - 1);
        ((code as f64 + 0.5) * step - fsr, v.abs() > fsr)
    }

    /// `Σ_k |H(f + k f_s)|²` on an `n`-point grid at the ADC rate: white
    /// input noise of density `N_0` leaves the filter and decimator with
    /// density `N_0` times this. Natural FFT order.
    pub fn aliased_power_response(&self, input_rate: f64, n: usize) -> Result<Vec<f64>> {
        let d = self.decimation(input_rate)?;
        let fs = self.sample_rate_hz;
        let w = self.cutoff();
        Ok(fft_frequencies(n, fs)
            .iter()
            .map(|&f| {
                // aliases of f inside (−input_rate/2, input_rate/2]
                let mut acc = 0.0;
                let lo = -((d as i64 - 1) / 2) - 1;
                for k in lo..=(d as i64 / 2 + 1) {
                    let g = f + k as f64 * fs;
                    if g > -input_rate / 2.0 && g <= input_rate / 2.0 {
                        let h = self.lpf.response(g, w);
                        acc += h * h;
                    }
                }
                acc
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Capture {
    pub signal: ComplexSignal,
    /// Fraction of samples where either rail hit full scale.
    pub clip_fraction: f64,
}

impl Capture {
    pub fn ensure_unclipped(&self, full_scale: f64) -> Result<()> {
        if self.clip_fraction > 0.0 {
            let total = self.signal.len();
            let peak = self
                .signal
                .samples()
                .iter()
                .map(|v| v.re.abs().max(v.im.abs()))
                .fold(0.0, f64::max);
            return Err(Error::Clipping {
                clipped: libm::round(self.clip_fraction * total as f64) as usize,
                total,
                peak,
                full_scale,
            });
        }
        Ok(())
    }
}

/// RX front end up to (but excluding) the ADC: nonlinearity, quadrature
/// down-conversion `x = cos(ζ/2)·f + j sin(ζ/2)·f*`, low-pass and
/// decimation. Carrier mismatch between TX and RX shows up as a residual
/// frequency offset.
pub fn rx_analog(r: &ComplexSignal, profile: &ReceiverProfile) -> Result<ComplexSignal> {
    profile.validate()?;
    let carrier = match r.origin() {
        Origin::Passband { carrier_hz } => carrier_hz,
        Origin::Baseband => return Err(invalid("receiver input", "carrier not recorded")),
    };
    let d = profile.decimation(r.sample_rate())?;
    let f = if profile.pa_rx.is_linear() && profile.pa_rx.coefficients()[0] == Complex64::new(1.0, 0.0) {
        r.clone()
    } else {
        pa_apply(r, &profile.pa_rx, None)?
    };
    let (c, s) = profile.mixer.branch_gains();
    let j = Complex64::new(0.0, 1.0);
    let offset = carrier - profile.mixer.carrier_hz;
    let fs_in = r.sample_rate();
    let mut x: Vec<Complex64> = f
        .samples()
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let v = if offset != 0.0 {
                v * Complex64::from_polar(1.0, 2.0 * PI * libm::fmod(offset * n as f64 / fs_in, 1.0))
            } else {
                *v
            };
            v * c + j * s * v.conj()
        })
        .collect();
    let w = profile.cutoff();
    fft(&mut x);
    let freqs = fft_frequencies(x.len(), fs_in);
    for (v, fr) in x.iter_mut().zip(freqs) {
        *v *= profile.lpf.response(fr, w);
    }
    ifft(&mut x);
    let out: Vec<Complex64> = x.into_iter().step_by(d).collect();
    ComplexSignal::baseband(out, profile.sample_rate_hz)
}

/// Saturating mid-rise ADC on both rails.
pub fn adc(x: &ComplexSignal, profile: &ReceiverProfile) -> Capture {
    let mut clipped = 0usize;
    let samples: Vec<Complex64> = x
        .samples()
        .iter()
        .map(|v| {
            let (re, c1) = profile.quantize(v.re);
            let (im, c2) = profile.quantize(v.im);
            if c1 || c2 {
                clipped += 1;
            }
            Complex64::new(re, im)
        })
        .collect();
    let n = samples.len();
    Capture {
        signal: x.with_samples(samples),
        clip_fraction: clipped as f64 / n as f64,
    }
}

/// Full capture chain.
pub fn rx_capture(r: &ComplexSignal, profile: &ReceiverProfile) -> Result<Capture> {
    let x = rx_analog(r, profile)?;
    Ok(adc(&x, profile))
}

/// How the detector learns the noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseFloor {
    /// Variance of the first window.
    FirstWindow,
    Known(f64),
}

fn window_variance(x: &[Complex64]) -> f64 {
    let n = x.len() as f64;
    let mean: Complex64 = x.iter().sum::<Complex64>() / n;
    x.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / n
}

/// Start index of the first packet: the first sliding window whose
/// variance exceeds `k` times the noise floor, refined to the onset inside
/// that window by comparing against the next, fully occupied window.
pub fn detect_preamble(x: &[Complex64], window: usize, k: f64, floor: NoiseFloor) -> Result<usize> {
    if window < 2 || window > x.len() {
        return Err(invalid("detection window", format!("{window} for {} samples", x.len())));
    }
    if !(k > 1.0) {
        return Err(invalid("threshold factor", format!("{k} must exceed 1")));
    }
    let floor = match floor {
        NoiseFloor::FirstWindow => window_variance(&x[..window]),
        NoiseFloor::Known(v) if v >= 0.0 => v,
        NoiseFloor::Known(v) => return Err(invalid("noise floor", format!("{v}"))),
    };
    let threshold = k * floor;
    for i in 0..=(x.len() - window) {
        let v = window_variance(&x[i..i + window]);
        if v > threshold {
            let full = if i + 2 * window <= x.len() {
                window_variance(&x[i + window..i + 2 * window])
            } else {
                v
            };
            let q = ((v - floor) / (full - floor).max(f64::MIN_POSITIVE)).clamp(0.0, 1.0);
            let onset = i as f64 + window as f64 * (1.0 - q);
            return Ok(libm::round(onset) as usize);
        }
    }
    Err(Error::NoPreamble)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Normalization {
    None,
    UnitPower,
}

/// PSD feature over `n_fft` centred bins (`-fs/2 .. fs/2`).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FingerprintVector {
    pub psd: Vec<f64>,
    pub n_fft: usize,
    pub sample_rate_hz: f64,
    pub bandwidth_hz: f64,
    pub normalization: Normalization,
}

impl FingerprintVector {
    pub fn new(psd: Vec<f64>, sample_rate_hz: f64, normalization: Normalization) -> Result<Self> {
        if psd.is_empty() || psd.iter().any(|v| !v.is_finite()) {
            return Err(invalid("fingerprint", "empty or non-finite"));
        }
        Ok(Self {
            n_fft: psd.len(),
            psd,
            sample_rate_hz,
            bandwidth_hz: sample_rate_hz / 2.0,
            normalization,
        })
    }

    pub fn len(&self) -> usize {
        self.psd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psd.is_empty()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        fftshift(&fft_frequencies(self.n_fft, self.sample_rate_hz))
    }

    pub fn bin_width(&self) -> f64 {
        self.sample_rate_hz / self.n_fft as f64
    }

    /// PSD integrated over the band; equals the capture's mean power.
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.bin_width()
    }
}

/// `|X[k]|² / (L f_s)` with `x` zero-padded to `n_fft`; bins are centred.
pub fn psd_fingerprint(x: &[Complex64], sample_rate_hz: f64, n_fft: usize) -> Result<FingerprintVector> {
    if x.is_empty() {
        return Err(invalid("capture", "empty"));
    }
    if n_fft < x.len() {
        return Err(Error::FftTooShort {
            n_fft,
            len: x.len(),
        });
    }
    if !(sample_rate_hz > 0.0) {
        return Err(invalid("sample rate", format!("{sample_rate_hz}")));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    buf[..x.len()].copy_from_slice(x);
    fft(&mut buf);
    let scale = 1.0 / (x.len() as f64 * sample_rate_hz);
    let psd: Vec<f64> = buf.iter().map(|v| v.norm_sqr() * scale).collect();
    FingerprintVector::new(fftshift(&psd), sample_rate_hz, Normalization::None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lpf_two_level_response() {
        let lp = LowPass {
            passband_gain: 1.0,
            stopband_gain: 0.01,
            cutoff_hz: Some(1e6),
        };
        assert_eq!(lp.response(0.5e6, 1e6), 1.0);
        assert_eq!(lp.response(-2e6, 1e6), 0.01);
        let mid = lp.response(0.975e6, 1e6);
        assert!(mid < 1.0 && mid > 0.01);
    }

    #[test]
    fn adc_saturates_and_counts() {
        let p = ReceiverProfile {
            adc_bits: 4,
            adc_full_scale: 1.0,
            ..ReceiverProfile::ideal(1e6, 1e9)
        };
        let x = ComplexSignal::baseband(
            vec![Complex64::new(2.0, 0.0), Complex64::new(0.3, 0.0)],
            1e6,
        )
        .unwrap();
        let c = adc(&x, &p);
        assert_eq!(c.clip_fraction, 0.5);
        assert_eq!(c.signal.samples()[0].re, 1.0 - 0.0625);
        assert!((c.signal.samples()[1].re - 0.3).abs() <= 0.0625);
        assert!(c.ensure_unclipped(1.0).is_err());
    }

    #[test]
    fn rejects_short_fft_and_empty() {
        let x = vec![Complex64::new(1.0, 0.0); 8];
        assert!(matches!(psd_fingerprint(&x, 1.0, 4), Err(Error::FftTooShort { .. })));
        assert!(psd_fingerprint(&[], 1.0, 4).is_err());
    }

    #[test]
    fn non_integer_decimation_rejected() {
        let p = ReceiverProfile::ideal(3e6, 1e9);
        assert!(p.decimation(8e6).is_err());
        assert_eq!(ReceiverProfile::ideal(2e6, 1e9).decimation(8e6).unwrap(), 4);
    }

    #[test]
    fn aliased_response_is_flat_for_ideal_half_band() {
        let p = ReceiverProfile::ideal(2e6, 1e9);
        let r = p.aliased_power_response(16e6, 64).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-12);
        let lossy = ReceiverProfile {
            lpf: LowPass {
                passband_gain: 1.0,
                stopband_gain: 0.1,
                cutoff_hz: None,
            },
            ..p
        };
        // seven stopband aliases fold onto each passband bin
        let r = lossy.aliased_power_response(16e6, 64).unwrap();
        assert!((r[0] - 1.07).abs() < 1e-12);
    }
}
