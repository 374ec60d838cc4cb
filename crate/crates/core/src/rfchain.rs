//! Up-conversion with quadrature error and the odd-order power-series PA.
//!
//! Everything runs on complex envelopes referenced to the carrier. A real RF
//! nonlinearity `Σ a_k x^k` maps the envelope `z` to
//! `w = Σ_n c_n |z|^{2n} z` in the first zone, with
//! `c_n = a_{2n+1} C(2n+1, n+1) / 2^{2n}`.

use crate::error::{invalid, Error, Result};
use crate::fft::{fft, fftshift, fft_frequencies, ifft};
use crate::optimize::nelder_mead;
use crate::signal::{ComplexSignal, Origin};
use crate::spectrum::{segment_starts, to_db, Psd, Window};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct MixerModel {
    pub carrier_hz: f64,
    /// Phase imbalance `ζ` between the I and Q branches, radians.
    pub quadrature_error: f64,
}

impl MixerModel {
    pub fn ideal(carrier_hz: f64) -> Self {
        Self {
            carrier_hz,
            quadrature_error: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz > 0.0) || !self.carrier_hz.is_finite() {
            return Err(invalid("carrier", format!("{} Hz", self.carrier_hz)));
        }
        if !(self.quadrature_error.abs() < FRAC_PI_2) {
            return Err(invalid(
                "quadrature error",
                format!("|{}| must be below π/2", self.quadrature_error),
            ));
        }
        Ok(())
    }

    /// `(cos ζ/2, sin ζ/2)`: the envelope picks up `c·y + j s·y*`.
    pub fn branch_gains(&self) -> (f64, f64) {
        let h = 0.5 * self.quadrature_error;
        (libm::cos(h), libm::sin(h))
    }

    /// Power of the mirror image relative to the wanted signal.
    pub fn image_rejection_ratio(&self) -> f64 {
        let t = libm::tan(0.5 * self.quadrature_error);
        t * t
    }
}

/// Real passband `I cos(ωt + ζ/2) − Q sin(ωt − ζ/2)`, represented by its
/// complex envelope `I e^{jζ/2} + jQ e^{−jζ/2}`.
pub fn mix_up(baseband: &ComplexSignal, mixer: &MixerModel) -> Result<ComplexSignal> {
    mixer.validate()?;
    if let Origin::Passband { .. } = baseband.origin() {
        return Err(invalid("mixer input", "already a passband signal"));
    }
    let (c, s) = mixer.branch_gains();
    let j = Complex64::new(0.0, 1.0);
    let out = baseband
        .samples()
        .iter()
        .map(|y| y * c + j * s * y.conj())
        .collect();
    ComplexSignal::new(
        out,
        baseband.sample_rate(),
        Origin::Passband {
            carrier_hz: mixer.carrier_hz,
        },
    )
}

fn binomial(n: u64, k: u64) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Odd-order memoryless power series `a_1, a_3, …, a_N`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct PaPowerSeries {
    coefficients: Vec<Complex64>,
}

impl PaPowerSeries {
    pub fn new(odd_coefficients: Vec<Complex64>) -> Result<Self> {
        let s = Self {
            coefficients: odd_coefficients,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn linear(gain: f64) -> Self {
        Self {
            coefficients: vec![Complex64::new(gain, 0.0)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.is_empty() || self.coefficients.len() > 5 {
            return Err(invalid(
                "power series",
                format!("{} odd coefficients, need 1..=5 (order ≤ 9)", self.coefficients.len()),
            ));
        }
        if self.coefficients[0].norm() == 0.0 {
            return Err(invalid("power series", "a_1 must be non-zero"));
        }
        if self.coefficients.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(invalid("power series", "non-finite coefficient"));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Highest odd order `N`.
    pub fn order(&self) -> usize {
        2 * self.coefficients.len() - 1
    }

    pub fn is_linear(&self) -> bool {
        self.coefficients[1..].iter().all(|c| c.norm() == 0.0)
    }

    /// First-zone envelope gains `c_n`.
    pub fn envelope_gains(&self) -> Vec<Complex64> {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(n, a)| {
                let n = n as u64;
                a * binomial(2 * n + 1, n + 1) / libm::exp2(2.0 * n as f64)
            })
            .collect()
    }

    /// Envelope output for one sample.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        apply_with(&self.envelope_gains(), z)
    }
}

fn apply_with(gains: &[Complex64], z: Complex64) -> Complex64 {
    let p = z.norm_sqr();
    let mut pk = 1.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for c in gains {
        acc += c * pk;
        pk *= p;
    }
    acc * z
}

/// Ideal brick wall `|f − f_c| < W_c` in absolute frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct BandpassFilter {
    pub center_hz: f64,
    pub half_bandwidth_hz: f64,
}

impl BandpassFilter {
    pub fn passes(&self, absolute_hz: f64) -> bool {
        (absolute_hz - self.center_hz).abs() < self.half_bandwidth_hz
    }

    /// Applies the brick wall to an envelope. A no-op when the whole
    /// simulated band is inside the passband.
    pub fn apply(&self, signal: &ComplexSignal) -> Result<ComplexSignal> {
        if !(self.half_bandwidth_hz > 0.0) {
            return Err(invalid("bandpass width", format!("{}", self.half_bandwidth_hz)));
        }
        let carrier = match signal.origin() {
            Origin::Passband { carrier_hz } => carrier_hz,
            Origin::Baseband => 0.0,
        };
        let freqs = fft_frequencies(signal.len(), signal.sample_rate());
        if freqs.iter().all(|f| self.passes(carrier + f)) {
            return Ok(signal.clone());
        }
        let mut buf = signal.samples().to_vec();
        fft(&mut buf);
        for (v, f) in buf.iter_mut().zip(&freqs) {
            if !self.passes(carrier + f) {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        ifft(&mut buf);
        Ok(signal.with_samples(buf))
    }
}

/// Applies the series sample by sample, then the bandpass.
///
/// Fails with [`Error::Divergence`] when the combined higher-order output
/// carries more power than the linear term, which is where a truncated
/// series stops being a credible PA model (roughly `|a_3||z|² ≥ |a_1|`).
pub fn pa_apply(
    passband: &ComplexSignal,
    pa: &PaPowerSeries,
    bp: Option<&BandpassFilter>,
) -> Result<ComplexSignal> {
    pa.validate()?;
    let gains = pa.envelope_gains();
    let mut linear_power = 0.0;
    let mut excess_power = 0.0;
    let out: Vec<Complex64> = passband
        .samples()
        .iter()
        .map(|&z| {
            let w = apply_with(&gains, z);
            let lin = gains[0] * z;
            linear_power += lin.norm_sqr();
            excess_power += (w - lin).norm_sqr();
            w
        })
        .collect();
    if excess_power > linear_power {
        return Err(Error::Divergence {
            ratio: excess_power / linear_power.max(f64::MIN_POSITIVE),
        });
    }
    let w = passband.with_samples(out);
    match bp {
        Some(bp) => bp.apply(&w),
        None => Ok(w),
    }
}

/// Closed-form PSD of the PA output assembled from cross-spectra of the
/// envelope basis functions `z_n = |z|^{2n} z`.
///
/// Each `Ŝ_nm` is the Welch cross-spectrum of `z_n` and `z_m` (Hann
/// segments, 50 % overlap), i.e. the Fourier transform of their windowed
/// cross-correlation, normalized by the window energy.
#[derive(Debug, Clone, PartialEq)]
pub struct RegrowthSpectrum {
    /// Absolute frequency grid, centred on the carrier.
    pub frequencies: Vec<f64>,
    pub psd: Vec<f64>,
    /// `terms[n * K + m]` holds `Ŝ_(2n+1)(2m+1)` on the same grid.
    pub component_terms: Vec<Vec<Complex64>>,
    pub orders: usize,
}

impl RegrowthSpectrum {
    /// Input-only part of the computation; `pa` only weights the terms.
    pub fn terms(baseband: &ComplexSignal, orders: usize, segment: usize) -> Result<Self> {
        if orders == 0 || orders > 5 {
            return Err(invalid("series length", format!("{orders}")));
        }
        let x = baseband.samples();
        if x.len() < 2 * segment {
            return Err(Error::WindowTooShort {
                len: x.len(),
                order: 2 * orders - 1,
            });
        }
        let starts = segment_starts(x.len(), segment)?;
        let w = Window::Hann.coefficients(segment);
        let norm = w.iter().map(|v| v * v).sum::<f64>() * baseband.sample_rate() * starts.len() as f64;
        let mut terms = vec![vec![Complex64::new(0.0, 0.0); segment]; orders * orders];
        let mut spectra = vec![vec![Complex64::new(0.0, 0.0); segment]; orders];
        for &s in &starts {
            for (n, buf) in spectra.iter_mut().enumerate() {
                for i in 0..segment {
                    let z = x[s + i];
                    buf[i] = z * libm::pow(z.norm_sqr(), n as f64) * w[i];
                }
                fft(buf);
            }
            for n in 0..orders {
                for m in 0..orders {
                    let t = &mut terms[n * orders + m];
                    for k in 0..segment {
                        t[k] += spectra[n][k] * spectra[m][k].conj();
                    }
                }
            }
        }
        for t in &mut terms {
            for v in t.iter_mut() {
                *v /= norm;
            }
            *t = fftshift(t);
        }
        let carrier = match baseband.origin() {
            Origin::Passband { carrier_hz } => carrier_hz,
            Origin::Baseband => 0.0,
        };
        let frequencies = fftshift(&fft_frequencies(segment, baseband.sample_rate()))
            .into_iter()
            .map(|f| f + carrier)
            .collect();
        Ok(Self {
            frequencies,
            psd: vec![0.0; segment],
            component_terms: terms,
            orders,
        })
    }

    /// `S_FE(f) = Σ_n Σ_m c_n c_m* Ŝ_nm(f)` for the given series.
    pub fn predict(&self, pa: &PaPowerSeries) -> Result<Vec<f64>> {
        let gains = pa.envelope_gains();
        if gains.len() > self.orders {
            return Err(Error::DimensionMismatch {
                expected: self.orders,
                found: gains.len(),
            });
        }
        Ok(self.predict_gains(&gains))
    }

    fn predict_gains(&self, gains: &[Complex64]) -> Vec<f64> {
        let k = self.orders;
        let mut out = vec![0.0; self.frequencies.len()];
        for (n, cn) in gains.iter().enumerate() {
            for (m, cm) in gains.iter().enumerate() {
                let w = cn * cm.conj();
                for (o, s) in out.iter_mut().zip(&self.component_terms[n * k + m]) {
                    *o += (w * s).re;
                }
            }
        }
        for o in &mut out {
            *o = o.max(0.0);
        }
        out
    }

    pub fn to_psd(&self) -> Psd {
        Psd {
            frequencies: self.frequencies.clone(),
            values: self.psd.clone(),
        }
    }
}

/// Regrowth spectrum of `pa` driven by `baseband`, on a `segment`-point grid.
pub fn regrowth_spectrum(
    baseband: &ComplexSignal,
    pa: &PaPowerSeries,
    segment: usize,
) -> Result<RegrowthSpectrum> {
    pa.validate()?;
    let mut s = RegrowthSpectrum::terms(baseband, pa.coefficients().len(), segment)?;
    s.psd = s.predict(pa)?;
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Bins more than this far below the measured peak are ignored.
    pub dynamic_range_db: f64,
    pub max_condition: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            dynamic_range_db: 90.0,
            max_condition: 1e12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaFit {
    pub series: PaPowerSeries,
    /// RMS dB error over the fitted bins.
    pub residual_db: f64,
    pub iterations: usize,
    /// Singular-value ratio of the residual Jacobian in scaled coordinates.
    pub condition: f64,
}

/// Fits an order-`order` series so that the closed-form PSD driven by
/// `reference` matches `measured` in the dB domain.
///
/// `a_1` is kept real because a common phase rotation of all coefficients
/// does not change any PSD. The measured grid must be the Welch grid the
/// reference produces for the same segment length.
pub fn fit_pa_coefficients(
    measured: &Psd,
    reference: &ComplexSignal,
    order: usize,
    options: &FitOptions,
) -> Result<PaFit> {
    if order.is_multiple_of(2) || order > 9 {
        return Err(invalid("fit order", format!("{order} must be odd and ≤ 9")));
    }
    let k = order.div_ceil(2);
    let segment = measured.values.len();
    let terms = RegrowthSpectrum::terms(reference, k, segment)?;
    let df = reference.sample_rate() / segment as f64;
    for (a, b) in terms.frequencies.iter().zip(&measured.frequencies) {
        if (a - b).abs() > 1e-6 * df {
            return Err(invalid("measured grid", "does not match the reference Welch grid"));
        }
    }
    let peak = measured.values.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(invalid("measured PSD", "no positive bins"));
    }
    let floor = peak * libm::pow(10.0, -options.dynamic_range_db / 10.0);
    let bins: Vec<usize> = (0..segment).filter(|&i| measured.values[i] >= floor).collect();
    let target: Vec<f64> = bins.iter().map(|&i| to_db(measured.values[i])).collect();

    let linear = terms.predict_gains(&[Complex64::new(1.0, 0.0)]);
    let a1 = libm::sqrt(
        bins.iter().map(|&i| measured.values[i]).sum::<f64>()
            / bins.iter().map(|&i| linear[i]).sum::<f64>().max(f64::MIN_POSITIVE),
    );
    // step each coefficient so that it alone adds ~10 % of the linear output
    let x = reference.samples();
    let mut scale = vec![0.05 * a1];
    for n in 1..k {
        let moment = x.iter().map(|z| libm::pow(z.norm_sqr(), n as f64)).sum::<f64>() / x.len() as f64;
        let c = binomial(2 * n as u64 + 1, n as u64 + 1) / libm::exp2(2.0 * n as f64);
        let s = 0.1 * a1 / (c * moment).max(1e-12);
        scale.push(s);
        scale.push(s);
    }

    let unpack = |u: &[f64]| -> Vec<Complex64> {
        let mut coeffs = vec![Complex64::new(u[0] * scale[0], 0.0)];
        for n in 1..k {
            coeffs.push(Complex64::new(
                u[2 * n - 1] * scale[2 * n - 1],
                u[2 * n] * scale[2 * n],
            ));
        }
        coeffs
    };
    let residuals = |u: &[f64]| -> Vec<f64> {
        let series = PaPowerSeries {
            coefficients: unpack(u),
        };
        let pred = terms.predict_gains(&series.envelope_gains());
        bins.iter()
            .zip(&target)
            .map(|(&i, t)| to_db(pred[i]) - t)
            .collect()
    };
    let loss = |u: &[f64]| -> f64 {
        let r = residuals(u);
        r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64
    };

    let dim = 2 * k - 1;
    let mut u = vec![0.0; dim];
    u[0] = a1 / scale[0];
    let mut iterations = 0;
    let mut converged = false;
    let mut best = loss(&u);
    let mut step = 1.0;
    // restarts shake the simplex out of premature collapse
    for _ in 0..6 {
        let m = nelder_mead(&loss, &u, &vec![step; dim], 1e-14, options.max_iterations);
        iterations += m.iterations;
        let improved = best - m.value;
        if m.value <= best {
            u = m.x;
            best = m.value;
        }
        converged = m.converged;
        if converged && improved.abs() <= 1e-12 * (1.0 + best) {
            break;
        }
        step *= 0.3;
    }
    let residual_db = libm::sqrt(best);
    if !converged {
        return Err(Error::FitDidNotConverge {
            iterations,
            residual_db,
        });
    }

    // Jacobian of the dB residuals in scaled coordinates
    let r0 = residuals(&u);
    let mut jac = DMatrix::<f64>::zeros(r0.len(), dim);
    for p in 0..dim {
        let h = 1e-6 * (1.0 + u[p].abs());
        let mut up = u.clone();
        up[p] += h;
        let mut dn = u.clone();
        dn[p] -= h;
        let rp = residuals(&up);
        let rd = residuals(&dn);
        for i in 0..r0.len() {
            jac[(i, p)] = (rp[i] - rd[i]) / (2.0 * h);
        }
    }
    let sv = jac.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > options.max_condition {
        return Err(Error::IllConditioned { condition });
    }
    Ok(PaFit {
        series: PaPowerSeries {
            coefficients: unpack(&u),
        },
        residual_db,
        iterations,
        condition,
    })
}

/// Convenience TX front end: mixer, PA, optional bandpass.
pub fn transmit(
    baseband: &ComplexSignal,
    mixer: &MixerModel,
    pa: &PaPowerSeries,
    bp: Option<&BandpassFilter>,
) -> Result<ComplexSignal> {
    let z = mix_up(baseband, mixer)?;
    pa_apply(&z, pa, bp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_gains_follow_binomial_law() {
        let pa = PaPowerSeries::new(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ])
        .unwrap();
        let g = pa.envelope_gains();
        assert!((g[1].re - 0.75).abs() < 1e-15);
        assert!((g[2].re - 10.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_even_or_long_series() {
        assert!(PaPowerSeries::new(vec![Complex64::new(0.0, 0.0)]).is_err());
        assert!(PaPowerSeries::new(vec![Complex64::new(1.0, 0.0); 6]).is_err());
    }

    #[test]
    fn ideal_mixer_is_identity_on_envelope() {
        let y = ComplexSignal::baseband(vec![Complex64::new(0.3, -0.4); 4], 1e6).unwrap();
        let z = mix_up(&y, &MixerModel::ideal(2.4e9)).unwrap();
        assert_eq!(z.samples(), y.samples());
        assert_eq!(z.origin(), Origin::Passband { carrier_hz: 2.4e9 });
    }

    #[test]
    fn divergence_detected() {
        let z = ComplexSignal::new(
            vec![Complex64::new(1.0, 0.0); 8],
            1e6,
            Origin::Passband { carrier_hz: 1e9 },
        )
        .unwrap();
        let pa = PaPowerSeries::new(vec![Complex64::new(1.0, 0.0), Complex64::new(-3.0, 0.0)]).unwrap();
        assert!(matches!(pa_apply(&z, &pa, None), Err(Error::Divergence { .. })));
    }
}
