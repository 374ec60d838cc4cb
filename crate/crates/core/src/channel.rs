//! Propagation: polarized antennas over a tapped ray trace, or the
//! statistical flat-fading abstraction with log-distance path loss.

use crate::error::{invalid, Result};
use crate::rng::{complex_normal, rng_from_seed, standard_normal, SimRng};
use crate::signal::{ComplexSignal, Origin};
use crate::special::{bessel_i0e, ln_gamma};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use rand_distr::{Distribution, Exp1, Gamma};

const SINC_TAPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct AntennaModel {
    pub h_gain: f64,
    pub v_gain: f64,
    pub h_phase: f64,
    pub v_phase: f64,
}

impl AntennaModel {
    pub fn horizontal() -> Self {
        Self {
            h_gain: 1.0,
            v_gain: 0.0,
            h_phase: 0.0,
            v_phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_gain * self.h_gain + self.v_gain * self.v_gain > 0.0) {
            return Err(invalid("antenna", "both polarization gains are zero"));
        }
        Ok(())
    }

    fn h(&self) -> Complex64 {
        Complex64::from_polar(self.h_gain, self.h_phase)
    }

    fn v(&self) -> Complex64 {
        Complex64::from_polar(self.v_gain, self.v_phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct RayPath {
    pub h_loss: Complex64,
    pub v_loss: Complex64,
    /// Seconds.
    pub delay: f64,
}

impl RayPath {
    pub fn validate(&self) -> Result<()> {
        if !(self.delay >= 0.0) || !self.delay.is_finite() {
            return Err(invalid("path delay", format!("{}", self.delay)));
        }
        if self.h_loss.norm() > 1.0 + 1e-12 || self.v_loss.norm() > 1.0 + 1e-12 {
            return Err(invalid("path gain", "magnitude above 1"));
        }
        Ok(())
    }
}

/// Noise floor in dBm/Hz, drawn as circular complex Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct NoiseModel {
    pub psd_dbm_per_hz: f64,
    pub seed: u64,
}

impl NoiseModel {
    /// One-sided `N_0` in W/Hz; sample power is taken in watts.
    pub fn watts_per_hz(&self) -> f64 {
        libm::pow(10.0, (self.psd_dbm_per_hz - 30.0) / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.psd_dbm_per_hz.is_finite() {
            return Err(invalid("noise PSD", format!("{}", self.psd_dbm_per_hz)));
        }
        Ok(())
    }

    pub fn add_to(&self, samples: &mut [Complex64], sample_rate: f64, rng: &mut SimRng) {
        let var = self.watts_per_hz() * sample_rate;
        for s in samples {
            *s += complex_normal(rng, var);
        }
    }
}

/// `y[n] ≈ x(n − d)` for a delay of `d` samples; 64-tap Blackman-windowed
/// sinc for the fractional part, normalized to unit DC gain.
fn fractional_delay_taps(frac: f64) -> Vec<f64> {
    let half = (SINC_TAPS / 2) as f64;
    let mut taps: Vec<f64> = (0..SINC_TAPS)
        .map(|i| {
            let k = i as f64 - (half - 1.0);
            let t = k - frac;
            let sinc = if t.abs() < 1e-12 { 1.0 } else { libm::sin(PI * t) / (PI * t) };
            // window centred on the fractional delay
            let u = (t + half) / (2.0 * half);
            let w = 0.42 - 0.5 * libm::cos(2.0 * PI * u) + 0.08 * libm::cos(4.0 * PI * u);
            sinc * w
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

fn add_delayed(out: &mut [Complex64], x: &[Complex64], gain: Complex64, delay_samples: f64) {
    let whole = libm::floor(delay_samples);
    let frac = delay_samples - whole;
    let whole = whole as usize;
    if frac.abs() < 1e-12 {
        for (i, v) in x.iter().enumerate() {
            if let Some(o) = out.get_mut(i + whole) {
                *o += gain * v;
            }
        }
        return;
    }
    let taps = fractional_delay_taps(frac);
    let first = -((SINC_TAPS / 2) as i64 - 1);
    for (n, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, t) in taps.iter().enumerate() {
            let idx = n as i64 - whole as i64 - (first + j as i64);
            if idx >= 0 && (idx as usize) < x.len() {
                acc += x[idx as usize] * t;
            }
        }
        *o += gain * acc;
    }
}

/// Sums delayed, polarization-weighted copies of `w` and adds noise.
///
/// Each path contributes `(tx_h rx_h h_i^h + tx_v rx_v h_i^v) · w(t − τ_i)`.
/// For passband envelopes the delay also rotates the carrier phase by
/// `e^{−j2πf_cτ}`. The output is long enough to hold the latest echo.
pub fn polarize_and_raytrace(
    w: &ComplexSignal,
    tx: &AntennaModel,
    rx: &AntennaModel,
    paths: &[RayPath],
    noise: Option<&NoiseModel>,
) -> Result<ComplexSignal> {
    tx.validate()?;
    rx.validate()?;
    if paths.is_empty() {
        return Err(invalid("ray trace", "no paths"));
    }
    for p in paths {
        p.validate()?;
    }
    let fs = w.sample_rate();
    let carrier = match w.origin() {
        Origin::Passband { carrier_hz } => carrier_hz,
        Origin::Baseband => 0.0,
    };
    let max_delay = paths.iter().map(|p| p.delay).fold(0.0, f64::max);
    let mut out = vec![Complex64::new(0.0, 0.0); w.len() + libm::ceil(max_delay * fs) as usize];
    for p in paths {
        let mut gain = tx.h() * rx.h() * p.h_loss + tx.v() * rx.v() * p.v_loss;
        if carrier > 0.0 && p.delay > 0.0 {
            gain *= Complex64::from_polar(1.0, -2.0 * PI * libm::fmod(carrier * p.delay, 1.0));
        }
        add_delayed(&mut out, w.samples(), gain, p.delay * fs);
    }
    if let Some(n) = noise {
        n.validate()?;
        let mut rng = rng_from_seed(n.seed);
        n.add_to(&mut out, fs, &mut rng);
    }
    Ok(w.with_samples(out))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct PathLossModel {
    /// Gain at the reference distance, dB (negative for a loss).
    pub ref_loss_db: f64,
    pub ref_distance_m: f64,
    pub exponent: f64,
    /// Log-normal shadowing spread in dB; zero disables it.
    #[cfg_attr(feature = "serde", serde(default))]
    pub shadowing_sigma_db: f64,
}

impl PathLossModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.ref_distance_m > 0.0) {
            return Err(invalid("reference distance", format!("{}", self.ref_distance_m)));
        }
        if !(self.exponent >= 0.0) {
            return Err(invalid("path-loss exponent", format!("{}", self.exponent)));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(invalid("shadowing", format!("{}", self.shadowing_sigma_db)));
        }
        Ok(())
    }
}

/// `α_pl(d_0) − 10η log10(d/d_0)`.
pub fn path_loss_db(d: f64, model: &PathLossModel) -> Result<f64> {
    model.validate()?;
    if !(d > 0.0) || !d.is_finite() {
        return Err(invalid("distance", format!("{d} m")));
    }
    Ok(model.ref_loss_db - 10.0 * model.exponent * libm::log10(d / model.ref_distance_m))
}

/// Path gain with an optional shadowing draw, as an amplitude factor.
pub fn path_gain(d: f64, model: &PathLossModel, rng: &mut SimRng) -> Result<f64> {
    let mut db = path_loss_db(d, model)?;
    if model.shadowing_sigma_db > 0.0 {
        db += model.shadowing_sigma_db * standard_normal(rng);
    }
    Ok(libm::pow(10.0, db / 20.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum FadingModel {
    Awgn,
    Rayleigh { omega: f64 },
    /// `k` is the LOS-to-scatter power ratio `n²`.
    Rician { omega: f64, k: f64 },
    Nakagami { omega: f64, m: f64 },
}

/// A density value, or the AWGN point mass which has none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingDensity {
    PointMass { at: f64 },
    Density(f64),
}

impl FadingModel {
    pub fn validate(&self) -> Result<()> {
        let omega = match *self {
            FadingModel::Awgn => return Ok(()),
            FadingModel::Rayleigh { omega } => omega,
            FadingModel::Rician { omega, k } => {
                if !(k >= 0.0) || !k.is_finite() {
                    return Err(invalid("Rician K", format!("{k}")));
                }
                omega
            }
            FadingModel::Nakagami { omega, m } => {
                if !(m >= 0.5) || !m.is_finite() {
                    return Err(invalid("Nakagami m", format!("{m} < 1/2")));
                }
                omega
            }
        };
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(invalid("fading Ω", format!("{omega}")));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        match *self {
            FadingModel::Awgn => 1.0,
            FadingModel::Rayleigh { omega }
            | FadingModel::Rician { omega, .. }
            | FadingModel::Nakagami { omega, .. } => omega,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FadingModel::Awgn => "awgn",
            FadingModel::Rayleigh { .. } => "rayleigh",
            FadingModel::Rician { .. } => "rician",
            FadingModel::Nakagami { .. } => "nakagami",
        }
    }
}

pub fn fading_pdf(alpha: f64, model: &FadingModel) -> Result<FadingDensity> {
    model.validate()?;
    if !(alpha >= 0.0) {
        return Err(invalid("fading amplitude", format!("{alpha}")));
    }
    let d = match *model {
        FadingModel::Awgn => return Ok(FadingDensity::PointMass { at: 1.0 }),
        FadingModel::Rayleigh { omega } => 2.0 * alpha / omega * libm::exp(-alpha * alpha / omega),
        FadingModel::Nakagami { omega, m } => {
            if alpha == 0.0 {
                if m == 0.5 {
                    libm::sqrt(2.0 / (PI * omega))
                } else {
                    0.0
                }
            } else {
                let ln = libm::log(2.0) + m * libm::log(m / omega) + (2.0 * m - 1.0) * libm::log(alpha)
                    - ln_gamma(m)
                    - m * alpha * alpha / omega;
                libm::exp(ln)
            }
        }
        FadingModel::Rician { omega, k } => {
            let arg = 2.0 * alpha * libm::sqrt(k * (1.0 + k) / omega);
            // I0(x) = I0e(x) e^x folded into the exponent
            let ln_rest = -k - (1.0 + k) * alpha * alpha / omega + arg;
            2.0 * (1.0 + k) * alpha / omega * libm::exp(ln_rest) * bessel_i0e(arg)?
        }
    };
    Ok(FadingDensity::Density(d))
}

/// Draws one amplitude `α_ch`.
pub fn fading_draw(model: &FadingModel, rng: &mut SimRng) -> Result<f64> {
    model.validate()?;
    Ok(match *model {
        FadingModel::Awgn => 1.0,
        FadingModel::Rayleigh { omega } => {
            let e: f64 = Exp1.sample(rng);
            libm::sqrt(omega * e)
        }
        FadingModel::Nakagami { omega, m } => {
            let g = Gamma::new(m, omega / m).map_err(|_| invalid("Nakagami m", format!("{m}")))?;
            libm::sqrt(g.sample(rng))
        }
        FadingModel::Rician { omega, k } => {
            let los = libm::sqrt(k * omega / (k + 1.0));
            let scatter = complex_normal(rng, omega / (k + 1.0));
            (Complex64::new(los, 0.0) + scatter).norm()
        }
    })
}

/// Seeded single draw.
pub fn fading_sample(model: &FadingModel, seed: u64) -> Result<f64> {
    fading_draw(model, &mut rng_from_seed(seed))
}

/// `w · α_pl(d) · α_ch + noise`, one fade per call (block fading).
pub fn apply_statistical_channel(
    w: &ComplexSignal,
    d: f64,
    pl: &PathLossModel,
    fm: &FadingModel,
    noise: Option<&NoiseModel>,
    seed: u64,
) -> Result<ComplexSignal> {
    let mut rng = rng_from_seed(seed);
    let gain = path_gain(d, pl, &mut rng)? * fading_draw(fm, &mut rng)?;
    let mut out: Vec<Complex64> = w.samples().iter().map(|v| v * gain).collect();
    if let Some(n) = noise {
        n.validate()?;
        n.add_to(&mut out, w.sample_rate(), &mut rng);
    }
    Ok(w.with_samples(out))
}
