//! Closed-form error rates used as oracles against the simulator.
//!
//! Identification is an energy detector on the difference vector: with
//! `2μ` real degrees of freedom and unit noise variance per dimension,
//! `Y = Σ (n_i + s_i)²` and an imposter is rejected when `Y > λ`. With
//! `‖s‖² = 2γ` this gives
//!
//! - FRR `= Q(μ, λ/2)` (regularized upper incomplete gamma),
//! - GRR `= Q_μ(√(2γ), √λ)` in AWGN, averaged over the fading law otherwise.
//!
//! `γ` is the mean total SNR of the difference vector; a fading model with
//! `Ω ≠ 1` scales it to `γΩ`.
//!
//! Rayleigh, rearranged so that no term cancels:
//! `Q(μ−1, λ/2) + ((1+γ)/γ)^{μ−1} e^{−λ/(2(1+γ))} P(μ−1, λγ/(2(1+γ)))`.
//!
//! Nakagami-m, with `y = λ/2` and `p = γ/(m+γ)`:
//! `G_1 + e^{−y} (m/(m+γ))^m Σ_{n=1}^{μ−1} y^n/n! ₁F₁(m; n+1; y p)`, where
//! `G_1 = Σ_k NB(k; m, p) Q(1+k, y)` is the `μ = 1` detection probability.
//!
//! Rician-K: `Q_1(√(2Kγ/(K+1+γ)), √(λ(K+1)/(K+1+γ)))` for `μ = 1`; adaptive
//! quadrature of the AWGN result over the Rician density for `μ > 1`.

use crate::channel::{fading_draw, fading_pdf, FadingDensity, FadingModel};
use crate::error::{invalid, Error, Result};
use crate::quad::integrate_to_infinity;
use crate::rng::{rng_from_seed, standard_normal};
use crate::special::{gamma_q, ln_gamma, ln_gamma_p, q_function};
use alloc::format;
use alloc::vec::Vec;

pub use crate::special::{bessel_i0, hyp1f1, incomplete_gamma_upper, marcum_q};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentAnalyticsParams {
    pub snr_gamma: f64,
    pub threshold: f64,
    pub time_bandwidth: u32,
    pub channel: FadingModel,
}

impl IdentAnalyticsParams {
    fn validate(&self) -> Result<()> {
        if !(self.snr_gamma >= 0.0) || !self.snr_gamma.is_finite() {
            return Err(invalid("γ", format!("{}", self.snr_gamma)));
        }
        if !(self.threshold >= 0.0) || !self.threshold.is_finite() {
            return Err(invalid("λ", format!("{}", self.threshold)));
        }
        if self.time_bandwidth == 0 {
            return Err(invalid("μ", "must be at least 1"));
        }
        self.channel.validate()
    }
}

/// Time-bandwidth product of an `L`-sample capture observed over `f_s/2`.
pub fn time_bandwidth_for(capture_len: usize) -> u32 {
    (capture_len / 2).max(1) as u32
}

/// `P(Y > λ | genuine) = Q(μ, λ/2)`.
pub fn frr(lambda: f64, mu: u32) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(invalid("λ", format!("{lambda}")));
    }
    if mu == 0 {
        return Err(invalid("μ", "must be at least 1"));
    }
    gamma_q(mu as f64, lambda / 2.0)
}

fn grr_awgn(gamma: f64, lambda: f64, mu: u32) -> Result<f64> {
    marcum_q(mu as f64, libm::sqrt(2.0 * gamma), libm::sqrt(lambda))
}

fn grr_rayleigh(gamma: f64, lambda: f64, mu: u32) -> Result<f64> {
    if gamma == 0.0 {
        return gamma_q(mu as f64, lambda / 2.0);
    }
    let lead = libm::exp(-lambda / (2.0 * (1.0 + gamma)));
    if mu == 1 {
        return Ok(lead);
    }
    let s = (mu - 1) as f64;
    let z = lambda * gamma / (2.0 * (1.0 + gamma));
    let tail = gamma_q(s, lambda / 2.0)?;
    if z == 0.0 {
        return Ok(tail);
    }
    let ln = s * libm::log((1.0 + gamma) / gamma) - lambda / (2.0 * (1.0 + gamma)) + ln_gamma_p(s, z)?;
    Ok((tail + libm::exp(ln)).clamp(0.0, 1.0))
}

/// `Σ_k NB(k; m, p) f(k)` until the remaining mass is below 1e-16.
fn negative_binomial_mixture<F: FnMut(u64) -> Result<f64>>(m: f64, p: f64, mut f: F) -> Result<f64> {
    if p == 0.0 {
        return f(0);
    }
    let ln_q = m * libm::log1p(-p);
    let ln_p = libm::log(p);
    let mut total = 0.0;
    let mut mass = 0.0;
    for k in 0..2_000_000u64 {
        let kf = k as f64;
        let ln_w = ln_gamma(m + kf) - ln_gamma(m) - ln_gamma(kf + 1.0) + ln_q + kf * ln_p;
        let w = libm::exp(ln_w);
        total += w * f(k)?;
        mass += w;
        if 1.0 - mass < 1e-16 && kf > m * p / (1.0 - p) {
            return Ok(total);
        }
    }
    Err(Error::OutOfRange {
        function: "grr",
        detail: format!("negative-binomial series did not converge (m={m}, p={p})"),
    })
}

fn grr_nakagami(gamma: f64, lambda: f64, mu: u32, m: f64) -> Result<f64> {
    let y = lambda / 2.0;
    let p = gamma / (m + gamma);
    let g1 = negative_binomial_mixture(m, p, |k| gamma_q(1.0 + k as f64, y))?;
    let mut sum = 0.0;
    let ln_beta = -y + m * libm::log(m / (m + gamma));
    for n in 1..mu {
        let nf = n as f64;
        let ln_term = nf * libm::log(y) - ln_gamma(nf + 1.0) + ln_beta;
        sum += libm::exp(ln_term) * hyp1f1(m, nf + 1.0, y * p)?;
    }
    Ok((g1 + sum).clamp(0.0, 1.0))
}

/// Independent route for Nakagami: the full mixture
/// `Σ_k NB(k; m, γ/(m+γ)) Q(μ+k, λ/2)`.
pub fn grr_nakagami_mixture(gamma: f64, lambda: f64, mu: u32, m: f64) -> Result<f64> {
    negative_binomial_mixture(m, gamma / (m + gamma), |k| gamma_q(mu as f64 + k as f64, lambda / 2.0))
}

fn grr_rician(gamma: f64, lambda: f64, mu: u32, k: f64) -> Result<f64> {
    if mu == 1 {
        let den = k + 1.0 + gamma;
        return marcum_q(1.0, libm::sqrt(2.0 * k * gamma / den), libm::sqrt(lambda * (k + 1.0) / den));
    }
    grr_by_quadrature(gamma, lambda, mu, &FadingModel::Rician { omega: 1.0, k })
}

/// `∫ Q_μ(√(2γ)α, √λ) p(α) dα` for any fading law (with `Ω` folded into γ
/// by the caller).
pub fn grr_by_quadrature(gamma: f64, lambda: f64, mu: u32, channel: &FadingModel) -> Result<f64> {
    let failure = core::cell::Cell::new(None);
    let v = integrate_to_infinity(
        |a| {
            let density = match fading_pdf(a, channel) {
                Ok(FadingDensity::Density(d)) => d,
                _ => return 0.0,
            };
            if density == 0.0 {
                return 0.0;
            }
            match marcum_q(mu as f64, libm::sqrt(2.0 * gamma) * a, libm::sqrt(lambda)) {
                Ok(q) => q * density,
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        },
        0.0,
        1e-12,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Genuine-reject rate `P(Y > λ | imposter)` for the configured channel.
pub fn grr(params: &IdentAnalyticsParams) -> Result<f64> {
    params.validate()?;
    let gamma = params.snr_gamma * params.channel.omega();
    let (lambda, mu) = (params.threshold, params.time_bandwidth);
    match params.channel {
        FadingModel::Awgn => grr_awgn(params.snr_gamma, lambda, mu),
        FadingModel::Rayleigh { .. } => grr_rayleigh(gamma, lambda, mu),
        FadingModel::Nakagami { m, .. } => grr_nakagami(gamma, lambda, mu, m),
        FadingModel::Rician { k, .. } => grr_rician(gamma, lambda, mu, k),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

impl TheoryPoint {
    pub fn gar(&self) -> f64 {
        1.0 - self.frr
    }

    pub fn grr(&self) -> f64 {
        1.0 - self.far
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryRoc {
    pub points: Vec<TheoryPoint>,
    pub eer: f64,
    pub eer_threshold: f64,
}

fn point(gamma: f64, lambda: f64, mu: u32, channel: FadingModel) -> Result<TheoryPoint> {
    let g = grr(&IdentAnalyticsParams {
        snr_gamma: gamma,
        threshold: lambda,
        time_bandwidth: mu,
        channel,
    })?;
    Ok(TheoryPoint {
        threshold: lambda,
        far: 1.0 - g,
        frr: frr(lambda, mu)?,
    })
}

/// ROC over the `lambdas` grid plus the EER, found by bisection on
/// `FAR(λ) − FRR(λ)`, which increases with `λ`.
pub fn theoretical_roc(gamma: f64, mu: u32, channel: FadingModel, lambdas: &[f64]) -> Result<TheoryRoc> {
    let points = lambdas
        .iter()
        .map(|&l| point(gamma, l, mu, channel))
        .collect::<Result<Vec<_>>>()?;
    let gap = |l: f64| point(gamma, l, mu, channel).map(|p| p.far - p.frr);
    let mut lo = 0.0;
    let mut hi = 2.0 * mu as f64 + 2.0 * gamma * channel.omega() + 10.0;
    while gap(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::OutOfRange {
                function: "theoretical_roc",
                detail: "EER bracket not found".into(),
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * (1.0 + hi) {
            break;
        }
    }
    let p = point(gamma, 0.5 * (lo + hi), mu, channel)?;
    Ok(TheoryRoc {
        points,
        eer: 0.5 * (p.far + p.frr),
        eer_threshold: p.threshold,
    })
}

/// How the two reference fingerprints relate to the test gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceGain {
    /// References captured once at this power gain (fixed database).
    Enrollment(f64),
    /// References at the test location's mean power gain `α_pl² Ω`.
    Matched,
}

/// Two-device classification setup. A capture of device `i` is
/// `g · U_i + N` with `g = α_pl² α_ch²` (the feature is a PSD, so it scales
/// with power) and `N ~ N(0, σ² I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassAnalyticsParams {
    /// `Ũ·H_tx^i` for the two devices, at unit gain.
    pub devices: [Vec<f64>; 2],
    /// Amplitude path gain `α_pl`.
    pub path_gain: f64,
    pub noise_variance: f64,
    pub channel: FadingModel,
    pub priors: [f64; 2],
    pub reference: ReferenceGain,
}

impl ClassAnalyticsParams {
    fn validate(&self) -> Result<()> {
        if self.devices[0].len() != self.devices[1].len() || self.devices[0].is_empty() {
            return Err(Error::DimensionMismatch {
                expected: self.devices[0].len(),
                found: self.devices[1].len(),
            });
        }
        if !(self.noise_variance > 0.0) {
            return Err(invalid("noise variance", format!("{}", self.noise_variance)));
        }
        if (self.priors[0] + self.priors[1] - 1.0).abs() > 1e-12 || self.priors.iter().any(|p| !(*p >= 0.0)) {
            return Err(invalid("priors", "must be non-negative and sum to 1"));
        }
        if !(self.path_gain > 0.0) {
            return Err(invalid("path gain", format!("{}", self.path_gain)));
        }
        self.channel.validate()
    }

    fn references(&self) -> [Vec<f64>; 2] {
        let g = match self.reference {
            ReferenceGain::Enrollment(g) => g,
            ReferenceGain::Matched => self.path_gain * self.path_gain * self.channel.omega(),
        };
        [scale(&self.devices[0], g), scale(&self.devices[1], g)]
    }

    /// Error probability given the fade `α_ch`.
    fn conditional_error(&self, alpha: f64, refs: &[Vec<f64>; 2]) -> f64 {
        let g = self.path_gain * self.path_gain * alpha * alpha;
        let delta: Vec<f64> = refs[1].iter().zip(&refs[0]).map(|(b, a)| b - a).collect();
        let dn = norm(&delta);
        if dn == 0.0 {
            return 0.5;
        }
        let c = dot(&refs[1], &refs[1]) - dot(&refs[0], &refs[0]);
        let sigma = libm::sqrt(self.noise_variance);
        let m1 = 2.0 * g * dot(&self.devices[0], &delta);
        let m2 = 2.0 * g * dot(&self.devices[1], &delta);
        // device 0 errs when 2SᵀΔ > c; device 1 when 2SᵀΔ < c
        let e1 = q_function((c - m1) / (2.0 * sigma * dn));
        let e2 = q_function((m2 - c) / (2.0 * sigma * dn));
        self.priors[0] * e1 + self.priors[1] * e2
    }
}

fn scale(x: &[f64], g: f64) -> Vec<f64> {
    x.iter().map(|v| v * g).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassErrorMethod {
    /// Two-Gaussian error in closed form; AWGN only.
    GaussianClosedForm,
    /// Closed form conditioned on the fade, integrated over its density.
    Quadrature,
    MonteCarlo { trials: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub p_e: f64,
    /// Binomial standard error; zero for deterministic methods.
    pub std_error: f64,
    pub trials: u64,
}

/// Two-class error of the `D_1 − D_2 ≷ 0` rule with Euclidean distances.
pub fn classification_error(params: &ClassAnalyticsParams, method: ClassErrorMethod) -> Result<ErrorEstimate> {
    params.validate()?;
    let refs = params.references();
    let exact = |p_e: f64| ErrorEstimate {
        p_e,
        std_error: 0.0,
        trials: 0,
    };
    match method {
        ClassErrorMethod::GaussianClosedForm => match params.channel {
            FadingModel::Awgn => Ok(exact(params.conditional_error(1.0, &refs))),
            _ => Err(Error::Unsupported("the Gaussian closed form outside AWGN")),
        },
        ClassErrorMethod::Quadrature => match params.channel {
            FadingModel::Awgn => Ok(exact(params.conditional_error(1.0, &refs))),
            ch => {
                let v = integrate_to_infinity(
                    |a| match fading_pdf(a, &ch) {
                        Ok(FadingDensity::Density(d)) if d > 0.0 => d * params.conditional_error(a, &refs),
                        _ => 0.0,
                    },
                    0.0,
                    1e-12,
                )?;
                Ok(exact(v.clamp(0.0, 1.0)))
            }
        },
        ClassErrorMethod::MonteCarlo { trials, seed } => {
            if trials == 0 {
                return Err(invalid("trials", "0"));
            }
            let mut rng = rng_from_seed(seed);
            let sigma = libm::sqrt(params.noise_variance);
            let mut errors = 0u64;
            let dim = params.devices[0].len();
            let mut s = alloc::vec![0.0; dim];
            for _ in 0..trials {
                let u: f64 = rand::Rng::random(&mut rng);
                let truth = if u < params.priors[0] { 0 } else { 1 };
                let alpha = fading_draw(&params.channel, &mut rng)?;
                let g = params.path_gain * params.path_gain * alpha * alpha;
                for (v, m) in s.iter_mut().zip(&params.devices[truth]) {
                    *v = g * m + sigma * standard_normal(&mut rng);
                }
                let d0: f64 = s.iter().zip(&refs[0]).map(|(a, b)| (a - b) * (a - b)).sum();
                let d1: f64 = s.iter().zip(&refs[1]).map(|(a, b)| (a - b) * (a - b)).sum();
                // ties go to device 0
                let decided = if d1 < d0 { 1 } else { 0 };
                if decided != truth {
                    errors += 1;
                }
            }
            let p = errors as f64 / trials as f64;
            Ok(ErrorEstimate {
                p_e: p,
                std_error: libm::sqrt(p * (1.0 - p) / trials as f64),
                trials,
            })
        }
    }
}

/// Monte Carlo of the energy detector at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentMonteCarlo {
    pub grr: f64,
    pub frr: f64,
    pub grr_std_error: f64,
    pub frr_std_error: f64,
    pub trials: u64,
}

/// Draws `trials` genuine and `trials` imposter statistics
/// `Y = Σ_{i=1}^{2μ} (n_i + s_i)²` with `‖s‖² = 2γα²`.
pub fn simulate_identification(params: &IdentAnalyticsParams, trials: u64, seed: u64) -> Result<IdentMonteCarlo> {
    params.validate()?;
    if trials == 0 {
        return Err(invalid("trials", "0"));
    }
    let mut rng = rng_from_seed(seed);
    let dof = 2 * params.time_bandwidth as usize;
    let (mut rejected_imposters, mut rejected_genuine) = (0u64, 0u64);
    for _ in 0..trials {
        let alpha = fading_draw(&params.channel, &mut rng)?;
        let s = libm::sqrt(2.0 * params.snr_gamma) * alpha;
        let mut y = 0.0;
        for i in 0..dof {
            let n = standard_normal(&mut rng) + if i == 0 { s } else { 0.0 };
            y += n * n;
        }
        if y > params.threshold {
            rejected_imposters += 1;
        }
        let mut y = 0.0;
        for _ in 0..dof {
            let n = standard_normal(&mut rng);
            y += n * n;
        }
        if y > params.threshold {
            rejected_genuine += 1;
        }
    }
    let t = trials as f64;
    let g = rejected_imposters as f64 / t;
    let f = rejected_genuine as f64 / t;
    Ok(IdentMonteCarlo {
        grr: g,
        frr: f,
        grr_std_error: libm::sqrt(g * (1.0 - g) / t),
        frr_std_error: libm::sqrt(f * (1.0 - f) / t),
        trials,
    })
}

/// Total SNR of the difference between two feature vectors under
/// per-component noise variance `sigma2`: `‖a − b‖² / (2σ²)`, matching
/// `‖s‖² = 2γ` for unit-variance components.
pub fn difference_snr(a: &[f64], b: &[f64], sigma2: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if !(sigma2 > 0.0) {
        return Err(invalid("noise variance", format!("{sigma2}")));
    }
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(d / (2.0 * sigma2))
}
