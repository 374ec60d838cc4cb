//! Monte Carlo campaigns: enroll, capture, score, aggregate.
//!
//! Per sweep point the trials are split into `enrollments` blocks. Each
//! block enrolls a fresh database (close-range AWGN for the fixed mode, the
//! point's own channel for the updated mode) and then scores its share of
//! test captures. Trial `t` transmits from device `t mod C` and draws its
//! fade, shadowing and noise from streams derived from `(seed, t)` only, so
//! every sweep point sees the same random numbers and differences between
//! points come from the swept variable.
//!
//! When the receiver is linear the capture is built from a cached noiseless
//! capture per device: scale by the real channel gain, then add noise drawn
//! directly at the ADC rate with the aliased low-pass response. This is
//! exact for a linear front end and avoids re-filtering the full-rate
//! envelope every trial. A nonlinear receiver takes the full path.

use crate::error::{CliError, Result};
use crate::scenario::{Scenario, Sweep};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use wpli_core::analytics::{self, ClassAnalyticsParams, ClassErrorMethod, ReferenceGain};
use wpli_core::channel::{fading_draw, path_gain, FadingModel, PathLossModel};
use wpli_core::fft::{fft, fft_frequencies, ifft};
use wpli_core::fingerprint::{
    cancel_rx, leave_device_out_threshold, normalize_power, roc_eer, CaptureMeta, DatabaseMode,
    FingerprintDatabase, FingerprintRecord, Projection, RocPoint, RxResponse, Scorer,
};
use wpli_core::receiver::{adc, psd_fingerprint, rx_analog, FingerprintVector, Normalization, ReceiverProfile};
use wpli_core::rfchain::transmit;
use wpli_core::rng::{complex_normal, derive_seed, rng_from_seed, SimRng};
use wpli_core::signal::{ComplexSignal, Origin};
use wpli_core::waveform::generate_baseband;

pub const RESULT_SCHEMA_VERSION: u32 = 1;

const STREAM_ENROLL: u64 = 1;
const STREAM_TRIAL: u64 = 2;
const STREAM_FADE: u64 = 3;
const STREAM_NOISE: u64 = 4;
const STREAM_SHADOW: u64 = 5;
/// ROC points kept per sweep point.
const ROC_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: String,
    /// SHA-256 of the canonical JSON form of the scenario.
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub sweep_variable: String,
    pub database: DatabaseMode,
    pub points: Vec<PointResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub index: usize,
    pub label: String,
    pub distance_m: f64,
    pub sample_rate_hz: f64,
    pub n_fft: usize,
    pub channel: FadingModel,
    /// Mean SNR in the reference bandwidth.
    pub snr_db: f64,
    pub report: DecisionReport,
    pub prediction: Option<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub device: usize,
    pub decided: usize,
    /// Mean LDA distance to each device.
    pub distances: Vec<f64>,
    /// Smallest identity-projection distance over all devices.
    pub genuine_score: f64,
    /// Smallest identity-projection distance over the other devices.
    pub imposter_score: f64,
    pub threshold: f64,
}

/// Decisions and rates at one sweep point. Rates are derived from the
/// counts, so `far + grr == 1` and `frr + gar == 1` hold exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub trials: usize,
    /// Trials that produced a decision.
    pub decisions: usize,
    /// Trials aborted by a stage error, keyed by error text.
    pub failures: BTreeMap<String, usize>,
    pub misclassified: usize,
    #[serde(deserialize_with = "crate::results::f64_or_nan")]
    pub p_e: f64,
    #[serde(deserialize_with = "crate::results::f64_or_nan")]
    pub p_e_std_error: f64,
    pub genuine_rejected: usize,
    pub imposter_accepted: usize,
    #[serde(deserialize_with = "crate::results::f64_or_nan")]
    pub far: f64,
    #[serde(deserialize_with = "crate::results::f64_or_nan")]
    pub frr: f64,
    #[serde(deserialize_with = "crate::results::f64_or_nan")]
    pub gar: f64,
    #[serde(deserialize_with = "crate::results::f64_or_nan")]
    pub grr: f64,
    #[serde(deserialize_with = "crate::results::f64_or_nan")]
    pub eer: f64,
    #[serde(deserialize_with = "crate::results::f64_or_nan")]
    pub eer_threshold: f64,
    pub roc: Vec<RocPoint>,
    pub trial_records: Vec<TrialRecord>,
}

impl DecisionReport {
    pub fn failure_count(&self) -> usize {
        self.failures.values().sum()
    }
}

/// Idealized two-device figures: the noiseless PSD features of the first
/// two devices are taken as known and the per-bin variance is the mean
/// periodogram noise at this point. No estimation noise, no level
/// mismatch between captures, so these bound what a trained classifier
/// reaches rather than predict it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub two_device_p_e: f64,
    pub energy_detector_eer: f64,
    pub difference_snr: f64,
}

struct DeviceWave {
    tx: ComplexSignal,
}

/// Everything that depends on the ADC rate.
struct RateContext {
    fs: f64,
    capture: usize,
    n_fft: usize,
    profile: ReceiverProfile,
    /// Noiseless capture windows per device, at unit channel gain.
    clean: Vec<Vec<Complex64>>,
    /// `sqrt(Σ_k |H(f + k f_s)|²)` on the capture-length grid.
    noise_shape: Vec<f64>,
    rx_response: Option<RxResponse>,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    devices: Vec<DeviceWave>,
    /// Noise density in units of the simulated signal power per Hz.
    n0: f64,
    enroll_gain: f64,
}

#[derive(Debug, Clone, Copy)]
struct PointSpec {
    distance_m: f64,
    fs: f64,
    n_fft: usize,
    /// Capture length in samples at `fs`.
    capture: usize,
    channel: FadingModel,
}

fn linear_rx(p: &ReceiverProfile) -> bool {
    p.pa_rx.is_linear()
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario) -> Result<Self> {
        let proto = &scenario.protocol;
        let bits = proto.bits();
        let mut devices = Vec::new();
        for d in &scenario.devices {
            let y = generate_baseband(
                &bits,
                proto.modulation,
                proto.symbol_period_s,
                &proto.shaping,
                &d.clock,
                &d.dac(proto),
            )?;
            let tx = transmit(&y, &d.mixer(proto.carrier_hz), &d.pa, None)?;
            devices.push(DeviceWave { tx });
        }
        // noise floor from an impairment-free transmitter at 1 m
        let ideal = crate::scenario::DeviceProfile::ideal("reference");
        let y = generate_baseband(
            &bits,
            proto.modulation,
            proto.symbol_period_s,
            &proto.shaping,
            &ideal.clock,
            &ideal.dac(proto),
        )?;
        let p_ref = in_band_power(y.samples(), y.sample_rate(), scenario.channel.reference_bandwidth_hz);
        let snr = 10f64.powf(scenario.channel.snr_at_1m_db / 10.0);
        let n0 = p_ref / (snr * scenario.channel.reference_bandwidth_hz);
        let enroll_gain = 10f64.powf((scenario.fingerprint.enrollment_snr_db - scenario.channel.snr_at_1m_db) / 20.0);
        Ok(Self {
            scenario,
            devices,
            n0,
            enroll_gain,
        })
    }

    fn rate_context(&self, fs: f64, l: usize, n_fft: usize) -> Result<RateContext> {
        let s = self.scenario;
        let carrier = s.protocol.carrier_hz;
        let profile = s.receiver.profile(fs, carrier);
        profile.validate()?;
        let mut clean = Vec::new();
        for d in &self.devices {
            let x = rx_analog(&d.tx, &profile)?;
            if x.len() < l {
                return Err(CliError::Data(format!(
                    "capture of {l} samples is longer than the {} samples available at {fs} Hz",
                    x.len()
                )));
            }
            clean.push(x.samples()[..l].to_vec());
        }
        let noise_shape = profile
            .aliased_power_response(self.devices[0].tx.sample_rate(), l)?
            .into_iter()
            .map(f64::sqrt)
            .collect();
        let rx_response = if linear_rx(&profile) {
            None
        } else {
            Some(RxResponse::calibrate(&self.devices[0].tx, &profile, l, n_fft)?)
        };
        Ok(RateContext {
            fs,
            capture: l,
            n_fft,
            profile,
            clean,
            noise_shape,
            rx_response,
        })
    }

    /// One capture of `device` through amplitude gain `gain`, turned into a
    /// fingerprint. `normalize` is set for test captures only; references
    /// keep their enrolled scale.
    fn fingerprint(
        &self,
        ctx: &RateContext,
        device: usize,
        gain: f64,
        n_fft: usize,
        normalize: bool,
        rng: &mut SimRng,
    ) -> wpli_core::Result<FingerprintVector> {
        let l = ctx.capture;
        let x = if linear_rx(&ctx.profile) {
            let (c, s) = ctx.profile.mixer.branch_gains();
            let a1 = ctx.profile.pa_rx.coefficients()[0];
            let j = Complex64::new(0.0, 1.0);
            // white at the ADC rate; the aliased response below accounts
            // for the filter and decimator
            let var = self.n0 * ctx.fs;
            let mut w: Vec<Complex64> = (0..l)
                .map(|_| {
                    let n = complex_normal(rng, var);
                    n * c + j * s * n.conj()
                })
                .collect();
            if ctx.noise_shape.iter().any(|h| (h - 1.0).abs() > 1e-12) {
                fft(&mut w);
                for (v, h) in w.iter_mut().zip(&ctx.noise_shape) {
                    *v *= *h;
                }
                ifft(&mut w);
            }
            let samples: Vec<Complex64> = ctx.clean[device]
                .iter()
                .zip(&w)
                .map(|(x, n)| x * gain + a1 * n)
                .collect();
            ComplexSignal::baseband(samples, ctx.fs)?
        } else {
            let tx = &self.devices[device].tx;
            let var = self.n0 * tx.sample_rate();
            let noisy: Vec<Complex64> = tx.samples().iter().map(|v| v * gain + complex_normal(rng, var)).collect();
            let r = ComplexSignal::new(noisy, tx.sample_rate(), tx.origin())?;
            let x = rx_analog(&r, &ctx.profile)?;
            ComplexSignal::baseband(x.samples()[..l].to_vec(), ctx.fs)?
        };
        let cap = adc(&x, &ctx.profile);
        cap.ensure_unclipped(ctx.profile.adc_full_scale)?;
        let mut v = psd_fingerprint(cap.signal.samples(), ctx.fs, n_fft)?;
        if let Some(r) = &ctx.rx_response {
            v = cancel_rx(&v, r)?;
        }
        if normalize {
            v = normalize_power(&v)?;
        }
        Ok(v)
    }

    fn path_model(&self) -> PathLossModel {
        PathLossModel {
            ref_loss_db: 0.0,
            ref_distance_m: 1.0,
            exponent: self.scenario.channel.path_loss_exponent,
            shadowing_sigma_db: self.scenario.channel.shadowing_sigma_db,
        }
    }

    /// Amplitude gain for one capture at the point.
    fn channel_gain(&self, point: &PointSpec, fade_seed: u64, shadow_seed: u64) -> wpli_core::Result<f64> {
        let alpha_pl = path_gain(point.distance_m, &self.path_model(), &mut rng_from_seed(shadow_seed))?;
        let alpha_ch = fading_draw(&point.channel, &mut rng_from_seed(fade_seed))?;
        Ok(alpha_pl * alpha_ch)
    }

    fn enroll(&self, ctx: &RateContext, point: &PointSpec, block: usize) -> Result<FingerprintDatabase> {
        let s = self.scenario;
        let mode = s.campaign.database;
        let seed = s.campaign.seed;
        let mode_tag = match mode {
            DatabaseMode::Fixed => 0,
            DatabaseMode::Updated => 1,
        };
        let mut records = Vec::new();
        for (i, d) in s.devices.iter().enumerate() {
            for r in 0..s.fingerprint.references_per_device {
                let path = [STREAM_ENROLL, mode_tag, block as u64, i as u64, r as u64];
                let base = derive_seed(seed, &path);
                let (gain, meta_distance, channel) = match mode {
                    DatabaseMode::Fixed => (self.enroll_gain, 0.1, FadingModel::Awgn),
                    DatabaseMode::Updated => (
                        self.channel_gain(point, derive_seed(base, &[STREAM_FADE]), derive_seed(base, &[STREAM_SHADOW]))?,
                        point.distance_m,
                        point.channel,
                    ),
                };
                let mut rng = rng_from_seed(derive_seed(base, &[STREAM_NOISE]));
                let v = self.fingerprint(ctx, i, gain, point.n_fft, false, &mut rng)?;
                records.push(FingerprintRecord {
                    device_id: d.id.clone(),
                    vector: v,
                    meta: CaptureMeta {
                        distance_m: meta_distance,
                        channel: channel.name().to_string(),
                        sample_rate_hz: ctx.fs,
                        n_fft: point.n_fft,
                    },
                });
            }
        }
        let mut db = FingerprintDatabase::from_records(records, s.fingerprint.lda, s.fingerprint.spread);
        db.train()?;
        db.threshold = Some(leave_device_out_threshold(&db)?);
        Ok(db)
    }

    fn run_point(&self, ctx: &RateContext, point: &PointSpec) -> Result<DecisionReport> {
        let s = self.scenario;
        let trials = s.campaign.trials;
        let blocks = s.campaign.enrollments;
        let c = s.devices.len();
        let mut outcomes: Vec<std::result::Result<TrialRecord, String>> = Vec::with_capacity(trials);
        for b in 0..blocks {
            let lo = b * trials / blocks;
            let hi = (b + 1) * trials / blocks;
            let db = self.enroll(ctx, point, b)?;
            let lda = db.scorer(db.projection()?)?;
            let ident = db.scorer(Projection::Identity)?;
            let lambda = db.threshold.unwrap_or(f64::INFINITY);
            let block: Vec<_> = (lo..hi)
                .into_par_iter()
                .map(|t| self.trial(ctx, point, t, t % c, &lda, &ident, lambda).map_err(|e| e.to_string()))
                .collect();
            outcomes.extend(block);
        }
        Ok(aggregate(outcomes, s.campaign.keep_trials))
    }

    #[allow(clippy::too_many_arguments)]
    fn trial(
        &self,
        ctx: &RateContext,
        point: &PointSpec,
        t: usize,
        device: usize,
        lda: &Scorer,
        ident: &Scorer,
        lambda: f64,
    ) -> wpli_core::Result<TrialRecord> {
        let base = derive_seed(self.scenario.campaign.seed, &[STREAM_TRIAL, t as u64]);
        let gain = self.channel_gain(point, derive_seed(base, &[STREAM_FADE]), derive_seed(base, &[STREAM_SHADOW]))?;
        let mut rng = rng_from_seed(derive_seed(base, &[STREAM_NOISE]));
        let normalize = self.scenario.fingerprint.normalization == Normalization::UnitPower;
        let v = self.fingerprint(ctx, device, gain, point.n_fft, normalize, &mut rng)?;
        let class = lda.classify(&v)?;
        let d = ident.class_distances(&v)?;
        let genuine_score = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let imposter_score = d
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != device)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        Ok(TrialRecord {
            trial: t,
            device,
            decided: class.device,
            distances: class.distances,
            genuine_score,
            imposter_score,
            threshold: lambda,
        })
    }

    fn prediction(&self, ctx: &RateContext, point: &PointSpec) -> Option<Prediction> {
        if self.devices.len() < 2 {
            return None;
        }
        let feature = |i: usize| psd_fingerprint(&ctx.clean[i], ctx.fs, point.n_fft).ok();
        let (u0, u1) = (feature(0)?, feature(1)?);
        let alpha_pl = wpli_core::channel::path_loss_db(point.distance_m, &self.path_model()).ok()?;
        let alpha_pl = 10f64.powf(alpha_pl / 20.0);
        let g = alpha_pl * alpha_pl * point.channel.omega();
        // periodogram noise: per-bin variance 2·S·N + N² around the mean
        // feature, with N the noise density seen at the ADC
        let n = self.n0 * ctx.profile.pa_rx.coefficients()[0].norm_sqr();
        let var = u0
            .psd
            .iter()
            .map(|s| 2.0 * g * s * n + n * n)
            .sum::<f64>()
            / u0.len() as f64;
        let reference = match self.scenario.campaign.database {
            DatabaseMode::Updated => ReferenceGain::Matched,
            DatabaseMode::Fixed => ReferenceGain::Enrollment(self.enroll_gain * self.enroll_gain),
        };
        let params = ClassAnalyticsParams {
            devices: [u0.psd.clone(), u1.psd.clone()],
            path_gain: alpha_pl,
            noise_variance: var,
            channel: point.channel,
            priors: [0.5, 0.5],
            reference,
        };
        let method = match point.channel {
            FadingModel::Awgn => ClassErrorMethod::GaussianClosedForm,
            _ => ClassErrorMethod::Quadrature,
        };
        let p_e = analytics::classification_error(&params, method).ok()?.p_e;
        let scaled = |v: &[f64]| v.iter().map(|x| x * g).collect::<Vec<_>>();
        let gamma = analytics::difference_snr(&scaled(&u0.psd), &scaled(&u1.psd), var).ok()?;
        let mu = (point.n_fft / 2).max(1) as u32;
        let eer = analytics::theoretical_roc(gamma / point.channel.omega(), mu, point.channel, &[])
            .ok()?
            .eer;
        Some(Prediction {
            two_device_p_e: p_e,
            energy_detector_eer: eer,
            difference_snr: gamma,
        })
    }
}

fn in_band_power(x: &[Complex64], fs: f64, bandwidth: f64) -> f64 {
    let mut buf = x.to_vec();
    fft(&mut buf);
    let n = buf.len() as f64;
    fft_frequencies(buf.len(), fs)
        .iter()
        .zip(&buf)
        .filter(|(f, _)| f.abs() < bandwidth / 2.0)
        .map(|(_, v)| v.norm_sqr())
        .sum::<f64>()
        / (n * n)
}

fn aggregate(outcomes: Vec<std::result::Result<TrialRecord, String>>, keep: bool) -> DecisionReport {
    let trials = outcomes.len();
    let mut failures = BTreeMap::new();
    let mut records = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(e) => *failures.entry(e).or_insert(0) += 1,
        }
    }
    let decisions = records.len();
    let misclassified = records.iter().filter(|r| r.decided != r.device).count();
    let genuine_rejected = records.iter().filter(|r| r.genuine_score > r.threshold).count();
    let imposter_accepted = records.iter().filter(|r| !(r.imposter_score > r.threshold)).count();
    let rate = |k: usize| if decisions == 0 { f64::NAN } else { k as f64 / decisions as f64 };
    let p_e = rate(misclassified);
    let far = rate(imposter_accepted);
    let frr = rate(genuine_rejected);
    let genuine: Vec<f64> = records.iter().map(|r| r.genuine_score).collect();
    let imposter: Vec<f64> = records.iter().map(|r| r.imposter_score).filter(|v| v.is_finite()).collect();
    let (eer, eer_threshold, roc) = match roc_eer(&genuine, &imposter) {
        Ok(r) => (r.eer, r.eer_threshold, thin(&r.points)),
        Err(_) => (f64::NAN, f64::NAN, Vec::new()),
    };
    DecisionReport {
        trials,
        decisions,
        failures,
        misclassified,
        p_e,
        p_e_std_error: (p_e * (1.0 - p_e) / decisions.max(1) as f64).sqrt(),
        genuine_rejected,
        imposter_accepted,
        far,
        frr,
        gar: rate(decisions - genuine_rejected),
        grr: rate(decisions - imposter_accepted),
        eer,
        eer_threshold,
        roc,
        trial_records: if keep { records } else { Vec::new() },
    }
}

fn thin(points: &[RocPoint]) -> Vec<RocPoint> {
    if points.len() <= ROC_POINTS {
        return points.to_vec();
    }
    (0..ROC_POINTS)
        .map(|k| points[k * (points.len() - 1) / (ROC_POINTS - 1)])
        .collect()
}

pub fn config_hash(s: &Scenario) -> String {
    let canonical = serde_json::to_string(s).expect("scenario serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn points(s: &Scenario) -> Vec<(String, PointSpec)> {
    let base = PointSpec {
        distance_m: s.channel.distance_m,
        fs: s.receiver.sample_rate_hz,
        n_fft: s.fingerprint.n_fft,
        capture: s.fingerprint.capture_samples,
        channel: s.channel.fading,
    };
    // a rate sweep keeps the capture duration and the bin width fixed
    let scaled = |n: usize, fs: f64| ((n as f64 * fs / base.fs).round() as usize).max(1);
    match &s.campaign.sweep {
        None => vec![(format!("{} m", base.distance_m), base)],
        Some(Sweep::Distance(v)) => v
            .iter()
            .map(|&d| (format!("{d} m"), PointSpec { distance_m: d, ..base }))
            .collect(),
        Some(Sweep::SampleRate(v)) => v
            .iter()
            .map(|&fs| {
                let p = PointSpec {
                    fs,
                    n_fft: scaled(base.n_fft, fs),
                    capture: scaled(base.capture, fs),
                    ..base
                };
                (format!("{} MHz", fs / 1e6), p)
            })
            .collect(),
        Some(Sweep::FftPoints(v)) => v
            .iter()
            .map(|&n| (format!("{n} points"), PointSpec { n_fft: n, ..base }))
            .collect(),
        Some(Sweep::Channel(v)) => v
            .iter()
            .map(|&c| (channel_label(&c), PointSpec { channel: c, ..base }))
            .collect(),
    }
}

pub fn channel_label(c: &FadingModel) -> String {
    match *c {
        FadingModel::Awgn => "awgn".into(),
        FadingModel::Rayleigh { .. } => "rayleigh".into(),
        FadingModel::Rician { k, .. } => format!("rician(K={k})"),
        FadingModel::Nakagami { m, .. } => format!("nakagami(m={m})"),
    }
}

pub fn run_campaign(s: &Scenario) -> Result<CampaignResult> {
    s.validate()?;
    if s.devices.len() < 2 {
        return Err(CliError::Data("a campaign needs at least two devices".into()));
    }
    let engine = Engine::new(s)?;
    let mut contexts: Vec<RateContext> = Vec::new();
    let mut out = Vec::new();
    for (index, (label, point)) in points(s).into_iter().enumerate() {
        point.channel.validate()?;
        let same = |c: &&RateContext| c.fs == point.fs && c.capture == point.capture && c.n_fft == point.n_fft;
        if !contexts.iter().any(|c| same(&c)) {
            contexts.push(engine.rate_context(point.fs, point.capture, point.n_fft)?);
        }
        let ctx = contexts.iter().find(same).expect("context just built");
        let report = engine.run_point(ctx, &point)?;
        out.push(PointResult {
            index,
            label,
            distance_m: point.distance_m,
            sample_rate_hz: point.fs,
            n_fft: point.n_fft,
            channel: point.channel,
            snr_db: s.channel.snr_db(point.distance_m),
            prediction: engine.prediction(ctx, &point),
            report,
        });
    }
    Ok(CampaignResult {
        schema_version: RESULT_SCHEMA_VERSION,
        provenance: Provenance {
            scenario: s.name.clone(),
            config_hash: config_hash(s),
            seed: s.campaign.seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        sweep_variable: s.campaign.sweep.as_ref().map_or("none", |w| w.name()).to_string(),
        database: s.campaign.database,
        points: out,
    })
}

/// The noiseless envelope a device transmits, for inspection and tests.
pub fn device_envelope(s: &Scenario, device: usize) -> Result<ComplexSignal> {
    let e = Engine::new(s)?;
    let tx = &e.devices.get(device).ok_or_else(|| CliError::Usage(format!("no device #{device}")))?.tx;
    debug_assert!(matches!(tx.origin(), Origin::Passband { .. }));
    Ok(tx.clone())
}
