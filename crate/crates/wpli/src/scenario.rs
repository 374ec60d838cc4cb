//! Versioned TOML scenario files.
//!
//! Every table rejects unknown keys. Omitted optional keys take the
//! defaults documented on each field; `schema_version` and
//! `campaign.seed` are mandatory.

use crate::error::{CliError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use wpli_core::channel::FadingModel;
use wpli_core::fingerprint::{DatabaseMode, LdaOptions, SpreadMode};
use wpli_core::receiver::{LowPass, Normalization, ReceiverProfile};
use wpli_core::rfchain::{MixerModel, PaPowerSeries};
use wpli_core::waveform::{preamble_chips, ClockModel, DacModel, Modulation, ShapingFilter};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub protocol: Protocol,
    pub devices: Vec<DeviceProfile>,
    #[serde(default)]
    pub receiver: ReceiverSpec,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub fingerprint: FingerprintSpec,
    pub campaign: CampaignSpec,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Protocol {
    /// Default: O-QPSK (IEEE 802.15.4 chips).
    #[serde(default = "default_modulation")]
    pub modulation: Modulation,
    /// Default: half-sine.
    #[serde(default = "default_shaping")]
    pub shaping: ShapingFilter,
    /// Default: 0.5 µs (2 Mchip/s).
    #[serde(default = "default_symbol_period")]
    pub symbol_period_s: f64,
    /// Default: 2.44 GHz.
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    /// Transmitted bits; default is the 8 × symbol-0 chip preamble.
    #[serde(default)]
    pub bits: Option<Vec<u8>>,
}

fn default_modulation() -> Modulation {
    Modulation::Oqpsk
}
fn default_shaping() -> ShapingFilter {
    ShapingFilter::HalfSine
}
fn default_symbol_period() -> f64 {
    0.5e-6
}
fn default_carrier() -> f64 {
    2.44e9
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            modulation: default_modulation(),
            shaping: default_shaping(),
            symbol_period_s: default_symbol_period(),
            carrier_hz: default_carrier(),
            bits: None,
        }
    }
}

impl Protocol {
    pub fn bits(&self) -> Vec<u8> {
        self.bits.clone().unwrap_or_else(preamble_chips)
    }
}

/// Everything that makes one transmitter different from another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceProfile {
    pub id: String,
    /// Odd-order coefficients `[re, im]` for orders 1, 3, 5, ...
    pub pa: PaPowerSeries,
    /// Mixer phase imbalance ζ in radians. Default 0.
    #[serde(default)]
    pub quadrature_error_rad: f64,
    /// Carrier offset relative to the nominal carrier, Hz. Default 0.
    #[serde(default)]
    pub carrier_offset_hz: f64,
    /// Default: no jitter.
    #[serde(default = "ClockModel::ideal")]
    pub clock: ClockModel,
    /// Default: 12-bit DAC at `T/8`, gain set so the shaped waveform
    /// peaks near 0.9 of full scale.
    #[serde(default)]
    pub dac: Option<DacModel>,
}

impl DeviceProfile {
    pub fn ideal(id: &str) -> Self {
        Self {
            id: id.into(),
            pa: PaPowerSeries::linear(1.0),
            quadrature_error_rad: 0.0,
            carrier_offset_hz: 0.0,
            clock: ClockModel::ideal(),
            dac: None,
        }
    }

    pub fn pa_from_pairs(pairs: &[(f64, f64)]) -> Result<PaPowerSeries> {
        Ok(PaPowerSeries::new(pairs.iter().map(|&(r, i)| Complex64::new(r, i)).collect())?)
    }

    pub fn dac(&self, protocol: &Protocol) -> DacModel {
        self.dac.clone().unwrap_or_else(|| {
            let t = protocol.symbol_period_s;
            let mut d = DacModel::for_symbol_period(t);
            // unit-energy RRC pulses peak near 1.5/sqrt(T) once overlapped
            if let ShapingFilter::RootRaisedCosine { .. } = protocol.shaping {
                d.amplitude_gain = 0.6 * t.sqrt();
            }
            d
        })
    }

    pub fn mixer(&self, carrier_hz: f64) -> MixerModel {
        MixerModel {
            carrier_hz: carrier_hz + self.carrier_offset_hz,
            quadrature_error: self.quadrature_error_rad,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSpec {
    /// Default 8 MHz.
    #[serde(default = "default_fs")]
    pub sample_rate_hz: f64,
    /// Default: linear, unit gain.
    #[serde(default = "default_rx_pa")]
    pub pa: PaPowerSeries,
    #[serde(default)]
    pub quadrature_error_rad: f64,
    /// Default: ideal low-pass at `fs/2`.
    #[serde(default = "LowPass::ideal")]
    pub lpf: LowPass,
    /// Default 14.
    #[serde(default = "default_adc_bits")]
    pub adc_bits: u32,
    /// Default 8.
    #[serde(default = "default_adc_full_scale")]
    pub adc_full_scale: f64,
}

fn default_fs() -> f64 {
    8e6
}
fn default_rx_pa() -> PaPowerSeries {
    PaPowerSeries::linear(1.0)
}
fn default_adc_bits() -> u32 {
    14
}
fn default_adc_full_scale() -> f64 {
    8.0
}

impl Default for ReceiverSpec {
    fn default() -> Self {
        Self {
            sample_rate_hz: default_fs(),
            pa: default_rx_pa(),
            quadrature_error_rad: 0.0,
            lpf: LowPass::ideal(),
            adc_bits: default_adc_bits(),
            adc_full_scale: default_adc_full_scale(),
        }
    }
}

impl ReceiverSpec {
    pub fn profile(&self, sample_rate_hz: f64, carrier_hz: f64) -> ReceiverProfile {
        ReceiverProfile {
            pa_rx: self.pa.clone(),
            mixer: MixerModel {
                carrier_hz,
                quadrature_error: self.quadrature_error_rad,
            },
            lpf: self.lpf,
            adc_bits: self.adc_bits,
            adc_full_scale: self.adc_full_scale,
            sample_rate_hz,
        }
    }
}

/// Statistical channel. The noise floor is fixed; distance changes the
/// SNR through a log-distance path loss anchored at 1 m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    /// Default AWGN.
    #[serde(default = "default_fading")]
    pub fading: FadingModel,
    /// Default 1 m.
    #[serde(default = "default_distance")]
    pub distance_m: f64,
    /// SNR of an ideal transmitter at 1 m, measured in
    /// `reference_bandwidth_hz`. Default 25 dB.
    #[serde(default = "default_snr")]
    pub snr_at_1m_db: f64,
    /// Default 2 MHz.
    #[serde(default = "default_ref_bw")]
    pub reference_bandwidth_hz: f64,
    /// Default `1/log10(6)`, which puts 15 dB at 6 m.
    #[serde(default = "default_exponent")]
    pub path_loss_exponent: f64,
    /// Log-normal shadowing, dB. Default 0.
    #[serde(default)]
    pub shadowing_sigma_db: f64,
}

fn default_fading() -> FadingModel {
    FadingModel::Awgn
}
fn default_distance() -> f64 {
    1.0
}
fn default_snr() -> f64 {
    25.0
}
fn default_ref_bw() -> f64 {
    2e6
}
pub fn default_exponent() -> f64 {
    1.0 / 6f64.log10()
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            fading: default_fading(),
            distance_m: default_distance(),
            snr_at_1m_db: default_snr(),
            reference_bandwidth_hz: default_ref_bw(),
            path_loss_exponent: default_exponent(),
            shadowing_sigma_db: 0.0,
        }
    }
}

impl ChannelSpec {
    /// Mean SNR in the reference bandwidth at `d` metres.
    pub fn snr_db(&self, d: f64) -> f64 {
        self.snr_at_1m_db - 10.0 * self.path_loss_exponent * d.log10()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerprintSpec {
    /// Samples per capture after the preamble onset. Default 256.
    #[serde(default = "default_capture")]
    pub capture_samples: usize,
    /// Default 256.
    #[serde(default = "default_nfft")]
    pub n_fft: usize,
    /// Power normalization of the captures under test. References keep
    /// the scale they were enrolled at. Default none.
    #[serde(default = "default_norm")]
    pub normalization: Normalization,
    /// References per device per enrollment. Default 20.
    #[serde(default = "default_refs")]
    pub references_per_device: usize,
    /// SNR of the close-range enrollment used by the fixed database.
    /// Default 30 dB, AWGN.
    #[serde(default = "default_enroll_snr")]
    pub enrollment_snr_db: f64,
    #[serde(default)]
    pub lda: LdaOptions,
    #[serde(default)]
    pub spread: SpreadMode,
}

fn default_capture() -> usize {
    256
}
fn default_nfft() -> usize {
    256
}
fn default_norm() -> Normalization {
    Normalization::None
}
fn default_refs() -> usize {
    20
}
fn default_enroll_snr() -> f64 {
    30.0
}

impl Default for FingerprintSpec {
    fn default() -> Self {
        Self {
            capture_samples: default_capture(),
            n_fft: default_nfft(),
            normalization: default_norm(),
            references_per_device: default_refs(),
            enrollment_snr_db: default_enroll_snr(),
            lda: LdaOptions::default(),
            spread: SpreadMode::default(),
        }
    }
}

/// The single variable a campaign sweeps. Everything else is held at the
/// scenario values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variable", content = "values", rename_all = "snake_case")]
pub enum Sweep {
    Distance(Vec<f64>),
    SampleRate(Vec<f64>),
    FftPoints(Vec<usize>),
    Channel(Vec<FadingModel>),
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::Distance(v) | Sweep::SampleRate(v) => v.len(),
            Sweep::FftPoints(v) => v.len(),
            Sweep::Channel(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn name(&self) -> &'static str {
        match self {
            Sweep::Distance(_) => "distance",
            Sweep::SampleRate(_) => "sample_rate",
            Sweep::FftPoints(_) => "fft_points",
            Sweep::Channel(_) => "channel",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSpec {
    /// Test captures per sweep point, spread round-robin over devices.
    pub trials: usize,
    /// At most `i64::MAX`, the largest TOML integer.
    pub seed: u64,
    /// Default updated.
    #[serde(default = "default_mode")]
    pub database: DatabaseMode,
    /// Database re-enrollments per sweep point; trials are split evenly
    /// between them. Default 10.
    #[serde(default = "default_enrollments")]
    pub enrollments: usize,
    /// Default: a single point at the channel distance.
    #[serde(default)]
    pub sweep: Option<Sweep>,
    /// Keep per-trial distances in the result. Default true.
    #[serde(default = "default_true")]
    pub keep_trials: bool,
}

fn default_mode() -> DatabaseMode {
    DatabaseMode::Updated
}
fn default_enrollments() -> usize {
    10
}
fn default_true() -> bool {
    true
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Data(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let bad = |m: String| Err(CliError::Data(m));
        if self.devices.is_empty() {
            return bad("at least one device is required".into());
        }
        let mut ids: Vec<&str> = self.devices.iter().map(|d| d.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.devices.len() {
            return bad("device ids must be unique".into());
        }
        // TOML integers are signed 64-bit
        let max = i64::MAX as u64;
        if self.campaign.seed > max || self.devices.iter().any(|d| d.clock.seed > max) {
            return bad(format!("seeds must be at most {max}"));
        }
        if self.campaign.trials == 0 {
            return bad("campaign.trials must be at least 1".into());
        }
        if self.campaign.enrollments == 0 || self.campaign.enrollments > self.campaign.trials {
            return bad("campaign.enrollments must be in 1..=trials".into());
        }
        if let Some(s) = &self.campaign.sweep {
            if s.is_empty() {
                return bad(format!("{} sweep has no values", s.name()));
            }
        }
        if self.fingerprint.references_per_device < 2 {
            return bad("fingerprint.references_per_device must be at least 2".into());
        }
        if self.fingerprint.capture_samples == 0 {
            return bad("fingerprint.capture_samples must be positive".into());
        }
        for d in &self.devices {
            d.pa.validate()?;
            d.mixer(self.protocol.carrier_hz).validate()?;
        }
        self.channel.fading.validate()?;
        Ok(())
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let s: Scenario = toml::from_str(text).map_err(|e| CliError::Data(format!("scenario: {e}")))?;
    s.validate()?;
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenario(&text).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn to_toml(s: &Scenario) -> Result<String> {
    toml::to_string(s).map_err(|e| CliError::Data(format!("cannot serialize scenario: {e}")))
}

pub fn save_scenario(s: &Scenario, path: &Path) -> Result<()> {
    std::fs::write(path, to_toml(s)?).map_err(|e| CliError::io(path, e))
}
