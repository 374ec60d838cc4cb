use crate::error::{invalid, Result};
use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Origin {
    Baseband,
    /// Complex envelope of a real passband signal centred on `carrier_hz`.
    Passband { carrier_hz: f64 },
}

/// Uniformly sampled complex waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    sample_rate: f64,
    origin: Origin,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, origin: Origin) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(invalid("sample rate", format!("{sample_rate} Hz")));
        }
        if samples.is_empty() {
            return Err(invalid("signal", "no samples"));
        }
        if let Origin::Passband { carrier_hz } = origin {
            if !(carrier_hz > 0.0) {
                return Err(invalid("carrier", format!("{carrier_hz} Hz")));
            }
        }
        Ok(Self {
            samples,
            sample_rate,
            origin,
        })
    }

    pub fn baseband(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        Self::new(samples, sample_rate, Origin::Baseband)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Same metadata, new samples.
    pub(crate) fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
            origin: self.origin,
        }
    }

    pub fn scaled(&self, gain: f64) -> Self {
        self.with_samples(self.samples.iter().map(|s| s * gain).collect())
    }
}
