//! Raw IQ captures.
//!
//! Sample file: interleaved I, Q pairs, each an IEEE-754 binary32 in
//! little-endian byte order, 8 bytes per complex sample, no header. This is
//! the `cf32` / `fc32` layout written by GNU Radio file sinks, `rx_samples_to_file
//! --type float` and SoapySDR tooling on x86/ARM hosts.
//!
//! Metadata lives in a JSON sidecar next to the samples, `<file>.json`:
//!
//! ```json
//! { "schema_version": 1, "sample_rate_hz": 8000000.0, "carrier_hz": 2440000000.0, "gain_db": 0.0 }
//! ```
//!
//! `sample_rate_hz` is required; `carrier_hz` and `gain_db` default to 0.

use crate::error::{CliError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use wpli_core::signal::{ComplexSignal, Origin};

pub const IQ_META_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IqMeta {
    pub schema_version: u32,
    pub sample_rate_hz: f64,
    /// 0 marks a plain baseband capture.
    #[serde(default)]
    pub carrier_hz: f64,
    /// Receive gain in effect, informational.
    #[serde(default)]
    pub gain_db: f64,
}

impl IqMeta {
    pub fn new(sample_rate_hz: f64, carrier_hz: f64) -> Self {
        Self {
            schema_version: IQ_META_SCHEMA_VERSION,
            sample_rate_hz,
            carrier_hz,
            gain_db: 0.0,
        }
    }

    fn check(&self) -> Result<()> {
        if self.schema_version != IQ_META_SCHEMA_VERSION {
            return Err(CliError::Data(format!(
                "IQ metadata schema_version {} is not supported",
                self.schema_version
            )));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(CliError::Data(format!("bad sample rate {}", self.sample_rate_hz)));
        }
        if !(self.carrier_hz >= 0.0 && self.carrier_hz.is_finite()) {
            return Err(CliError::Data(format!("bad carrier {}", self.carrier_hz)));
        }
        Ok(())
    }
}

pub fn sidecar_path(samples: &Path) -> PathBuf {
    let mut p = samples.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

pub fn decode(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(CliError::Data(format!(
            "truncated IQ data: {} bytes is not a whole number of 8-byte samples",
            bytes.len()
        )));
    }
    let f = |b: &[u8]| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| Complex64::new(f(&c[..4]), f(&c[4..])))
        .collect())
}

/// Samples are rounded to binary32.
pub fn encode(x: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 * x.len());
    for v in x {
        out.extend_from_slice(&(v.re as f32).to_le_bytes());
        out.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    out
}

pub fn load_meta(path: &Path) -> Result<IqMeta> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Data(format!("missing IQ metadata {}", path.display()))
        } else {
            CliError::io(path, e)
        }
    })?;
    let m: IqMeta = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    m.check()?;
    Ok(m)
}

/// Reads `path` and its metadata; `meta` overrides the sidecar.
pub fn ingest_iq(path: &Path, meta: Option<&IqMeta>) -> Result<(ComplexSignal, IqMeta)> {
    let meta = match meta {
        Some(m) => {
            m.check()?;
            m.clone()
        }
        None => load_meta(&sidecar_path(path))?,
    };
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let samples = decode(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if samples.is_empty() {
        return Err(CliError::Data(format!("{}: no samples", path.display())));
    }
    let origin = if meta.carrier_hz > 0.0 {
        Origin::Passband {
            carrier_hz: meta.carrier_hz,
        }
    } else {
        Origin::Baseband
    };
    let signal = ComplexSignal::new(samples, meta.sample_rate_hz, origin)?;
    Ok((signal, meta))
}

/// Writes samples and the sidecar.
pub fn write_iq(path: &Path, x: &[Complex64], meta: &IqMeta) -> Result<()> {
    meta.check()?;
    std::fs::write(path, encode(x)).map_err(|e| CliError::io(path, e))?;
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(meta).map_err(|e| CliError::Data(e.to_string()))?;
    std::fs::write(&side, text + "\n").map_err(|e| CliError::io(&side, e))
}
