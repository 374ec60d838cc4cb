//! Campaign output: a long-format CSV table and a JSON summary.
//!
//! CSV columns: `schema_version, point, label, distance_m, sample_rate_hz,
//! n_fft, channel, snr_db, metric, value`, one row per sweep point and
//! metric. Undefined values are written as `NaN`.

use crate::campaign::{channel_label, CampaignResult, PointResult, RESULT_SCHEMA_VERSION};
use crate::error::{CliError, Result};
use serde::{Deserialize, Deserializer, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub schema_version: u32,
    pub point: usize,
    pub label: String,
    pub distance_m: f64,
    pub sample_rate_hz: f64,
    pub n_fft: usize,
    pub channel: String,
    pub snr_db: f64,
    pub metric: &'static str,
    pub value: f64,
}

fn metrics(p: &PointResult) -> Vec<(&'static str, f64)> {
    let r = &p.report;
    let mut m = vec![
        ("trials", r.trials as f64),
        ("decisions", r.decisions as f64),
        ("failures", r.failure_count() as f64),
        ("p_e", r.p_e),
        ("p_e_std_error", r.p_e_std_error),
        ("far", r.far),
        ("frr", r.frr),
        ("gar", r.gar),
        ("grr", r.grr),
        ("eer", r.eer),
        ("eer_threshold", r.eer_threshold),
    ];
    if let Some(q) = &p.prediction {
        m.push(("ideal_two_device_p_e", q.two_device_p_e));
        m.push(("ideal_energy_detector_eer", q.energy_detector_eer));
        m.push(("difference_snr", q.difference_snr));
    }
    m
}

pub fn metric_rows(result: &CampaignResult) -> Vec<MetricRow> {
    result
        .points
        .iter()
        .flat_map(|p| {
            metrics(p).into_iter().map(move |(metric, value)| MetricRow {
                schema_version: RESULT_SCHEMA_VERSION,
                point: p.index,
                label: p.label.clone(),
                distance_m: p.distance_m,
                sample_rate_hz: p.sample_rate_hz,
                n_fft: p.n_fft,
                channel: channel_label(&p.channel),
                snr_db: p.snr_db,
                metric,
                value,
            })
        })
        .collect()
}

pub fn write_csv<W: std::io::Write>(result: &CampaignResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in metric_rows(result) {
        w.serialize(row).map_err(|e| CliError::Data(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| CliError::Data(format!("csv: {e}")))
}

pub fn summary_json(result: &CampaignResult) -> Result<String> {
    let mut s = serde_json::to_string_pretty(result).map_err(|e| CliError::Data(format!("summary: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn parse_summary(text: &str) -> Result<CampaignResult> {
    let r: CampaignResult = serde_json::from_str(text).map_err(|e| CliError::Data(format!("summary: {e}")))?;
    if r.schema_version != RESULT_SCHEMA_VERSION {
        return Err(CliError::Data(format!(
            "result schema_version {} is not supported (expected {RESULT_SCHEMA_VERSION})",
            r.schema_version
        )));
    }
    Ok(r)
}

/// Writes `<dir>/results.csv` and `<dir>/summary.json`.
pub fn save_result(result: &CampaignResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let csv_path = dir.join("results.csv");
    let f = std::fs::File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    write_csv(result, std::io::BufWriter::new(f))?;
    let json_path = dir.join("summary.json");
    std::fs::write(&json_path, summary_json(result)?).map_err(|e| CliError::io(&json_path, e))
}

pub fn load_summary(path: &Path) -> Result<CampaignResult> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_summary(&text)
}

/// JSON has no NaN; serde_json writes it as `null`, read it back as NaN.
pub fn f64_or_nan<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}
