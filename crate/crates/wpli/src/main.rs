use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use wpli::db::{load_database, save_database};
use wpli::iq::{ingest_iq, IqMeta};
use wpli::{load_scenario, CliError, Result};
use wpli_core::analytics::theoretical_roc;
use wpli_core::channel::FadingModel;
use wpli_core::fingerprint::{
    classify, identify, leave_device_out_threshold, normalize_power, roc_eer, CaptureMeta, FingerprintDatabase,
    FingerprintRecord, LdaOptions, SpreadMode,
};
use wpli_core::receiver::{psd_fingerprint, FingerprintVector};

/// Physical-layer device identification from PSD fingerprints.
#[derive(Parser)]
#[command(name = "wpli", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo campaign from a scenario file.
    Simulate {
        /// Scenario TOML
        scenario: PathBuf,
        /// Directory for results.csv and summary.json.
        #[arg(short, long, default_value = "results")]
        out: PathBuf,
        /// Override campaign.trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Override campaign.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Closed-form identification ROC: FAR/FRR per threshold and the EER.
    Analyze {
        /// awgn, rayleigh, rician:<K> or nakagami:<m>, unit mean power.
        #[arg(long, default_value = "awgn")]
        channel: String,
        /// Time-bandwidth product of the energy detector.
        #[arg(long, default_value_t = 64)]
        mu: u32,
        /// Comma-separated fingerprint-difference SNRs, dB.
        #[arg(long, value_delimiter = ',', default_value = "0,5,10,15,20")]
        gamma_db: Vec<f64>,
        /// ROC thresholds per SNR, evenly spaced over 0..4·mu+4·gamma.
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Extract a fingerprint from an IQ capture and add it to a database.
    Fingerprint {
        /// cf32 capture with a `.json` sidecar
        iq: PathBuf,
        /// Database JSON; created if missing
        #[arg(long)]
        db: PathBuf,
        /// Device the capture belongs to.
        #[arg(long)]
        device: String,
        #[command(flatten)]
        ext: Extract,
        /// Capture distance in metres, stored as metadata
        #[arg(long, default_value_t = 0.0)]
        distance: f64,
        /// Channel label, stored as metadata
        #[arg(long, default_value = "unknown")]
        channel: String,
        /// Retrain the projection and threshold after adding.
        #[arg(long)]
        train: bool,
    },
    /// Closest enrolled device for each capture.
    Classify {
        /// Database JSON
        #[arg(long)]
        db: PathBuf,
        #[command(flatten)]
        ext: Extract,
        /// cf32 captures, each with a `.json` sidecar
        #[arg(required = true)]
        iq: Vec<PathBuf>,
    },
    /// Accept or reject each capture against the database threshold.
    Identify {
        /// Database JSON
        #[arg(long)]
        db: PathBuf,
        /// Override the stored threshold.
        #[arg(long)]
        lambda: Option<f64>,
        #[command(flatten)]
        ext: Extract,
        /// cf32 captures, each with a `.json` sidecar
        #[arg(required = true)]
        iq: Vec<PathBuf>,
    },
    /// ROC and EER from genuine and imposter score files.
    Roc {
        /// Whitespace- or comma-separated distances of genuine attempts.
        #[arg(long)]
        genuine: PathBuf,
        /// Same format, imposter attempts
        #[arg(long)]
        imposter: PathBuf,
        /// Write the full ROC as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Extract {
    #[arg(long, default_value_t = 256)]
    n_fft: usize,
    /// First sample of the capture window.
    #[arg(long, default_value_t = 0)]
    offset: usize,
    /// Window length; default min(n_fft, remaining samples).
    #[arg(long)]
    capture: Option<usize>,
    /// Scale the PSD to unit total power.
    #[arg(long)]
    normalize: bool,
    /// Sample rate, Hz; replaces the sidecar metadata.
    #[arg(long)]
    sample_rate: Option<f64>,
}

impl Extract {
    fn vector(&self, path: &Path) -> Result<FingerprintVector> {
        let meta = self.sample_rate.map(|fs| IqMeta::new(fs, 0.0));
        let (signal, meta) = ingest_iq(path, meta.as_ref())?;
        let x = signal.samples();
        if self.offset >= x.len() {
            return Err(CliError::Data(format!(
                "{}: offset {} is past the end ({} samples)",
                path.display(),
                self.offset,
                x.len()
            )));
        }
        let rest = &x[self.offset..];
        let len = self.capture.unwrap_or(self.n_fft.min(rest.len()));
        if len == 0 || len > rest.len() {
            return Err(CliError::Data(format!(
                "{}: capture of {len} samples does not fit ({} available)",
                path.display(),
                rest.len()
            )));
        }
        let v = psd_fingerprint(&rest[..len], meta.sample_rate_hz, self.n_fft)?;
        Ok(if self.normalize { normalize_power(&v)? } else { v })
    }
}

fn parse_channel(s: &str) -> Result<FadingModel> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    let num = |a: Option<&str>| -> Result<f64> {
        a.ok_or_else(|| CliError::Usage(format!("channel {name} needs a parameter, e.g. {name}:4")))?
            .parse()
            .map_err(|_| CliError::Usage(format!("bad channel parameter in {s}")))
    };
    let c = match name {
        "awgn" => FadingModel::Awgn,
        "rayleigh" => FadingModel::Rayleigh { omega: 1.0 },
        "rician" => FadingModel::Rician {
            omega: 1.0,
            k: num(arg)?,
        },
        "nakagami" => FadingModel::Nakagami {
            omega: 1.0,
            m: num(arg)?,
        },
        _ => return Err(CliError::Usage(format!("unknown channel {s}"))),
    };
    c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(c)
}

fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Data(format!("{}: not a number: {t}", path.display())))
        })
        .collect()
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Data(format!("stdout: {e}"))
}

fn simulate(path: &Path, out: &Path, trials: Option<usize>, seed: Option<u64>) -> Result<()> {
    let mut s = load_scenario(path)?;
    if let Some(t) = trials {
        s.campaign.trials = t;
    }
    if let Some(v) = seed {
        s.campaign.seed = v;
    }
    s.validate()?;
    let r = wpli::run_campaign(&s)?;
    wpli::results::save_result(&r, out)?;
    let mut w = std::io::stdout().lock();
    writeln!(w, "{:>18} {:>7} {:>8} {:>8} {:>8} {:>8}", r.sweep_variable, "snr_db", "p_e", "eer", "frr", "far").map_err(io_err)?;
    for p in &r.points {
        writeln!(
            w,
            "{:>18} {:>7.2} {:>8.4} {:>8.4} {:>8.4} {:>8.4}{}",
            p.label,
            p.snr_db,
            p.report.p_e,
            p.report.eer,
            p.report.frr,
            p.report.far,
            match p.report.failure_count() {
                0 => String::new(),
                n => format!("  ({n} failed)"),
            }
        )
        .map_err(io_err)?;
    }
    writeln!(w, "wrote {}", out.display()).map_err(io_err)
}

fn analyze(channel: &str, mu: u32, gamma_db: &[f64], points: usize) -> Result<()> {
    let channel = parse_channel(channel)?;
    if mu == 0 || points < 2 {
        return Err(CliError::Usage("mu must be positive and points at least 2".into()));
    }
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    let err = |e: csv::Error| CliError::Data(format!("csv: {e}"));
    w.write_record(["gamma_db", "threshold", "far", "frr", "eer", "eer_threshold"])
        .map_err(err)?;
    for &g_db in gamma_db {
        let g = 10f64.powf(g_db / 10.0);
        let top = 4.0 * mu as f64 + 4.0 * g;
        let lambdas: Vec<f64> = (0..points).map(|i| top * i as f64 / (points - 1) as f64).collect();
        let roc = theoretical_roc(g, mu, channel, &lambdas)?;
        for p in &roc.points {
            w.serialize((g_db, p.threshold, p.far, p.frr, roc.eer, roc.eer_threshold))
                .map_err(err)?;
        }
    }
    w.flush().map_err(io_err)
}

fn fingerprint(
    iq: &Path,
    db_path: &Path,
    device: &str,
    ext: &Extract,
    distance: f64,
    channel: &str,
    train: bool,
) -> Result<()> {
    let vector = ext.vector(iq)?;
    let mut db = if db_path.exists() {
        load_database(db_path)?
    } else {
        FingerprintDatabase::from_records(Vec::new(), LdaOptions::default(), SpreadMode::default())
    };
    if let Some(n) = db.dimension() {
        if n != vector.len() {
            return Err(CliError::Data(format!("database has {n} bins, capture gives {}", vector.len())));
        }
    }
    let record = FingerprintRecord {
        device_id: device.to_string(),
        meta: CaptureMeta {
            distance_m: distance,
            channel: channel.to_string(),
            sample_rate_hz: vector.sample_rate_hz,
            n_fft: vector.n_fft,
        },
        vector,
    };
    let mut records: Vec<FingerprintRecord> = db.devices.drain(..).flat_map(|d| d.references).collect();
    records.push(record);
    let mut db = FingerprintDatabase::from_records(records, db.lda_options, db.spread);
    if train {
        db.train()?;
        if db.devices.len() >= 2 {
            db.threshold = Some(leave_device_out_threshold(&db)?);
        }
    }
    save_database(&db, db_path)?;
    let n: usize = db.devices.iter().map(|d| d.references.len()).sum();
    println!("{}: {} devices, {n} references{}", db_path.display(), db.devices.len(), if db.lda.is_some() { ", trained" } else { "" });
    Ok(())
}

fn classify_cmd(db_path: &Path, ext: &Extract, files: &[PathBuf]) -> Result<()> {
    let db = load_database(db_path)?;
    if db.lda.is_none() {
        return Err(CliError::Data(format!("{}: database is not trained", db_path.display())));
    }
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    let err = |e: csv::Error| CliError::Data(format!("csv: {e}"));
    let mut header = vec!["file".to_string(), "device".to_string()];
    header.extend(db.devices.iter().map(|d| format!("distance_{}", d.id)));
    w.write_record(&header).map_err(err)?;
    for f in files {
        let c = classify(&ext.vector(f)?, &db)?;
        let mut row = vec![f.display().to_string(), db.devices[c.device].id.clone()];
        row.extend(c.distances.iter().map(|d| d.to_string()));
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(io_err)
}

fn identify_cmd(db_path: &Path, lambda: Option<f64>, ext: &Extract, files: &[PathBuf]) -> Result<()> {
    let db = load_database(db_path)?;
    let lambda = lambda.or(db.threshold).ok_or_else(|| {
        CliError::Usage(format!("{} stores no threshold; pass --lambda", db_path.display()))
    })?;
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    let err = |e: csv::Error| CliError::Data(format!("csv: {e}"));
    w.write_record(["file", "accepted", "nearest", "min_distance", "threshold"])
        .map_err(err)?;
    for f in files {
        let r = identify(&ext.vector(f)?, &db, lambda)?;
        w.serialize((
            f.display().to_string(),
            r.genuine,
            db.devices[r.nearest].id.as_str(),
            r.min_distance,
            lambda,
        ))
        .map_err(err)?;
    }
    w.flush().map_err(io_err)
}

fn roc_cmd(genuine: &Path, imposter: &Path, out: Option<&Path>) -> Result<()> {
    let roc = roc_eer(&read_scores(genuine)?, &read_scores(imposter)?)?;
    if let Some(path) = out {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let err = |e: csv::Error| CliError::Data(format!("csv: {e}"));
        w.write_record(["threshold", "far", "frr"]).map_err(err)?;
        for p in &roc.points {
            w.serialize((p.threshold, p.far, p.frr)).map_err(err)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    println!("eer {} at threshold {}", roc.eer, roc.eer_threshold);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            out,
            trials,
            seed,
        } => simulate(&scenario, &out, trials, seed),
        Command::Analyze {
            channel,
            mu,
            gamma_db,
            points,
        } => analyze(&channel, mu, &gamma_db, points),
        Command::Fingerprint {
            iq,
            db,
            device,
            ext,
            distance,
            channel,
            train,
        } => fingerprint(&iq, &db, &device, &ext, distance, &channel, train),
        Command::Classify { db, ext, iq } => classify_cmd(&db, &ext, &iq),
        Command::Identify { db, lambda, ext, iq } => identify_cmd(&db, lambda, &ext, &iq),
        Command::Roc { genuine, imposter, out } => roc_cmd(&genuine, &imposter, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
