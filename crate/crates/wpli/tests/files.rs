use num_complex::Complex64;
use std::path::Path;
use wpli::iq::{decode, ingest_iq, write_iq, IqMeta};
use wpli::scenario::{parse_scenario, to_toml};
use wpli::CliError;
use wpli_core::receiver::psd_fingerprint;

const MINIMAL: &str = r#"
schema_version = 1

[[devices]]
id = "a"
pa = [[1.0, 0.0]]

[campaign]
trials = 10
seed = 3
"#;

fn scenarios_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn minimal_scenario_takes_defaults() {
    let s = parse_scenario(MINIMAL).unwrap();
    assert_eq!(s.receiver.sample_rate_hz, 8e6);
    assert_eq!(s.fingerprint.n_fft, 256);
    assert_eq!(s.fingerprint.references_per_device, 20);
    assert_eq!(s.channel.snr_db(1.0), 25.0);
    assert!((s.channel.snr_db(6.0) - 15.0).abs() < 1e-12);
    assert_eq!(s.campaign.enrollments, 10);
}

#[test]
fn unknown_key_is_named_with_its_line() {
    let text = MINIMAL.replace("seed = 3", "seed = 3\nsede = 4");
    let msg = parse_scenario(&text).unwrap_err().to_string();
    assert!(msg.contains("sede"), "{msg}");
    assert!(msg.contains("line 11"), "{msg}");
    let text = MINIMAL.replace("[campaign]", "[receiver]\nsample_rate = 2e6\n\n[campaign]");
    let msg = parse_scenario(&text).unwrap_err().to_string();
    assert!(msg.contains("sample_rate"), "{msg}");
}

#[test]
fn wrong_schema_version_is_rejected() {
    let err = parse_scenario(&MINIMAL.replace("schema_version = 1", "schema_version = 2")).unwrap_err();
    assert!(matches!(err, CliError::Data(_)));
}

#[test]
fn shipped_scenarios_load_and_round_trip() {
    let mut n = 0;
    for entry in std::fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let s = wpli::load_scenario(&path).unwrap();
            assert_eq!(parse_scenario(&to_toml(&s).unwrap()).unwrap(), s, "{}", path.display());
            n += 1;
        }
    }
    assert!(n >= 5);
}

#[test]
fn eight_bytes_make_one_sample() {
    let mut b = 1.0f32.to_le_bytes().to_vec();
    b.extend_from_slice(&(-1.0f32).to_le_bytes());
    assert_eq!(decode(&b).unwrap(), vec![Complex64::new(1.0, -1.0)]);
    assert!(decode(&b[..7]).is_err());
    assert!(decode(&b[..4]).is_err());
}

#[test]
fn iq_errors_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.cf32");
    std::fs::write(&p, [0u8; 16]).unwrap();
    let err = ingest_iq(&p, None).unwrap_err();
    assert!(err.to_string().contains("missing IQ metadata"), "{err}");
    assert_eq!(err.exit_code(), 2);
    std::fs::write(&p, [0u8; 13]).unwrap();
    let err = ingest_iq(&p, Some(&IqMeta::new(1e6, 0.0))).unwrap_err();
    assert!(err.to_string().contains("truncated"), "{err}");
}

#[test]
fn written_tone_peaks_at_its_frequency() {
    let (n, fs, f0) = (1024usize, 8e6, 1.25e6);
    let x: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5, 2.0 * std::f64::consts::PI * f0 * k as f64 / fs))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("tone.cf32");
    write_iq(&p, &x, &IqMeta::new(fs, 0.0)).unwrap();
    let (sig, meta) = ingest_iq(&p, None).unwrap();
    assert_eq!(meta.sample_rate_hz, fs);
    let v = psd_fingerprint(sig.samples(), fs, n).unwrap();
    let k = (0..v.len()).max_by(|&a, &b| v.psd[a].total_cmp(&v.psd[b])).unwrap();
    assert!((v.frequencies()[k] - f0).abs() < 1e-6);
}

#[test]
fn database_version_and_shape_are_checked() {
    let err = wpli::db::from_json(r#"{"schema_version": 9, "database": {}}"#).unwrap_err();
    assert!(err.to_string().contains("schema_version") || err.to_string().contains("missing"), "{err}");
    let err = wpli::db::from_json(r#"{"schema_version": 1, "extra": 0}"#).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn results_have_one_row_per_point_and_metric() {
    let mut s = parse_scenario(MINIMAL).unwrap();
    s.devices.push(wpli::scenario::DeviceProfile {
        id: "b".into(),
        ..s.devices[0].clone()
    });
    s.devices[1].pa = wpli::scenario::DeviceProfile::pa_from_pairs(&[(0.98, 0.01), (-0.05, 0.0)]).unwrap();
    s.campaign.trials = 40;
    s.campaign.enrollments = 2;
    s.campaign.sweep = Some(wpli::scenario::Sweep::Distance(vec![1.0, 2.0, 4.0]));
    let r = wpli::run_campaign(&s).unwrap();
    let mut out = Vec::new();
    wpli::results::write_csv(&r, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let rows = wpli::results::metric_rows(&r);
    assert_eq!(text.lines().count(), rows.len() + 1);
    assert_eq!(rows.len() % 3, 0);
    assert!(text.lines().next().unwrap().starts_with("schema_version,point,label"));
    for p in &r.points {
        assert_eq!(p.report.decisions + p.report.failure_count(), p.report.trials);
        assert_eq!(p.report.far + p.report.grr, 1.0);
    }
    let dir = tempfile::tempdir().unwrap();
    wpli::results::save_result(&r, dir.path()).unwrap();
    let back = wpli::results::load_summary(&dir.path().join("summary.json")).unwrap();
    assert_eq!(back, r);
}

mod round_trips {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn iq_bytes_survive_decode_encode(v in prop::collection::vec(any::<f32>().prop_filter("finite", |x| x.is_finite()), 0..64)) {
            let mut bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
            bytes.truncate(bytes.len() / 8 * 8);
            let x = decode(&bytes).unwrap();
            prop_assert_eq!(wpli::iq::encode(&x), bytes);
        }

        #[test]
        fn scenario_save_load_is_a_fixpoint(trials in 1usize..5000, seed in 0..=i64::MAX as u64, d in 0.01f64..100.0, refs in 2usize..300) {
            let mut s = parse_scenario(MINIMAL).unwrap();
            s.campaign.trials = trials;
            s.campaign.enrollments = 1;
            s.campaign.seed = seed;
            s.channel.distance_m = d;
            s.fingerprint.references_per_device = refs;
            let text = to_toml(&s).unwrap();
            let mut big = s.clone();
            big.campaign.seed = i64::MAX as u64 + 1 + seed / 2;
            prop_assert!(big.validate().is_err());
            let back = parse_scenario(&text).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(to_toml(&back).unwrap(), text);
        }
    }
}
