use std::path::Path;
use std::process::Command;

fn wpli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wpli")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn minimal() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios/minimal.toml")
        .display()
        .to_string()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(wpli(&[]).0, 1);
    assert_eq!(wpli(&["frobnicate"]).0, 1);
    assert_eq!(wpli(&["analyze", "--channel", "weird"]).0, 1);
    assert_eq!(wpli(&["--help"]).0, 0);
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 1\nbogus = 1\n").unwrap();
    let (code, _, err) = wpli(&["simulate", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("bogus"), "{err}");
    assert_eq!(wpli(&["simulate", "/nonexistent.toml"]).0, 2);
}

#[test]
fn simulate_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (code, stdout, err) = wpli(&["simulate", &minimal(), "-o", out.to_str().unwrap(), "--trials", "40"]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("p_e"));
    assert!(out.join("results.csv").exists());
    assert!(out.join("summary.json").exists());
}

#[test]
fn analyze_prints_an_roc_table() {
    let (code, stdout, _) = wpli(&["analyze", "--channel", "rayleigh", "--mu", "8", "--gamma-db", "10", "--points", "5"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 6);
    assert!(stdout.starts_with("gamma_db,threshold,far,frr,eer,eer_threshold"));
}

#[test]
fn roc_from_score_files() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let i = dir.path().join("i.txt");
    std::fs::write(&g, "0.1 0.2\n0.3").unwrap();
    std::fs::write(&i, "5,6,7").unwrap();
    let (code, stdout, _) = wpli(&["roc", "--genuine", g.to_str().unwrap(), "--imposter", i.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("eer 0 "), "{stdout}");
    std::fs::write(&i, "five").unwrap();
    assert_eq!(wpli(&["roc", "--genuine", g.to_str().unwrap(), "--imposter", i.to_str().unwrap()]).0, 2);
}

#[test]
fn enroll_classify_identify_from_iq() {
    use num_complex::Complex64;
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db.json");
    let db_s = db.to_str().unwrap();
    let meta = wpli::iq::IqMeta::new(1e6, 0.0);
    // two "devices": tones at different bins plus a little deterministic jitter
    let capture = |bin: f64, k: usize| -> std::path::PathBuf {
        let x: Vec<Complex64> = (0..64)
            .map(|t| {
                let wobble = 0.02 * ((k * 7 + t * 3) % 11) as f64;
                Complex64::from_polar(1.0 + wobble, 2.0 * std::f64::consts::PI * bin * t as f64 / 64.0)
            })
            .collect();
        let p = dir.path().join(format!("c{bin}_{k}.cf32"));
        wpli::iq::write_iq(&p, &x, &meta).unwrap();
        p
    };
    for k in 0..4 {
        for (dev, bin) in [("a", 5.0), ("b", 20.0)] {
            let p = capture(bin, k);
            let mut args = vec!["fingerprint", p.to_str().unwrap(), "--db", db_s, "--device", dev, "--n-fft", "64"];
            if k == 3 && dev == "b" {
                args.push("--train");
            }
            let (code, _, err) = wpli(&args);
            assert_eq!(code, 0, "{err}");
        }
    }
    let probe = capture(20.0, 9);
    let (code, stdout, err) = wpli(&["classify", "--db", db_s, "--n-fft", "64", probe.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.lines().nth(1).unwrap().contains(",b,"), "{stdout}");
    let (code, stdout, err) = wpli(&["identify", "--db", db_s, "--n-fft", "64", probe.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.lines().nth(1).unwrap().contains(",b,"), "{stdout}");
    let (code, _, _) = wpli(&["classify", "--db", db_s, "--n-fft", "32", probe.to_str().unwrap()]);
    assert_eq!(code, 2);
}
