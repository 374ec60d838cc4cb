use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use std::f64::consts::PI;
use wpli_core::channel::{fading_pdf, fading_sample, path_loss_db, FadingDensity, FadingModel, PathLossModel};
use wpli_core::fingerprint::{
    feature_distance, identify, roc_eer, train_lda, FingerprintDatabase, FingerprintRecord, CaptureMeta, LdaOptions,
    Projection, SpreadMode, classify,
};
use wpli_core::receiver::{detect_preamble, psd_fingerprint, FingerprintVector, NoiseFloor, Normalization};
use wpli_core::rfchain::{fit_pa_coefficients, regrowth_spectrum, FitOptions, PaPowerSeries};
use wpli_core::rng::{complex_normal, rng_from_seed, standard_normal};
use wpli_core::signal::ComplexSignal;
use wpli_core::waveform::{generate_baseband, psk_point, qam_constellation, rrc, ClockModel, DacModel, Modulation, ShapingFilter};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn qam16_has_unit_average_power() {
    let pts = qam_constellation(16).unwrap();
    let p = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / pts.len() as f64;
    assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
    assert!((psk_point(1, 4) - Complex64::from_polar(1.0, PI / 4.0)).norm() < 1e-15);
}

#[test]
fn rrc_is_continuous_at_its_singular_point() {
    let (t, beta) = (1.0, 0.5);
    let s = t / (4.0 * beta);
    let at = rrc(s, t, beta);
    assert!(at.is_finite());
    for eps in [1e-4, 1e-5] {
        assert!((rrc(s - eps, t, beta) - at).abs() < 1e-3);
        assert!((rrc(s + eps, t, beta) - at).abs() < 1e-3);
    }
}

#[test]
fn four_bit_quantization_error_bound() {
    let mut d = DacModel::for_symbol_period(1e-6);
    d.bits = 4;
    assert!((d.quantize(0.3) - 0.3).abs() <= 0.0625);
    d.bits = 24;
    assert!((d.quantize(0.3) - 0.3).abs() <= 2f64.powi(-24));
}

#[test]
fn path_loss_substitutions() {
    let m = |exponent| PathLossModel {
        ref_loss_db: -3.0,
        ref_distance_m: 1.0,
        exponent,
        shadowing_sigma_db: 0.0,
    };
    assert_abs_diff_eq!(path_loss_db(1.0, &m(2.0)).unwrap(), -3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(path_loss_db(10.0, &m(2.0)).unwrap(), -23.0, epsilon = 1e-12);
    assert_abs_diff_eq!(path_loss_db(2.0, &m(3.5)).unwrap(), -3.0 - 10.536, epsilon = 1e-3);
}

#[test]
fn fading_density_collapses() {
    let d = |a, m: FadingModel| match fading_pdf(a, &m).unwrap() {
        FadingDensity::Density(v) => v,
        FadingDensity::PointMass { .. } => panic!("point mass"),
    };
    let ray = FadingModel::Rayleigh { omega: 1.0 };
    assert_abs_diff_eq!(d(1.0, ray), 2.0 * (-1.0f64).exp(), epsilon = 1e-12);
    for a in [0.1, 0.7, 1.3, 2.5] {
        assert_abs_diff_eq!(d(a, FadingModel::Rician { omega: 1.0, k: 0.0 }), d(a, ray), epsilon = 1e-12);
        assert_abs_diff_eq!(d(a, FadingModel::Nakagami { omega: 1.0, m: 1.0 }), d(a, ray), epsilon = 1e-12);
    }
}

#[test]
fn nakagami_concentrates_for_large_m() {
    let m = FadingModel::Nakagami { omega: 1.0, m: 50.0 };
    let x: Vec<f64> = (0..20_000).map(|s| fading_sample(&m, s).unwrap()).collect();
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64).sqrt();
    assert!(sd / mean < 0.08);
    assert_eq!(fading_sample(&FadingModel::Awgn, 3).unwrap(), 1.0);
}

#[test]
fn bin_centred_tone_dominates() {
    let n = 256;
    let x: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * PI * 10.0 * k as f64 / n as f64)).collect();
    let v = psd_fingerprint(&x, 1.0, n).unwrap();
    let peak = v.psd.iter().cloned().fold(0.0, f64::max);
    let idx = v.psd.iter().position(|&p| p == peak).unwrap();
    assert_abs_diff_eq!(v.frequencies()[idx], 10.0 / n as f64, epsilon = 1e-12);
    let second = v.psd.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, p)| *p).fold(0.0, f64::max);
    assert!(10.0 * (peak / second.max(1e-300)).log10() >= 60.0);
    let zero = psd_fingerprint(&[c(0.0, 0.0); 8], 1.0, 8).unwrap();
    assert!(zero.psd.iter().all(|&p| p == 0.0));
}

#[test]
fn packet_onset_is_found() {
    let mut rng = rng_from_seed(5);
    let start = 300;
    let noise = 1e-2;
    let x: Vec<Complex64> = (0..1000)
        .map(|i| {
            let s = if i >= start { Complex64::from_polar(1.0, 0.3 * i as f64) } else { c(0.0, 0.0) };
            s + complex_normal(&mut rng, noise)
        })
        .collect();
    let window = 32;
    let got = detect_preamble(&x, window, 10.0, NoiseFloor::FirstWindow).unwrap();
    assert!((got as i64 - start as i64).abs() <= window as i64 / 2);
    let quiet: Vec<Complex64> = (0..500).map(|_| complex_normal(&mut rng, noise)).collect();
    assert!(detect_preamble(&quiet, window, 10.0, NoiseFloor::FirstWindow).is_err());
}

#[test]
fn linear_series_leaves_input_spectrum() {
    let mut dac = DacModel::for_symbol_period(0.5e-6);
    dac.amplitude_gain = 0.6 * 0.5e-6f64.sqrt();
    let bits: Vec<u8> = (0..256).map(|i| ((i * 7 + i / 3) % 2) as u8).collect();
    let z = generate_baseband(&bits, Modulation::Psk(4), 0.5e-6, &ShapingFilter::rrc(0.35), &ClockModel::ideal(), &dac).unwrap();
    let lin = regrowth_spectrum(&z, &PaPowerSeries::linear(1.0), 256).unwrap();
    let input = wpli_core::spectrum::welch(z.samples(), z.sample_rate(), 256, wpli_core::spectrum::Window::Hann).unwrap();
    for (a, b) in lin.psd.iter().zip(&input.values) {
        assert!((a - b).abs() <= 1e-12 * b.max(1e-30));
    }
    // a linear measurement fits back to a negligible third-order term
    let fit = fit_pa_coefficients(&input, &z, 3, &FitOptions::default()).unwrap();
    assert!(fit.series.coefficients()[1].norm() < 1e-3 * fit.series.coefficients()[0].norm());
}

#[test]
fn half_sine_regrowth_needs_envelope_variation() {
    let dac = DacModel::for_symbol_period(0.5e-6);
    let bits = wpli_core::waveform::preamble_chips();
    let z = generate_baseband(&bits, Modulation::Oqpsk, 0.5e-6, &ShapingFilter::HalfSine, &ClockModel::ideal(), &dac).unwrap();
    let pa = PaPowerSeries::new(vec![c(1.0, 0.0), c(-0.15, 0.02)]).unwrap();
    let uplift = |z: &ComplexSignal, lo: f64, hi: f64| {
        let lin = regrowth_spectrum(z, &PaPowerSeries::linear(1.0), 512).unwrap();
        let nl = regrowth_spectrum(z, &pa, 512).unwrap();
        let band: Vec<usize> = (0..lin.frequencies.len()).filter(|&k| (lo..hi).contains(&lin.frequencies[k].abs())).collect();
        let a: f64 = band.iter().map(|&k| nl.psd[k]).sum();
        let b: f64 = band.iter().map(|&k| lin.psd[k]).sum();
        10.0 * (a / b).log10()
    };
    // constant envelope: the series is only a complex gain
    assert!((uplift(&z, 1.5e6, 4e6) - uplift(&z, 0.0, 0.5e6)).abs() < 0.01);
    // once the envelope moves, the side lobes change more than the main lobe
    let ripple: Vec<Complex64> = z
        .samples()
        .iter()
        .enumerate()
        .map(|(i, v)| v * (1.0 + 0.2 * (2.0 * PI * i as f64 / 97.0).sin()))
        .collect();
    let z = ComplexSignal::baseband(ripple, z.sample_rate()).unwrap();
    assert!(uplift(&z, 1.5e6, 4e6).abs() > uplift(&z, 0.0, 0.5e6).abs() + 0.5);
}

fn fv(psd: Vec<f64>) -> FingerprintVector {
    FingerprintVector::new(psd, 1.0, Normalization::None).unwrap()
}

#[test]
fn distance_worked_values() {
    let r = fv(vec![0.0, 1.0, 2.0, 3.0]);
    assert_eq!(feature_distance(&r, &r, &Projection::Identity).unwrap(), 0.0);
    // within-vector spread of [1, -1, 1, -1] is 1
    let r = fv(vec![1.0, -1.0, 1.0, -1.0]);
    let s = fv(vec![2.0, -1.0, 1.0, -1.0]);
    assert_abs_diff_eq!(feature_distance(&s, &r, &Projection::Identity).unwrap(), 1.0, epsilon = 1e-15);
}

#[test]
fn lda_weights_the_discriminative_bin() {
    let mut rng = rng_from_seed(17);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for class in 0..2 {
        for _ in 0..40 {
            let mut v: Vec<f64> = (0..12).map(|_| standard_normal(&mut rng)).collect();
            v[7] = 0.2 * standard_normal(&mut rng) + 3.0 * class as f64;
            rows.push(v);
            labels.push(class);
        }
    }
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let p = train_lda(&refs, &labels, &LdaOptions { kappa: 1, shrinkage: 0.0 }).unwrap();
    let w = &p.columns[0];
    let others = w.iter().enumerate().filter(|(i, _)| *i != 7).map(|(_, v)| v.abs()).fold(0.0, f64::max);
    assert!(w[7].abs() >= 10.0 * others);
    assert_eq!(LdaOptions::default().kappa, 5);
}

fn gaussian_db(sep: f64, seed: u64) -> (FingerprintDatabase, Vec<(usize, FingerprintVector)>) {
    let mut rng = rng_from_seed(seed);
    let mut draw = |mean: f64| fv((0..4).map(|k| if k == 0 { mean + standard_normal(&mut rng) } else { 10.0 + standard_normal(&mut rng) }).collect());
    let mut records = Vec::new();
    for d in 0..2 {
        for _ in 0..30 {
            records.push(FingerprintRecord {
                device_id: format!("d{d}"),
                vector: draw(sep * d as f64),
                meta: CaptureMeta { distance_m: 0.1, channel: "awgn".into(), sample_rate_hz: 1.0, n_fft: 4 },
            });
        }
    }
    let tests = (0..1000).map(|i| (i % 2, draw(sep * (i % 2) as f64))).collect();
    let mut db = FingerprintDatabase::from_records(records, LdaOptions { kappa: 1, shrinkage: 0.0 }, SpreadMode::AcrossReferences);
    db.train().unwrap();
    (db, tests)
}

#[test]
fn classification_error_tracks_separation() {
    let (db, tests) = gaussian_db(6.0, 1);
    let err = tests.iter().filter(|(d, v)| classify(v, &db).unwrap().device != *d).count() as f64 / 1000.0;
    assert!(err < 0.01, "{err}");
    let stored = db.devices[1].references[3].vector.clone();
    assert_eq!(classify(&stored, &db).unwrap().device, 1);
    let (db, tests) = gaussian_db(0.0, 2);
    let err = tests.iter().filter(|(d, v)| classify(v, &db).unwrap().device != *d).count() as f64 / 1000.0;
    assert!((err - 0.5).abs() <= 0.05, "{err}");
}

#[test]
fn identification_threshold_edges() {
    let (db, _) = gaussian_db(6.0, 3);
    let own = db.devices[0].references[0].vector.clone();
    assert!(identify(&own, &db, 1e9).unwrap().genuine);
    assert!(!identify(&own, &db, 0.0).unwrap().genuine);
}

#[test]
fn eer_on_separable_scores_balances_rates() {
    let g: Vec<f64> = (0..100).map(|i| i as f64).collect();
    let i: Vec<f64> = (0..100).map(|i| 60.0 + i as f64).collect();
    let roc = roc_eer(&g, &i).unwrap();
    let p = roc.points.iter().find(|p| p.threshold == roc.eer_threshold).unwrap();
    assert!((p.far - p.frr).abs() <= 0.01 + 1e-12);
}
