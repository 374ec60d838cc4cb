use num_complex::Complex64;
use proptest::prelude::*;
use wpli_core::analytics::{self, IdentAnalyticsParams};
use wpli_core::channel::{fading_pdf, fading_sample, FadingDensity, FadingModel};
use wpli_core::fft::{fft, ifft};
use wpli_core::fingerprint::{normalize_power, roc_eer};
use wpli_core::receiver::psd_fingerprint;
use wpli_core::rfchain::PaPowerSeries;
use wpli_core::special::{gamma_p, gamma_q, marcum_q};
use wpli_core::waveform::DacModel;

fn signal(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Complex64::new(a, b)), len)
}

fn channel() -> impl Strategy<Value = FadingModel> {
    prop_oneof![
        (0.2f64..4.0).prop_map(|omega| FadingModel::Rayleigh { omega }),
        (0.2f64..4.0, 0.0f64..20.0).prop_map(|(omega, k)| FadingModel::Rician { omega, k }),
        (0.2f64..4.0, 0.5f64..10.0).prop_map(|(omega, m)| FadingModel::Nakagami { omega, m }),
    ]
}

proptest! {
    #[test]
    fn fft_round_trip(x in (1usize..9).prop_flat_map(|p| signal(1 << p))) {
        let mut y = x.clone();
        fft(&mut y);
        ifft(&mut y);
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn psd_integrates_to_mean_power(x in signal(100), extra in 0usize..3) {
        let n_fft = 128 << extra;
        let v = psd_fingerprint(&x, 8e6, n_fft).unwrap();
        let mean = x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64;
        prop_assert!((v.total_power() - mean).abs() <= 1e-12 * mean.max(1.0));
        let u = normalize_power(&v).unwrap();
        prop_assert!((u.total_power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regularized_gammas_sum_to_one(s in 0.1f64..40.0, x in 0.0f64..80.0) {
        let (p, q) = (gamma_p(s, x).unwrap(), gamma_q(s, x).unwrap());
        prop_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
        prop_assert!((p + q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marcum_q_is_a_survival_function(u in 1u32..8, a in 0.0f64..10.0, b in 0.0f64..12.0, db in 0.01f64..2.0) {
        let q0 = marcum_q(u as f64, a, b).unwrap();
        let q1 = marcum_q(u as f64, a, b + db).unwrap();
        prop_assert!((0.0..=1.0).contains(&q0));
        prop_assert!(q1 <= q0 + 1e-13);
        prop_assert!(marcum_q(u as f64, a + 0.5, b).unwrap() >= q0 - 1e-13);
    }

    #[test]
    fn false_rejection_falls_with_threshold(mu in 1u32..64, lambda in 0.0f64..200.0) {
        let a = analytics::frr(lambda, mu).unwrap();
        let b = analytics::frr(lambda + 1.0, mu).unwrap();
        prop_assert!(b <= a + 1e-14);
    }

    #[test]
    fn difference_energy_helps_rejection(gamma in 0.5f64..30.0, mu in 1u32..16, lambda in 1.0f64..60.0) {
        let p = |channel| IdentAnalyticsParams { snr_gamma: gamma, threshold: lambda, time_bandwidth: mu, channel };
        let awgn = analytics::grr(&p(FadingModel::Awgn)).unwrap();
        let zero = analytics::grr(&IdentAnalyticsParams { snr_gamma: 0.0, ..p(FadingModel::Awgn) }).unwrap();
        prop_assert!(awgn >= zero - 1e-12);
        let ray = analytics::grr(&p(FadingModel::Rayleigh { omega: 1.0 })).unwrap();
        prop_assert!((0.0..=1.0).contains(&ray));
    }

    #[test]
    fn fading_density_is_non_negative(model in channel(), alpha in 0.0f64..6.0) {
        match fading_pdf(alpha, &model).unwrap() {
            FadingDensity::Density(d) => prop_assert!(d >= 0.0 && d.is_finite()),
            FadingDensity::PointMass { .. } => prop_assert!(false),
        }
    }

    #[test]
    fn fading_draws_are_seed_deterministic(model in channel(), seed in any::<u64>()) {
        let a = fading_sample(&model, seed).unwrap();
        prop_assert_eq!(a, fading_sample(&model, seed).unwrap());
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn linear_series_is_a_gain(re in -2.0f64..2.0, im in -2.0f64..2.0, z in signal(1)) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let a1 = Complex64::new(re, im);
        let pa = PaPowerSeries::new(vec![a1, Complex64::new(0.0, 0.0)]).unwrap();
        prop_assert!(pa.is_linear());
        prop_assert!((pa.apply(z[0]) - a1 * z[0]).norm() < 1e-12);
    }

    #[test]
    fn ideal_dac_error_within_half_step(bits in 2u32..16, v in -0.999f64..0.999) {
        let mut d = DacModel::for_symbol_period(0.5e-6);
        d.bits = bits;
        prop_assert!((d.quantize(v) - v).abs() <= d.max_error() * (1.0 + 1e-12));
    }

    #[test]
    fn roc_rates_are_monotone(
        g in prop::collection::vec(0.0f64..10.0, 1..60),
        i in prop::collection::vec(0.0f64..10.0, 1..60),
    ) {
        let roc = roc_eer(&g, &i).unwrap();
        for w in roc.points.windows(2) {
            prop_assert!(w[1].far >= w[0].far);
            prop_assert!(w[1].frr <= w[0].frr);
            prop_assert!((w[0].far + w[0].grr() - 1.0).abs() < 1e-15);
        }
        prop_assert!((0.0..=1.0).contains(&roc.eer));
    }
}
