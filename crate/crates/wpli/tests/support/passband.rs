//! Time-domain PA oracle: the series is applied to the real passband
//! waveform, the first zone is cut out in the frequency domain and brought
//! back to baseband. Uses rustfft so no transform is shared with the code
//! under test.

use num_complex::Complex64;
use rustfft::FftPlanner;

fn forward(x: &mut [Complex64]) {
    FftPlanner::new().plan_fft_forward(x.len()).process(x);
}

fn inverse(x: &mut [Complex64]) {
    let n = x.len() as f64;
    FftPlanner::new().plan_fft_inverse(x.len()).process(x);
    for v in x.iter_mut() {
        *v /= n;
    }
}

/// `coeffs[i]` multiplies `x^(2i+1)`; a complex coefficient acts on the
/// analytic part, so it rotates the phase of every zone that order feeds.
/// `carrier_bin` sets the carrier to `carrier_bin·fs/len`.
pub fn first_zone(z: &[Complex64], carrier_bin: usize, coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = z.len();
    let x: Vec<f64> = z
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let th = 2.0 * std::f64::consts::PI * (carrier_bin * k % n) as f64 / n as f64;
            (v * Complex64::from_polar(1.0, th)).re
        })
        .collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for (i, a) in coeffs.iter().enumerate() {
        let order = 2 * i as i32 + 1;
        let mut p: Vec<Complex64> = x.iter().map(|v| Complex64::new(v.powi(order), 0.0)).collect();
        forward(&mut p);
        // analytic signal: drop negative frequencies, double positive ones
        for k in 1..n / 2 {
            acc[k] += a * p[k] * 2.0;
        }
    }
    let half = carrier_bin / 2;
    let mut bb = vec![Complex64::new(0.0, 0.0); n];
    for (k, a) in acc.iter().enumerate().take(carrier_bin + half).skip(carrier_bin - half) {
        let shifted = (k + n - carrier_bin) % n;
        bb[shifted] = *a;
    }
    inverse(&mut bb);
    bb
}

/// Hann-windowed Welch average, 50 % overlap, centred grid, integrates to
/// mean power.
pub fn welch(x: &[Complex64], fs: f64, segment: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..segment)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / segment as f64).cos())
        .collect();
    let mut acc = vec![0.0; segment];
    let mut count = 0;
    let mut start = 0;
    while start + segment <= x.len() {
        let mut buf: Vec<Complex64> = (0..segment).map(|i| x[start + i] * w[i]).collect();
        forward(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        count += 1;
        start += segment / 2;
    }
    let norm = w.iter().map(|v| v * v).sum::<f64>() * fs * count as f64;
    let mut out: Vec<f64> = acc.iter().map(|v| v / norm).collect();
    out.rotate_right(segment / 2);
    out
}
