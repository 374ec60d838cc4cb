//! Discrete Fourier transforms.
//!
//! Radix-2 iterative Cooley-Tukey for power-of-two lengths, Bluestein's chirp-z
//! for everything else. Forward transforms use the `e^{-2πikn/N}` kernel and
//! are unnormalized; [`ifft`] divides by `N`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

pub fn fft(buf: &mut [Complex64]) {
    transform(buf, false);
}

pub fn ifft(buf: &mut [Complex64]) {
    transform(buf, true);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Forward transform of `x` zero-padded (or truncated) to `n` points.
pub fn fft_padded(x: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let m = x.len().min(n);
    buf[..m].copy_from_slice(&x[..m]);
    fft(&mut buf);
    buf
}

fn transform(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        radix2(buf, inverse);
    } else {
        bluestein(buf, inverse);
    }
}

fn radix2(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    // twiddles for the largest stage; smaller stages stride through them
    let half = n / 2;
    let twiddles: Vec<Complex64> = (0..half)
        .map(|k| {
            let a = sign * 2.0 * PI * k as f64 / n as f64;
            Complex64::new(libm::cos(a), libm::sin(a))
        })
        .collect();
    let mut len = 2;
    while len <= n {
        let step = n / len;
        let h = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..h {
                let w = twiddles[k * step];
                let a = buf[start + k];
                let b = buf[start + k + h] * w;
                buf[start + k] = a + b;
                buf[start + k + h] = a - b;
            }
        }
        len <<= 1;
    }
}

fn bluestein(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let m = (2 * n - 1).next_power_of_two();
    let sign = if inverse { 1.0 } else { -1.0 };
    // chirp w_k = exp(sign * iπ k² / n); k² taken mod 2n to keep the angle small
    let chirp: Vec<Complex64> = (0..n)
        .map(|k| {
            let k2 = ((k as u128 * k as u128) % (2 * n as u128)) as f64;
            let a = sign * PI * k2 / n as f64;
            Complex64::new(libm::cos(a), libm::sin(a))
        })
        .collect();
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        a[k] = buf[k] * chirp[k];
    }
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    b[0] = chirp[0].conj();
    for k in 1..n {
        b[k] = chirp[k].conj();
        b[m - k] = chirp[k].conj();
    }
    radix2(&mut a, false);
    radix2(&mut b, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    radix2(&mut a, true);
    let scale = 1.0 / m as f64;
    for k in 0..n {
        buf[k] = a[k] * scale * chirp[k];
    }
}

/// Reorders an FFT-ordered vector so that frequency runs from `-fs/2` upward.
pub fn fftshift<T: Copy>(x: &[T]) -> Vec<T> {
    let n = x.len();
    let split = n.div_ceil(2);
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&x[split..]);
    out.extend_from_slice(&x[..split]);
    out
}

/// Frequencies (Hz) of FFT bins in natural FFT order.
pub fn fft_frequencies(n: usize, sample_rate: f64) -> Vec<f64> {
    let df = sample_rate / n as f64;
    (0..n)
        .map(|k| {
            if k < n.div_ceil(2) {
                k as f64 * df
            } else {
                (k as f64 - n as f64) * df
            }
        })
        .collect()
}
