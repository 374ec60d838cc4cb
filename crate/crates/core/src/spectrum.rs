//! Periodogram and Welch PSD estimates shared by the transmitter-side
//! regrowth analysis and the receiver fingerprint.

use crate::error::{invalid, Result};
use crate::fft::{fft, fftshift, fft_frequencies};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            // periodic Hann: constant-overlap-add at 50 %
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * libm::cos(2.0 * PI * i as f64 / n as f64))
                .collect(),
        }
    }
}

/// Two-sided PSD on a centred frequency grid (`-fs/2 .. fs/2`).
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
}

impl Psd {
    pub fn bin_width(&self) -> f64 {
        if self.frequencies.len() < 2 {
            return 0.0;
        }
        self.frequencies[1] - self.frequencies[0]
    }

    pub fn total_power(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.bin_width()
    }
}

/// Welch-averaged spectral estimate with `segment`-point segments and 50 %
/// overlap. Normalized so that integrating the PSD gives mean power.
pub fn welch(x: &[Complex64], sample_rate: f64, segment: usize, window: Window) -> Result<Psd> {
    let segments = segment_starts(x.len(), segment)?;
    let w = window.coefficients(segment);
    let norm = w.iter().map(|v| v * v).sum::<f64>() * sample_rate;
    let mut acc = vec![0.0; segment];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment];
    for &start in &segments {
        for i in 0..segment {
            buf[i] = x[start + i] * w[i];
        }
        fft(&mut buf);
        for (a, v) in acc.iter_mut().zip(&buf) {
            *a += v.norm_sqr();
        }
    }
    let scale = 1.0 / (norm * segments.len() as f64);
    let values: Vec<f64> = acc.iter().map(|v| v * scale).collect();
    Ok(Psd {
        frequencies: fftshift(&fft_frequencies(segment, sample_rate)),
        values: fftshift(&values),
    })
}

pub(crate) fn segment_starts(len: usize, segment: usize) -> Result<Vec<usize>> {
    if segment < 2 || segment > len {
        return Err(invalid(
            "segment length",
            format!("{segment} for a {len}-sample signal"),
        ));
    }
    let hop = segment / 2;
    Ok((0..=(len - segment) / hop).map(|i| i * hop).collect())
}

pub fn to_db(v: f64) -> f64 {
    10.0 * libm::log10(v.max(1e-300))
}
