//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{out_of_range, Result};
use alloc::format;
use alloc::vec::Vec;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut stack: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = kronrod(&f, a, b);
    stack.push((a, b, v, e));
    let mut total = 0.0;
    let mut evaluations = 0usize;
    while let Some((lo, hi, v, e)) = stack.pop() {
        let width_share = (hi - lo).abs() / (b - a).abs().max(f64::MIN_POSITIVE);
        if e <= tol * width_share.max(1e-6) || (hi - lo).abs() < 1e-14 * (1.0 + lo.abs()) {
            total += v;
            continue;
        }
        evaluations += 1;
        if evaluations > 200_000 {
            return Err(out_of_range("integrate", format!("no convergence on [{a}, {b}]")));
        }
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod(&f, lo, mid);
        let (v2, e2) = kronrod(&f, mid, hi);
        stack.push((lo, mid, v1, e1));
        stack.push((mid, hi, v2, e2));
    }
    Ok(total)
}

/// Integrates over `[a, ∞)` through the substitution `x = a + t/(1-t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<f64> {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let one_minus = 1.0 - t;
            let x = a + t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_gaussian() {
        let v = integrate(|x| x * x, 0.0, 3.0, 1e-12).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let g = integrate_to_infinity(|x| (-x * x / 2.0).exp(), 0.0, 1e-12).unwrap();
        assert!((g - (core::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10);
    }
}
