//! Reference evaluations written independently of the library routines:
//! double-double series for the entire functions and Gauss-Legendre
//! quadrature for the Marcum Q tail.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Unevaluated sum `hi + lo` carrying ~32 significant digits.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn mul_f(self, o: f64) -> Dd {
        self.mul(Dd::new(o))
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f(q2));
        let q3 = r.hi / o.hi;
        Dd::new(q1).add(Dd::new(q2)).add(Dd::new(q3))
    }

    pub fn div_f(self, o: f64) -> Dd {
        self.div(Dd::new(o))
    }

    pub fn abs_hi(self) -> f64 {
        self.hi.abs()
    }
}

/// `e^x` in double-double: Taylor series of `e^{x/2^k}` then squaring.
pub fn dd_exp(x: f64) -> Dd {
    let k = 10;
    let r = Dd::new(x).div_f((1u64 << k) as f64);
    let mut term = Dd::new(1.0);
    let mut sum = Dd::new(1.0);
    for n in 1..40 {
        term = term.mul(r).div_f(n as f64);
        sum = sum.add(term);
        if term.abs_hi() < 1e-34 * sum.abs_hi() {
            break;
        }
    }
    for _ in 0..k {
        sum = sum.mul(sum);
    }
    sum
}

const DD_PI: Dd = Dd {
    hi: std::f64::consts::PI,
    lo: 1.2246467991473532e-16,
};

/// `sqrt` of a double-double by one Newton step.
fn dd_sqrt(x: Dd) -> Dd {
    let y = x.hi.sqrt();
    let y = Dd::new(y);
    y.add(x.sub(y.mul(y)).div(y.mul_f(2.0)))
}

/// `Γ(s)` for integer or half-integer `s > 0`.
pub fn dd_gamma_half_integer(s: f64) -> Dd {
    let twice = (2.0 * s).round();
    assert!((2.0 * s - twice).abs() < 1e-15 && twice >= 1.0, "s={s} is not a half integer");
    let (mut g, mut t) = if (twice as u64).is_multiple_of(2) {
        (Dd::new(1.0), 1.0)
    } else {
        (dd_sqrt(DD_PI), 0.5)
    };
    while t < s - 0.25 {
        g = g.mul_f(t);
        t += 1.0;
    }
    g
}

/// `I0(x) = Σ (x²/4)^k / (k!)²`.
pub fn bessel_i0(x: f64) -> f64 {
    let q = Dd::new(x).mul(Dd::new(x)).div_f(4.0);
    let mut term = Dd::new(1.0);
    let mut sum = Dd::new(1.0);
    for k in 1..500 {
        let kf = k as f64;
        term = term.mul(q).div_f(kf * kf);
        sum = sum.add(term);
        if term.abs_hi() < 1e-33 * sum.abs_hi() {
            break;
        }
    }
    sum.value()
}

/// `Γ(s, x) = Γ(s) − x^s e^{−x} Σ_k x^k / (s (s+1) ⋯ (s+k))` for
/// half-integer `s`.
pub fn incomplete_gamma_upper(s: f64, x: f64) -> f64 {
    let g = dd_gamma_half_integer(s);
    if x == 0.0 {
        return g.value();
    }
    let mut term = Dd::new(1.0).div_f(s);
    let mut sum = term;
    for k in 1..2000 {
        term = term.mul_f(x).div_f(s + k as f64);
        sum = sum.add(term);
        if term.abs_hi() < 1e-34 * sum.abs_hi() {
            break;
        }
    }
    // x^s = e^{s ln x}; ln x is only f64 accurate, so form x^s from the
    // integer part exactly and a square root for the half
    let mut xs = Dd::new(1.0);
    let mut t = s;
    while t >= 1.0 {
        xs = xs.mul_f(x);
        t -= 1.0;
    }
    if t > 0.25 {
        xs = xs.mul(dd_sqrt(Dd::new(x)));
    }
    let lower = xs.mul(dd_exp(-x)).mul(sum);
    g.sub(lower).value()
}

/// `₁F₁(a; b; x) = Σ (a)_k / (b)_k · x^k / k!`, summed directly so
/// negative `x` exercises cancellation in extended precision.
pub fn hyp1f1(a: f64, b: f64, x: f64) -> f64 {
    let mut term = Dd::new(1.0);
    let mut sum = Dd::new(1.0);
    for k in 0..5000 {
        let kf = k as f64;
        term = term.mul_f(a + kf).mul_f(x).div_f((b + kf) * (kf + 1.0));
        sum = sum.add(term);
        if term.abs_hi() < 1e-34 * sum.abs_hi().max(1.0) && kf > x.abs() {
            break;
        }
    }
    sum.value()
}

/// `I_ν(z)` for integer `ν`, positive series.
fn bessel_in(nu: u32, z: f64) -> f64 {
    let half = z / 2.0;
    let mut term = 1.0;
    for k in 1..=nu {
        term *= half / k as f64;
    }
    let mut sum = term;
    let q = half * half;
    for k in 1..2000 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu as f64));
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss-Legendre on `[lo, hi]` with `panels` equal pieces.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize, rule: &[(f64, f64)]) -> f64 {
    let h = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        let mut s = 0.0;
        for &(x, w) in rule {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// `Q_u(a, b)` for integer `u` as one minus the integral of the Rice-type
/// density `x (x/a)^{u−1} e^{−(x²+a²)/2} I_{u−1}(a x)` over `[0, b]`.
pub fn marcum_q(u: u32, a: f64, b: f64, rule: &[(f64, f64)]) -> f64 {
    if b == 0.0 {
        return 1.0;
    }
    let density = |x: f64| {
        if x == 0.0 {
            return 0.0;
        }
        if a == 0.0 {
            // limit a → 0: x^{2u−1} e^{−x²/2} / (2^{u−1} (u−1)!)
            let mut c = 1.0;
            for k in 1..u {
                c *= 2.0 * k as f64;
            }
            return x.powi(2 * u as i32 - 1) * (-x * x / 2.0).exp() / c;
        }
        let e = -(x - a) * (x - a) / 2.0;
        // I_ν(ax) e^{−ax} keeps the exponentials bounded
        let scaled = bessel_in(u - 1, a * x) * (-a * x).exp();
        x * (x / a).powi(u as i32 - 1) * e.exp() * scaled
    };
    // the density is negligible more than 40 standard deviations from a
    let lo = (a - 40.0).max(0.0);
    if b <= lo {
        return 1.0;
    }
    1.0 - integrate(density, lo, b, 400, rule)
}
