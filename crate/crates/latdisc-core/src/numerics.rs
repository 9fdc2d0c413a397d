//! Shared numerical primitives: compensated summation, 1-D search,
//! Gauss-Legendre nodes, and the special functions used by the series
//! evaluators (Gamma, Hurwitz zeta, Bernoulli polynomials).

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Neumaier-compensated accumulator. Summation order still matters for
/// bit-stability, so callers must feed values in a fixed order.
#[derive(Debug, Default, Clone, Copy)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Kahan::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Ordinary least squares for y = intercept + slope * x. Returns
/// (slope, intercept, r2); r2 is 1 for constant data (zero total variance
/// is fitted exactly by the constant line). Panics on mismatched lengths
/// or fewer than two points; callers validate sample counts first.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert!(x.len() == y.len() && x.len() >= 2, "ols needs paired data");
    let n = x.len() as f64;
    let mx = kahan_sum(x.iter().copied()) / n;
    let my = kahan_sum(y.iter().copied()) / n;
    let sxx = kahan_sum(x.iter().map(|&v| (v - mx) * (v - mx)));
    let sxy = kahan_sum(x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)));
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot = kahan_sum(y.iter().map(|&v| (v - my) * (v - my)));
    if ss_tot <= 0.0 {
        return (slope, intercept, 1.0);
    }
    let ss_res = kahan_sum(
        x.iter()
            .zip(y)
            .map(|(&a, &b)| (b - intercept - slope * a).powi(2)),
    );
    (slope, intercept, (1.0 - ss_res / ss_tot).clamp(0.0, 1.0))
}

/// Maximum of a strictly unimodal function on [a, b] by golden-section
/// search. Returns (argmax, max). The max value is resolved to float
/// precision; the argmax only to the width of the float plateau around the
/// peak (~sqrt(ulp) for a quadratic maximum), which callers must budget for.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, iters: u32) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let xm = 0.5 * (lo + hi);
    (xm, f(xm))
}

/// Root of a sign change: requires f(lo) and f(hi) of opposite (non-strict)
/// sign. 64 halvings put the bracket below 1e-17 of its original width,
/// well inside the 1e-13 contract for chord endpoints.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = f(lo);
    debug_assert!(f_lo.signum() != f(hi).signum() || f_lo == 0.0 || f(hi) == 0.0);
    let neg_low = f_lo <= 0.0;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm <= 0.0) == neg_low {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed once by Newton
/// iteration on the Legendre recurrence (no hardcoded tables to typo).
pub fn gauss_legendre_16() -> &'static [(f64, f64); 16] {
    static NODES: OnceLock<[(f64, f64); 16]> = OnceLock::new();
    NODES.get_or_init(|| {
        let mut out = [(0.0, 0.0); 16];
        let n = 16usize;
        for (i, slot) in out.iter_mut().enumerate() {
            // Chebyshev-like initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_pn(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-17 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            *slot = (x, w);
        }
        out
    })
}

/// (P_n(x), P_n'(x)) via the three-term recurrence.
fn legendre_pn(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// sin(pi x), reduced mod 2 before evaluating so integer arguments give
/// exactly 0.0 and large arguments keep full precision relative to the
/// reduced phase. The exact zeros matter downstream: structured series
/// cancellations (integer phase offsets) must come out as true zeros.
pub fn sinpi(x: f64) -> f64 {
    let mut r = x.rem_euclid(2.0);
    if !r.is_finite() {
        return f64::NAN;
    }
    let mut sign = 1.0;
    if r >= 1.0 {
        sign = -1.0;
        r -= 1.0;
    }
    if r == 0.0 {
        return 0.0;
    }
    if r > 0.5 {
        r = 1.0 - r;
    }
    sign * (core::f64::consts::PI * r).sin()
}

/// cos(pi x) with exact zeros at half-integer x; the shift by 1/2 is exact
/// after reduction mod 2 because the reduced phase stays below 2.
pub fn cospi(x: f64) -> f64 {
    sinpi(x.rem_euclid(2.0) + 0.5)
}

/// Bernoulli numbers B_0..B_32 (B_1 = -1/2; odd indices > 1 vanish).
/// Exact rationals rounded once to f64.
fn bernoulli_number(k: usize) -> f64 {
    const EVEN: [f64; 17] = [
        1.0,
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
        43867.0 / 798.0,
        -174611.0 / 330.0,
        854513.0 / 138.0,
        -236364091.0 / 2730.0,
        8553103.0 / 6.0,
        -23749461029.0 / 870.0,
        8615841276005.0 / 14322.0,
        -7709321041217.0 / 510.0,
    ];
    if k == 1 {
        -0.5
    } else if k % 2 == 1 {
        0.0
    } else {
        EVEN[k / 2]
    }
}

/// Bernoulli polynomial B_n(x) via B_n(x) = sum_k C(n,k) B_k x^(n-k).
/// Intended for n <= 32 and x in [0, 1].
pub fn bernoulli_poly(n: usize, x: f64) -> f64 {
    assert!(n <= 32, "bernoulli_poly limited to n <= 32");
    // Horner in x over coefficients c_j = C(n, n-j) B_{n-j}, j = degree.
    let mut binom = 1.0; // C(n, k) built incrementally over k = 0..=n
    let mut coeff = vec![0.0; n + 1];
    for k in 0..=n {
        coeff[n - k] = binom * bernoulli_number(k); // multiplies x^(n-k)
        binom *= (n - k) as f64 / (k + 1) as f64;
    }
    let mut acc = 0.0;
    for j in (0..=n).rev() {
        acc = acc * x + coeff[j];
    }
    acc
}

/// Hurwitz zeta zeta(s, q) = sum_{k>=0} (k+q)^(-s) by Euler-Maclaurin,
/// analytically continued in real s != 1, q in (0, 1].
///
/// The head length adapts to s: the summed head scales like N^(1-s) while
/// the result stays O(1), so a long head at negative s destroys the answer
/// through cancellation. At integer s <= 0 the correction series terminates
/// and N = 0 is exact; at fractional s < -0.5 a short head keeps the
/// cancellation under 7^(1-s) ulps while J = 16 corrections leave a
/// remainder around 1e-20 for s > -6; otherwise N = 24 drives the
/// remainder below 1e-30 for s <= 14. For s a negative integer -n the
/// result equals the Bernoulli value -B_{n+1}(q)/(n+1) exactly.
pub fn hurwitz_zeta(s: f64, q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "hurwitz_zeta requires q in (0, 1], got {q}"
        )));
    }
    if (s - 1.0).abs() < 1e-12 {
        return Err(Error::InvalidParam("hurwitz_zeta has a pole at s = 1".into()));
    }
    let terminating = s <= 0.5 && (s - s.round()).abs() < 1e-12;
    // Snap a near-integer s onto the terminating path exactly: otherwise
    // poch stays at ~1e-13 instead of 0 and multiplies q^(negative) garbage.
    let s = if terminating { s.round() } else { s };
    let n_head: usize = if terminating {
        0
    } else if s < -0.5 {
        6
    } else {
        24
    };
    const J: usize = 16;
    let mut head = Kahan::new();
    for k in 0..n_head {
        head.add((q + k as f64).powf(-s));
    }
    let qn = q + n_head as f64;
    let mut tail = qn.powf(1.0 - s) / (s - 1.0) + 0.5 * qn.powf(-s);
    // sum_j B_2j/(2j)! * (s)_{2j-1} * qn^(-s-2j+1)
    let mut poch = s; // (s)_1
    let mut fact = 1.0; // (2j)!
    for j in 1..=J {
        let two_j = 2 * j;
        fact *= ((two_j - 1) * two_j) as f64;
        let term = bernoulli_number(two_j) / fact * poch * qn.powf(-s - (two_j - 1) as f64);
        tail += term;
        // advance Pochhammer (s)_{2j-1} -> (s)_{2j+1}
        poch *= (s + (two_j - 1) as f64) * (s + two_j as f64);
        if poch == 0.0 {
            break; // s is a negative integer: expansion terminated exactly
        }
    }
    Ok(head.value() + tail)
}

/// Riemann zeta for real s > 1.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    hurwitz_zeta(s, 1.0)
}

/// Geometric grid of n points from a to b inclusive (a, b > 0, n >= 2).
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && n >= 2);
    let la = a.ln();
    let lb = b.ln();
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
