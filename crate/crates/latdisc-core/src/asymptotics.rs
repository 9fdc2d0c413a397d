//! Flat-point series, interference identities, model oscillatory integrals,
//! and Diophantine utilities.
//!
//! The central object is the one-parameter family
//!
//!   F_a(x) = sum_{k >= 1} k^(-1-a) sin(2 pi k x - pi a / 2),
//!
//! the boundary profile produced by a flat point of order gamma in
//! dimension d, with a = (d-1)/gamma. `a_series` evaluates it,
//! `SeriesParams` carries the geometric prefactor of one flat point, and
//! `main_term_Y` assembles the predicted leading term of the discrepancy of
//! a concrete planar body. All series arguments live on the circle: values
//! are 1-periodic in x and arguments are reduced mod 1 before summing.
//!
//! Invariants maintained here:
//! - `a_series` honors the advertised truncation bound K^(-a)/a <= tol on
//!   its direct route; otherwise it switches to the closed form through the
//!   Hurwitz zeta function, exact to working precision. The routes agree on
//!   their overlap (tested).
//! - `corollary_interference` evaluates its two forms by genuinely distinct
//!   summation routes, so their agreement is a real cross-check rather than
//!   an identity of the code with itself.
//! - Structured zeros survive in floats: `sinpi`/`cospi` vanish exactly at
//!   integer and half-integer phases, so even-order cancellations with
//!   integer phase offsets come out as 0.0, not as rounding residue.

use crate::body::Body2D;
use crate::error::{Error, Result};
use crate::numerics::{cospi, gamma, hurwitz_zeta, riemann_zeta, sinpi, Kahan};
use crate::quad::{graded_mesh, integrate_mesh, refine_to_tol};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Largest truncation index the direct summation route accepts; above this
/// the closed form via the Hurwitz zeta function is both faster and more
/// accurate than summing would be.
const DIRECT_SUM_MAX: f64 = 1e4;

/// Series tolerance used internally when assembling main terms; it always
/// resolves to the closed-form route, which is exact to f64.
const SERIES_TOL: f64 = 1e-12;

/// The two interference routes must agree to this; the product-form
/// truncation index is chosen so its tail bound stays below a quarter of it.
pub const INTERFERENCE_AGREE_TOL: f64 = 1e-10;

/// Product-form truncation window: at least MIN so degenerate bounds never
/// produce trivially short sums, at most MAX so resonant phases switch to
/// the resummation route instead of grinding through billions of terms.
const PRODUCT_K_MIN: usize = 64;
const PRODUCT_K_MAX: usize = 4_000_000;

/// F_a(x) = sum_{k >= 1} k^(-1-a) sin(2 pi k x - pi a / 2).
///
/// Route selection: the truncation index K = ceil((a tol)^(-1/a)) makes the
/// integral tail bound K^(-a)/a <= tol; when K <= DIRECT_SUM_MAX the partial
/// sum to K is returned. Otherwise the series is evaluated in closed form,
///
///   F_a(x) = (2 pi)^(1+a) zeta(-a, {x}) / (2 Gamma(1+a)),
///
/// which is exact to working precision, in particular within tol.
/// Deterministic: equal inputs give bit-equal outputs.
pub fn a_series(a: f64, x: f64, tol: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "series order a = {a}, need a > 0"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParam(format!(
            "series tolerance {tol}, need > 0"
        )));
    }
    let k_direct = (a * tol).powf(-1.0 / a);
    if k_direct <= DIRECT_SUM_MAX {
        return Ok(direct_partial(a, x, k_direct.ceil() as usize));
    }
    hurwitz_route(a, x)
}

/// Partial sum of F_a to index k_max, phase reduced mod 1 first so large
/// arguments do not spill precision into every term.
fn direct_partial(a: f64, x: f64, k_max: usize) -> f64 {
    let frac = x - x.floor();
    let mut acc = Kahan::new();
    for k in 1..=k_max.max(1) {
        let kf = k as f64;
        acc.add(kf.powf(-1.0 - a) * sinpi(2.0 * kf * frac - 0.5 * a));
    }
    acc.value()
}

/// Closed form via the Hurwitz zeta function. {x} = 0 maps to q = 1, the
/// same point of the period with a valid zeta argument.
fn hurwitz_route(a: f64, x: f64) -> Result<f64> {
    let frac = x - x.floor();
    let q = if frac == 0.0 || frac >= 1.0 { 1.0 } else { frac };
    let zh = hurwitz_zeta(-a, q)?;
    Ok((2.0 * PI).powf(1.0 + a) * zh / (2.0 * gamma(1.0 + a)))
}

/// Prefactor data of one flat-point series term: amplitude
/// 2 g0 Gamma(a+1) / (2 pi |m0|)^(a+1) plus the orientation of the phase.
/// `phase_sign = +1` is the variant whose phase runs with +m0 (flat point
/// whose outward normal opposes m0); `-1` is the mirror variant.
#[derive(Debug, Clone, Copy)]
pub struct SeriesParams {
    pub a: f64,
    pub g0: f64,
    pub m0_norm: f64,
    pub phase_sign: i8,
}

impl SeriesParams {
    pub fn new(a: f64, g0: f64, m0_norm: f64, phase_sign: i8) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParam(format!("series order a = {a}")));
        }
        if !(m0_norm > 0.0 && m0_norm.is_finite()) {
            return Err(Error::InvalidParam(format!("|m0| = {m0_norm}")));
        }
        if phase_sign != 1 && phase_sign != -1 {
            return Err(Error::InvalidParam(format!(
                "phase sign {phase_sign}, need +1 or -1"
            )));
        }
        let p = Self {
            a,
            g0,
            m0_norm,
            phase_sign,
        };
        let pref = p.prefactor();
        if !(pref > 0.0 && pref.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "series prefactor {pref} not finite positive (g0 = {g0})"
            )));
        }
        Ok(p)
    }

    /// 2 g0 Gamma(a+1) / (2 pi |m0|)^(a+1).
    pub fn prefactor(&self) -> f64 {
        2.0 * self.g0 * gamma(self.a + 1.0) / (2.0 * PI * self.m0_norm).powf(self.a + 1.0)
    }

    /// Uniform bound |A(x)| <= prefactor * zeta(1+a), valid for every x.
    pub fn amplitude_bound(&self) -> f64 {
        self.prefactor() * riemann_zeta(1.0 + self.a).expect("1 + a > 1 is off the pole")
    }

    /// The series value at scalar phase x = m0 . z; `phase_sign` folds the
    /// two mirror variants into the single family F_a.
    pub fn eval(&self, x: f64, tol: f64) -> Result<f64> {
        Ok(self.prefactor() * a_series(self.a, self.phase_sign as f64 * x, tol)?)
    }
}

/// One assembled flat-point contribution to the main term.
struct FlatTerm {
    params: SeriesParams,
    m0: [i64; 2],
    /// (r * m0 . X) mod 1 with X the flat point location.
    offset: f64,
    /// r^(1 - a).
    scale: f64,
}

fn flat_series_terms(body: &Body2D, r: f64) -> Result<Vec<FlatTerm>> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParam(format!("dilation r = {r}, need > 0")));
    }
    let flats = body.flat_points();
    if flats.is_empty() {
        return Err(Error::NoRationalNormal(
            "body has no flat points; the main term is not defined".into(),
        ));
    }
    let mut terms = Vec::with_capacity(flats.len());
    for fp in flats {
        let m0 = fp.m0.ok_or_else(|| {
            Error::NoRationalNormal(format!(
                "flat point at ({}, {}) has an irrational normal direction",
                fp.location[0], fp.location[1]
            ))
        })?;
        let m0f = [m0[0] as f64, m0[1] as f64];
        let m0_norm = (m0f[0] * m0f[0] + m0f[1] * m0f[1]).sqrt();
        let aligned = fp.normal[0] * m0f[0] + fp.normal[1] * m0f[1];
        if aligned.abs() < 1e-9 * m0_norm {
            return Err(Error::InvalidBody(
                "flat normal is orthogonal to its stored lattice direction".into(),
            ));
        }
        let phase_sign = if aligned < 0.0 { 1 } else { -1 };
        // Planar body: a = (d - 1) / gamma with d = 2.
        let params = SeriesParams::new(1.0 / fp.order, fp.g0, m0_norm, phase_sign)?;
        let offset = (r * (m0f[0] * fp.location[0] + m0f[1] * fp.location[1])).rem_euclid(1.0);
        terms.push(FlatTerm {
            params,
            m0,
            offset,
            scale: r.powf(1.0 - params.a),
        });
    }
    Ok(terms)
}

/// Leading-term prediction for the lattice point discrepancy of `body` at
/// dilation `r`, evaluated at torus point `z`: the sum over flat points of
/// r^(1-a) times the flat-point series at phase m0 . (z - r X). Requires
/// every flat point to carry a rational normal; phases are reduced mod 1
/// separately so integer phase shifts drop out exactly.
#[allow(non_snake_case)]
pub fn main_term_Y(body: &Body2D, r: f64, z: [f64; 2]) -> Result<f64> {
    let terms = flat_series_terms(body, r)?;
    let mut acc = Kahan::new();
    for t in &terms {
        let phase = (t.m0[0] as f64 * z[0] + t.m0[1] as f64 * z[1]).rem_euclid(1.0);
        let x = t.params.phase_sign as f64 * (phase - t.offset);
        acc.add(t.scale * t.params.prefactor() * a_series(t.params.a, x, SERIES_TOL)?);
    }
    Ok(acc.value())
}

/// The main term as a function of z2 alone, in the shape the stratified
/// L^p sampler consumes. Only valid when every flat direction is vertical
/// (m0 = (0, m)); otherwise the main term genuinely depends on z1 and this
/// reduction does not exist.
pub fn main_term_shift(body: &Body2D, r: f64) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
    let terms = flat_series_terms(body, r)?;
    for t in &terms {
        if t.m0[0] != 0 {
            return Err(Error::MainTermDependsOnZ1(format!(
                "flat direction ({}, {}) couples the main term to z1",
                t.m0[0], t.m0[1]
            )));
        }
    }
    Ok(Box::new(move |z2: f64| {
        let mut acc = Kahan::new();
        for t in &terms {
            let phase = (t.m0[1] as f64 * z2).rem_euclid(1.0);
            let x = t.params.phase_sign as f64 * (phase - t.offset);
            acc.add(
                t.scale
                    * t.params.prefactor()
                    * a_series(t.params.a, x, SERIES_TOL).expect("params validated on build"),
            );
        }
        acc.value()
    }))
}

/// Both evaluations of A_P(z - RP) + A_Q(z - RQ) for a matched flat pair:
/// the direct sum of the two mirror series, and the product-form series
/// obtained from the sine addition formula,
///
///   2 pref sum_k k^(-1-a) sin(pi (k kappa - a/2)) cos(2 pi k w),
///
/// with kappa = m0 . R(Q - P) and w = m0 . (z - R(P+Q)/2). Geometry enters
/// only through scalar projections on m0: `p_dot = m0 . P`, `q_dot = m0 . Q`,
/// `z_dot = m0 . z`. Returns (sum_form, product_form); the two sides follow
/// different summation routes and agree to INTERFERENCE_AGREE_TOL, so their
/// agreement is a real consistency check. When a is an even integer and
/// R(q_dot - p_dot) is an integer, every product term carries sin(pi *
/// integer) and the product form is exactly 0.0.
pub fn corollary_interference(
    params_p: &SeriesParams,
    params_q: &SeriesParams,
    p_dot: f64,
    q_dot: f64,
    r: f64,
    z_dot: f64,
) -> Result<(f64, f64)> {
    if params_p.phase_sign != 1 || params_q.phase_sign != -1 {
        return Err(Error::MismatchedPair(
            "pair must be oriented (phase_sign +1, phase_sign -1)".into(),
        ));
    }
    if (params_p.a - params_q.a).abs() > 1e-12 * params_p.a.max(1.0) {
        return Err(Error::MismatchedPair(format!(
            "series orders differ: {} vs {}",
            params_p.a, params_q.a
        )));
    }
    if (params_p.g0 - params_q.g0).abs() > 1e-12 * params_p.g0.abs() {
        return Err(Error::MismatchedPair(format!(
            "slice coefficients differ: {} vs {}",
            params_p.g0, params_q.g0
        )));
    }
    if (params_p.m0_norm - params_q.m0_norm).abs() > 1e-12 * params_p.m0_norm {
        return Err(Error::MismatchedPair(format!(
            "lattice direction norms differ: {} vs {}",
            params_p.m0_norm, params_q.m0_norm
        )));
    }
    let sum_form =
        params_p.eval(z_dot - r * p_dot, SERIES_TOL)? + params_q.eval(z_dot - r * q_dot, SERIES_TOL)?;
    let kappa = r * (q_dot - p_dot);
    let w = z_dot - r * 0.5 * (p_dot + q_dot);
    let product_form = product_series(params_p.a, params_p.prefactor(), kappa, w)?;
    Ok((sum_form, product_form))
}

/// The interference product series. Two routes:
///
/// Direct: term-by-term summation to index K taken from the Dirichlet-kernel
/// tail bound. Splitting the product into phases k(kappa/2 +- w) and using
/// Abel summation, the tail after K is at most
/// pref K^(-1-a) (1/|sin pi y1| + 1/|sin pi y2|) with y = kappa/2 +- w.
///
/// Resummation: when that K would exceed PRODUCT_K_MAX (slowly decaying
/// series, a < ~1, or near-resonant phases), the same split is summed in
/// closed form through the polylog integral representation (non-oscillatory
/// quadrature; see `polylog_circle`), which shares no code with the Hurwitz
/// route used by the sum form.
fn product_series(a: f64, pref: f64, kappa: f64, w: f64) -> Result<f64> {
    let y1 = 0.5 * kappa + w;
    let y2 = 0.5 * kappa - w;
    let s1 = sinpi(y1).abs();
    let s2 = sinpi(y2).abs();
    let even_zero = (a - a.round()).abs() < 1e-12
        && (a.round() as i64).rem_euclid(2) == 0
        && (kappa - kappa.round()).abs() < 1e-9;
    let k_needed = if s1 == 0.0 || s2 == 0.0 {
        f64::INFINITY
    } else {
        (4.0 * pref.abs() * (1.0 / s1 + 1.0 / s2) / INTERFERENCE_AGREE_TOL).powf(1.0 / (1.0 + a))
    };
    if even_zero || k_needed <= PRODUCT_K_MAX as f64 {
        let k_max = if even_zero {
            // Every term is exactly zero; a short sum keeps the exactness
            // observable without pretending the tail bound applies.
            PRODUCT_K_MIN
        } else {
            (k_needed.ceil() as usize).max(PRODUCT_K_MIN)
        };
        let kappa_red = kappa.rem_euclid(2.0);
        let w_red = w.rem_euclid(1.0);
        let mut acc = Kahan::new();
        for k in 1..=k_max {
            let kf = k as f64;
            let s = sinpi(kf * kappa_red - 0.5 * a);
            if s != 0.0 {
                acc.add(2.0 * pref * kf.powf(-1.0 - a) * s * cospi(2.0 * kf * w_red));
            }
        }
        Ok(acc.value())
    } else {
        // sin(A)cos(B) = (sin(A+B) + sin(A-B))/2 turns the product series
        // into F_a(y1) + F_a(y2); resum each through the polylog integral.
        let fa = |y: f64| -> Result<f64> {
            let li = polylog_circle(1.0 + a, y)?;
            Ok((Complex64::from_polar(1.0, -0.5 * PI * a) * li).im)
        };
        Ok(pref * (fa(y1)? + fa(y2)?))
    }
}

/// Li_s(e^(2 pi i y)) for s > 1 through the integral representation
///
///   Li_s(z) = z / Gamma(s) int_0^inf t^(s-1) e^(-t) / (1 - z e^(-t)) dt,
///
/// a smooth non-oscillatory integrand on the unit circle. The mesh walks
/// dyadically out of a sliver [0, h]; since |1 - z e^(-t)| is at least
/// 1 - e^(-t) >= t/2 on t <= 1, the dropped sliver is below
/// h^(s-1) * 2/(s-1), and h is chosen to push that under 1e-14 (clamped
/// to stay representable).
fn polylog_circle(s: f64, y: f64) -> Result<Complex64> {
    debug_assert!(s > 1.0);
    let z = Complex64::from_polar(1.0, 2.0 * PI * (y - y.floor()));
    let f = move |t: f64| {
        // 1 - z e^-t written as (1 - z) - z expm1(-t): below the f64 ulp of
        // 1.0 the naive form rounds e^-t to 1 and the denominator to 0.
        let denom = (Complex64::new(1.0, 0.0) - z) - z * (-t).exp_m1();
        t.powf(s - 1.0) * (-t).exp() / denom
    };
    let am1 = s - 1.0;
    let h = (0.5e-14 * am1).powf(1.0 / am1).clamp(1e-300, 1e-3);
    let top = 60.0; // e^-60 ~ 9e-27 kills the tail
    let mesh = graded_mesh(h, top, |t| 0.5 * t, 1.0, 1_000_000)?;
    let refined = refine_to_tol(&f, vec![mesh], 1e-12, 1e-14, 8, 50_000_000)?;
    Ok(z * refined.value / gamma(s))
}

/// Smooth-cutoff shape for the model oscillatory integral: 1 on [0, eps],
/// 0 beyond 2 eps, bridged by the standard exponential partition
///
///   eta(eps (1 + u)) = phi(1 - u) / (phi(1 - u) + phi(u)),
///   phi(v) = exp(-1/v) for v > 0, 0 otherwise,
///
/// which is C-infinity with all derivatives vanishing at both ends.
#[derive(Debug, Clone, Copy)]
pub struct EtaSpec {
    pub eps: f64,
}

impl Default for EtaSpec {
    fn default() -> Self {
        Self { eps: 0.25 }
    }
}

impl EtaSpec {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParam(format!("cutoff width eps = {eps}")));
        }
        Ok(Self { eps })
    }

    /// Cutoff value at |t|.
    pub fn eval(&self, t: f64) -> f64 {
        let u = (t.abs() - self.eps) / self.eps;
        if u <= 0.0 {
            return 1.0;
        }
        if u >= 1.0 {
            return 0.0;
        }
        let phi = |v: f64| (-1.0 / v).exp();
        let keep = phi(1.0 - u);
        keep / (keep + phi(u))
    }
}

/// The model integral int_0^inf t^alpha e^(-2 pi i s t) eta(t) dt next to
/// its stationary closed form
///
///   Gamma(alpha+1) (2 pi |s|)^(-alpha-1) e^(-i pi (alpha+1)/2 sgn s).
///
/// Returns (quadrature_value, closed_form). The quadrature resolves the
/// oscillation (panel width <= 1/(8|s|)), grades dyadically into the
/// algebraic endpoint t^alpha, and opens with a power-series sliver [0, h]
/// where eta = 1 and |2 pi s h| is small enough that eight terms reach f64
/// noise. The difference between the two values is the smooth-cutoff
/// remainder, which decays faster than any power of |s| at a rate set by
/// eps; quadrature error itself is far below it.
pub fn lemma_alpha_pair(alpha: f64, s: f64, eta: &EtaSpec) -> Result<(Complex64, Complex64)> {
    if !(alpha > -1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "exponent alpha = {alpha}, need > -1"
        )));
    }
    if s == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    if !s.is_finite() {
        return Err(Error::InvalidParam(format!("frequency s = {s}")));
    }
    let closed = gamma(alpha + 1.0)
        * (2.0 * PI * s.abs()).powf(-alpha - 1.0)
        * Complex64::from_polar(1.0, -0.5 * PI * (alpha + 1.0) * s.signum());

    let top = 2.0 * eta.eps;
    let h = 1e-6_f64.min(1.0 / (100.0 * s.abs())).min(0.5 * eta.eps);
    // int_0^h t^alpha e^(-2 pi i s t) dt
    //   = sum_j (-2 pi i s)^j / j! * h^(alpha+j+1) / (alpha+j+1);
    // |2 pi s h| <= 2 pi / 100, so eight terms leave < 1e-15 relative.
    let mut sliver = Complex64::new(0.0, 0.0);
    let mut coef = Complex64::new(1.0, 0.0);
    for j in 0..8 {
        let jf = j as f64;
        sliver += coef * h.powf(alpha + jf + 1.0) / (alpha + jf + 1.0);
        coef *= Complex64::new(0.0, -2.0 * PI * s) / (jf + 1.0);
    }
    let osc = 1.0 / (8.0 * s.abs());
    let mesh = graded_mesh(h, top, |t| t.min(osc), (top - h) / 6.0, 50_000_000)?;
    let f = |t: f64| Complex64::from_polar(t.powf(alpha) * eta.eval(t), -2.0 * PI * s * t);
    let quad = sliver + integrate_mesh(&f, &mesh);
    Ok((quad, closed))
}

/// Coefficients of the dyadic extrapolation polynomial p(x) = sum c_k x^k
/// pinned by p(1) = 1 and p(2^-m) = 0 for m = 1..M; equivalently the unique
/// solution of the Vandermonde system sum_k c_k 2^(-mk) = [m = 0].
#[derive(Debug, Clone)]
pub struct MollifierCoeffs {
    pub m: usize,
    pub c: Vec<f64>,
}

/// Builds the coefficients in product form
/// p(x) = prod_{m=1..M} (x - 2^-m) / (1 - 2^-m), which satisfies the system
/// to machine precision for every M in range (the monomial expansion stays
/// small: all |c_k| are O(10)).
pub fn mollifier_coeffs(m: usize) -> Result<MollifierCoeffs> {
    if m > 30 {
        return Err(Error::InvalidParam(format!(
            "mollifier order {m} out of range 0..=30"
        )));
    }
    let mut c = vec![1.0_f64];
    for j in 1..=m {
        let root = 0.5_f64.powi(j as i32);
        let norm = 1.0 - root;
        let mut next = vec![0.0; c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k + 1] += ck;
            next[k] -= ck * root;
        }
        for v in &mut next {
            *v /= norm;
        }
        c = next;
    }
    Ok(MollifierCoeffs { m, c })
}

impl MollifierCoeffs {
    /// p(x) by Horner.
    pub fn eval(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
    }

    /// Largest violation among the defining equations.
    pub fn residual(&self) -> f64 {
        (0..=self.m)
            .map(|mm| {
                let target = if mm == 0 { 1.0 } else { 0.0 };
                (self.eval(0.5_f64.powi(mm as i32)) - target).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Volume coefficient of the osculating paraboloid model at a curvature
/// point: the (d-1)-volume of the ellipsoid {x : x^T (A/2) x <= 1}, i.e.
/// omega_(d-1) det(A/2)^(-1/2) with omega_n the n-ball volume. `a` is the
/// (d-1) x (d-1) Hessian in row-major order, symmetric positive definite;
/// a failed Cholesky pivot certifies non-definiteness.
pub fn g0_from_hessian(a: &[f64], d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidParam(format!("dimension d = {d}, need >= 2")));
    }
    let n = d - 1;
    if a.len() != n * n {
        return Err(Error::InvalidParam(format!(
            "matrix has {} entries, need {} for d = {d}",
            a.len(),
            n * n
        )));
    }
    let scale = a.iter().fold(0.0_f64, |m, &v| m.max(v.abs())).max(1e-300);
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[i * n + j] - a[j * n + i]).abs() > 1e-12 * scale {
                return Err(Error::InvalidParam("matrix is not symmetric".into()));
            }
        }
    }
    let mut l = a.to_vec();
    let mut logdet = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let mut sum = l[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::InvalidParam(
                        "matrix is not positive definite".into(),
                    ));
                }
                l[i * n + i] = sum.sqrt();
                logdet += sum.ln();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let nf = n as f64;
    let omega = PI.powf(0.5 * nf) / gamma(0.5 * nf + 1.0);
    Ok(omega * (-0.5 * (logdet - nf * std::f64::consts::LN_2)).exp())
}

/// Angle input for the Diophantine check. Golden gets exact Fibonacci
/// convergents (the approximation errors along them are exactly omega^k);
/// floats run the Gauss map on the stored value.
#[derive(Debug, Clone, Copy)]
pub enum Omega {
    Float(f64),
    /// (sqrt 5 - 1) / 2.
    Golden,
}

/// min over 1 <= n <= n_max of n^(1+delta) ||n omega||, with the minimizing
/// n (ties keep the smallest). The scan runs over continued-fraction
/// convergent denominators only: for q_k <= n < q_(k+1) the best-
/// approximation property gives ||n omega|| >= ||q_k omega|| while
/// n^(1+delta) >= q_k^(1+delta), so no other n can beat a denominator.
pub fn badly_approximable_check(omega: Omega, n_max: u64, delta: f64) -> Result<(f64, u64)> {
    if n_max == 0 || n_max > 10_000_000 {
        return Err(Error::InvalidParam(format!(
            "n_max = {n_max}, supported range is 1..=10^7"
        )));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParam(format!("delta = {delta}, need >= 0")));
    }
    let candidates: Vec<(u64, f64)> = match omega {
        Omega::Golden => {
            let w = (5.0_f64.sqrt() - 1.0) / 2.0;
            // Denominators are Fibonacci numbers F_k (F_2 = 1, F_3 = 2, ...)
            // with ||F_k w|| = w^k exactly.
            let mut v = Vec::new();
            let (mut fib_prev, mut fib) = (1u64, 1u64);
            let mut k = 2i32;
            while fib <= n_max {
                v.push((fib, w.powi(k)));
                let next = fib_prev + fib;
                fib_prev = fib;
                fib = next;
                k += 1;
            }
            v
        }
        Omega::Float(x) => {
            let xi = x.rem_euclid(1.0);
            let dist = |q: u64| -> f64 {
                let t = q as f64 * xi;
                (t - t.round()).abs()
            };
            let mut v = vec![(1u64, dist(1))];
            if xi > 0.0 {
                let (mut q_prev, mut q) = (0u64, 1u64);
                let mut frac = xi;
                // Denominators grow at least like Fibonacci, so this takes
                // at most ~35 steps to pass 10^7; the partial-quotient cap
                // stops once f64 precision is exhausted.
                while frac > 0.0 {
                    let inv = 1.0 / frac;
                    let quot = inv.floor();
                    if !(quot >= 1.0) || quot > 1e15 {
                        break;
                    }
                    frac = inv - quot;
                    let q_next = (quot as u64).saturating_mul(q).saturating_add(q_prev);
                    if q_next > n_max {
                        break;
                    }
                    q_prev = q;
                    q = q_next;
                    v.push((q, dist(q)));
                }
            }
            v
        }
    };
    let mut best = (f64::INFINITY, 0u64);
    for (q, err) in candidates {
        let val = (q as f64).powf(1.0 + delta) * err;
        if val < best.0 {
            best = (val, q);
        }
    }
    Ok(best)
}

/// Predicted L^p growth exponent of the discrepancy of a convex body in
/// dimension d whose boundary is smooth with positive curvature except at
/// isolated flat points of order at most gamma. Piecewise in (gamma, p):
///
///   gamma <= 2:        (d-1)/2                   for p <= 2d/(d-1),
///                      d(d-1)/(d+1) (1 - 1/p)    above;
///   2 < gamma <= d+1:  (d-1)(1 - 1/gamma)        for p <= 2d/(d+1-gamma),
///                      d(d-1)/(d+1) (1 - 2/(gamma p)) above;
///   gamma > d+1:       (d-1)(1 - 1/gamma)        for every p.
///
/// The two formulas of each case agree at the critical p and the cases
/// agree at gamma = 2 and gamma = d+1, so the function is continuous on its
/// whole domain; boundary points may take either branch.
pub fn predicted_exponent(d: u32, gamma_order: f64, p: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidParam(format!("dimension d = {d}, need >= 2")));
    }
    if !(gamma_order > 1.0 && gamma_order.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "flat order gamma = {gamma_order}, need > 1"
        )));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParam(format!("exponent p = {p}, need >= 1")));
    }
    let df = d as f64;
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    Ok(if gamma_order <= 2.0 {
        if p <= 2.0 * df / (df - 1.0) {
            (df - 1.0) / 2.0
        } else {
            df * (df - 1.0) / (df + 1.0) * (1.0 - inv_p)
        }
    } else if gamma_order <= df + 1.0 {
        if p <= 2.0 * df / (df + 1.0 - gamma_order) {
            (df - 1.0) * (1.0 - 1.0 / gamma_order)
        } else {
            df * (df - 1.0) / (df + 1.0) * (1.0 - 2.0 * inv_p / gamma_order)
        }
    } else {
        (df - 1.0) * (1.0 - 1.0 / gamma_order)
    })
}
