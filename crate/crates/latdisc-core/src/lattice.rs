//! Exact lattice-point counting and discrepancy integration.
//!
//! The discrepancy D_R(z) = count(z) - R^2 |B| is, for fixed z2, a step
//! function of z1 whose jumps sit at the fractional parts of the row chord
//! endpoints a_n = R x_-((n+z2)/R), b_n = R x_+((n+z2)/R): row n contributes
//! floor(b_n - z1) - ceil(a_n - z1) + 1 points. `sweep_profile` materializes
//! that step function exactly (all O(R) jump events with integer steps), so
//! L^p integrals over z1 are exact sums, and only the z2 direction needs
//! Monte Carlo.
//!
//! Exactness invariants:
//! - fractional parts of endpoints are computed as x - floor(x), which is
//!   exact in floating point, so event positions and the floor/ceil count
//!   formula agree bit-for-bit at the jump locations;
//! - jump semantics: +1 inclusive at frac(a_n) (the count includes z1 at
//!   the event), -1 exclusive at frac(b_n) (the drop applies just past it);
//!   integer a_n contributes no event inside [0, 1);
//! - counts are integers throughout; no float accumulates into a count.
//!
//! The public interval view (`breakpoints`/`values`) merges events closer
//! than 1e-12 and drops zero-width spikes; it is right-continuous and used
//! for integration (spikes have measure zero). `eval` uses the raw events
//! and is exact everywhere, including at spike points.

use rayon::prelude::*;

use crate::body::Body2D;
use crate::error::{Error, Result};
use crate::numerics::Kahan;
use crate::rng::{keyed_rng, unit_jitter, STREAM_ANGLE, STREAM_Z2};

use rand::Rng;

/// Events closer than this merge into one breakpoint in the interval view.
const MERGE_EPS: f64 = 1e-12;

/// One exact jump of the count step function.
#[derive(Debug, Clone, Copy)]
struct Event {
    pos: f64,
    /// Inclusive events change the value at `pos` itself; exclusive events
    /// only past it.
    inclusive: bool,
    delta: i64,
}

/// Exact piecewise-constant representation of z1 -> count(z1, z2).
#[derive(Debug, Clone)]
pub struct BreakpointProfile {
    z2: f64,
    r: f64,
    /// R^2 |B|, the area term subtracted to get the discrepancy.
    base: f64,
    /// Raw events sorted by (pos, inclusive-first).
    events: Vec<Event>,
    /// Count value after the first i events (prefix[0] = base_count).
    prefix: Vec<i64>,
    /// Merged interval view: value[i] holds on [breakpoints[i],
    /// breakpoints[i+1]), with breakpoints[0] = 0 and the last interval
    /// running to 1.
    breakpoints: Vec<f64>,
    values: Vec<i64>,
    rows: usize,
}

impl BreakpointProfile {
    pub fn z2(&self) -> f64 {
        self.z2
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// R^2 |B|.
    pub fn base(&self) -> f64 {
        self.base
    }

    /// Number of contributing lattice rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of raw jump events (the cost measure: <= 2 rows + 2).
    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    /// Merged breakpoint positions (sorted, starting at 0).
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Count on each merged interval.
    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// Exact count at z1 in [0, 1), bit-identical to `count_points` there.
    pub fn eval(&self, z1: f64) -> i64 {
        debug_assert!((0.0..1.0).contains(&z1));
        // Applied events: pos < z1, plus inclusive events at pos == z1.
        let idx = self
            .events
            .partition_point(|e| e.pos < z1 || (e.pos == z1 && e.inclusive));
        self.prefix[idx]
    }

    /// Exact z1-average of the count over [0, 1).
    pub fn mean_count(&self) -> f64 {
        let mut acc = Kahan::new();
        for (len, v) in self.interval_lengths() {
            acc.add(len * v as f64);
        }
        acc.value()
    }

    fn interval_lengths(&self) -> impl Iterator<Item = (f64, i64)> + '_ {
        let n = self.breakpoints.len();
        (0..n).map(move |i| {
            let end = if i + 1 < n { self.breakpoints[i + 1] } else { 1.0 };
            (end - self.breakpoints[i], self.values[i])
        })
    }
}

/// Exact count of lattice points m with z + m in R*B.
///
/// Rows are integers n with (n + z2)/R inside the vertical support; each
/// contributes floor(b_n - z1) - ceil(a_n - z1) + 1 points where [a_n, b_n]
/// is the chord scaled by R. Boundary points count (closed body).
pub fn count_points(body: &Body2D, r: f64, z: [f64; 2]) -> Result<i64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParam(format!("count_points requires R > 0, got {r}")));
    }
    let (n_lo, n_hi) = row_range(body, r, z[1]);
    let mut total = 0i64;
    for n in n_lo..=n_hi {
        let t = (n as f64 + z[1]) / r;
        if let Some((xl, xh)) = body.slice_extents(t) {
            let a = r * xl;
            let b = r * xh;
            let c = (b - z[0]).floor() as i64 - (a - z[0]).ceil() as i64 + 1;
            total += c.max(0);
        }
    }
    Ok(total)
}

/// D_R(z) = count - R^2 |B|.
pub fn discrepancy(body: &Body2D, r: f64, z: [f64; 2]) -> Result<f64> {
    Ok(count_points(body, r, z)? as f64 - r * r * body.area())
}

fn row_range(body: &Body2D, r: f64, z2: f64) -> (i64, i64) {
    let (t_lo, t_hi) = body.t_range();
    let n_lo = (r * t_lo - z2).ceil() as i64;
    let n_hi = (r * t_hi - z2).floor() as i64;
    (n_lo, n_hi)
}

/// Build the exact step-function representation of z1 -> count(z1, z2).
pub fn sweep_profile(body: &Body2D, r: f64, z2: f64) -> Result<BreakpointProfile> {
    if !(r > 0.0) {
        return Err(Error::InvalidParam(format!("sweep_profile requires R > 0, got {r}")));
    }
    if !(0.0..1.0).contains(&z2) {
        return Err(Error::InvalidParam(format!(
            "sweep_profile requires z2 in [0, 1), got {z2}"
        )));
    }
    let (n_lo, n_hi) = row_range(body, r, z2);
    let mut events: Vec<Event> = Vec::with_capacity(2 * (n_hi - n_lo + 1).max(0) as usize);
    let mut base_count = 0i64;
    let mut rows = 0usize;
    for n in n_lo..=n_hi {
        let t = (n as f64 + z2) / r;
        let Some((xl, xh)) = body.slice_extents(t) else {
            continue;
        };
        rows += 1;
        let a = r * xl;
        let b = r * xh;
        base_count += (b.floor() as i64 - a.ceil() as i64 + 1).max(0);
        // frac(x) = x - floor(x) is exact; it locates the jumps of the
        // floor/ceil count formula bit-exactly.
        let fa = a - a.floor();
        if fa > 0.0 {
            events.push(Event { pos: fa, inclusive: true, delta: 1 });
        }
        events.push(Event { pos: b - b.floor(), inclusive: false, delta: -1 });
    }
    events.sort_unstable_by(|x, y| {
        (x.pos, !x.inclusive)
            .partial_cmp(&(y.pos, !y.inclusive))
            .expect("event positions are finite")
    });
    let mut prefix = Vec::with_capacity(events.len() + 1);
    let mut acc = base_count;
    prefix.push(acc);
    for e in &events {
        acc += e.delta;
        prefix.push(acc);
    }

    // Merged interval view: group events within MERGE_EPS, drop groups with
    // zero net step (spikes), pin the first breakpoint at 0.
    let mut breakpoints = vec![0.0];
    let mut values = Vec::new();
    let mut v = base_count
        + events
            .iter()
            .take_while(|e| e.pos == 0.0)
            .map(|e| e.delta)
            .sum::<i64>();
    values.push(v);
    let mut i = events.partition_point(|e| e.pos == 0.0);
    while i < events.len() {
        let start = events[i].pos;
        let mut delta = 0i64;
        let mut j = i;
        while j < events.len() && events[j].pos - start <= MERGE_EPS {
            delta += events[j].delta;
            j += 1;
        }
        if delta != 0 {
            v += delta;
            breakpoints.push(start);
            values.push(v);
        }
        i = j;
    }

    Ok(BreakpointProfile {
        z2,
        r,
        base: r * r * body.area(),
        events,
        prefix,
        breakpoints,
        values,
        rows,
    })
}

/// Exact integral over z1 of |D(z1, z2) - shift|^p (p = infinity: the max
/// over intervals). The measure-zero spikes dropped by the interval view do
/// not affect the integral; for p = infinity the result is the essential
/// sup over z1, a lower bound on the pointwise sup.
pub fn profile_lp_integral(profile: &BreakpointProfile, p: f64, shift: f64) -> Result<f64> {
    validate_p(p)?;
    let dev = |v: i64| (v as f64 - profile.base - shift).abs();
    if p.is_infinite() {
        return Ok(profile
            .values
            .iter()
            .map(|&v| dev(v))
            .fold(0.0, f64::max));
    }
    let int_p = if p.fract() == 0.0 && p <= 64.0 { Some(p as i32) } else { None };
    let mut acc = Kahan::new();
    for (len, v) in profile.interval_lengths() {
        let d = dev(v);
        let dp = match int_p {
            Some(k) => d.powi(k),
            None => d.powf(p),
        };
        acc.add(len * dp);
    }
    Ok(acc.value())
}

/// Exact signed integral over z1 of (D(z1, z2) - shift): the p = 1
/// integrand without the absolute value. Its z2-average is 0 for any body,
/// since the count integrates to exactly R^2 |B| over the torus.
pub fn profile_signed_integral(profile: &BreakpointProfile, shift: f64) -> f64 {
    let mut acc = Kahan::new();
    for (len, v) in profile.interval_lengths() {
        acc.add(len * (v as f64 - profile.base - shift));
    }
    acc.value()
}

fn validate_p(p: f64) -> Result<()> {
    if p.is_infinite() && p > 0.0 {
        return Ok(());
    }
    if !(p >= 1.0) || p.is_nan() {
        return Err(Error::InvalidParam(format!("p must be in [1, inf], got {p}")));
    }
    Ok(())
}

/// L^p norm estimate of D_R (or of D_R minus a main term) over the torus.
#[derive(Debug, Clone, Copy)]
pub struct LpEstimate {
    pub p: f64,
    pub r: f64,
    /// ((1/M) sum_j int |D - shift|^p dz1)^(1/p); for p = infinity the max
    /// over samples (a lower bound on the sup norm).
    pub value: f64,
    /// Delta-method standard error of `value`; 0 for p = infinity.
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Shift applied inside the norm as a function of z2 (the main term of the
/// discrepancy when its normal direction is vertical: it is constant in z1).
pub type ShiftFn<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

/// Estimate ||D_R - shift||_p over the torus: exact in z1, stratified
/// jittered Monte Carlo in z2 (sample j lives in stratum [j/M, (j+1)/M)).
/// Deterministic given (seed, M) regardless of thread count.
pub fn lp_norm(
    body: &Body2D,
    r: f64,
    p: f64,
    m: usize,
    seed: u64,
    shift: Option<ShiftFn<'_>>,
) -> Result<LpEstimate> {
    let mut out = lp_norms_multi(body, r, &[p], m, seed, shift)?;
    Ok(out.remove(0))
}

/// `lp_norm` for several p values sharing one set of swept profiles (the
/// sweep dominates the cost; the per-p integration is a cheap pass).
pub fn lp_norms_multi(
    body: &Body2D,
    r: f64,
    ps: &[f64],
    m: usize,
    seed: u64,
    shift: Option<ShiftFn<'_>>,
) -> Result<Vec<LpEstimate>> {
    for &p in ps {
        validate_p(p)?;
    }
    if m < 16 {
        return Err(Error::InvalidParam(format!("lp_norm requires M >= 16, got {m}")));
    }
    // One vector of per-p integrals per sample, in sample order.
    let per_sample: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|j| -> Result<Vec<f64>> {
            let z2 = (j as f64 + unit_jitter(seed, STREAM_Z2, j as u64)) / m as f64;
            let profile = sweep_profile(body, r, z2)?;
            let s = shift.map(|f| f(z2)).unwrap_or(0.0);
            ps.iter()
                .map(|&p| profile_lp_integral(&profile, p, s))
                .collect()
        })
        .collect::<Result<_>>()?;

    let estimates = ps
        .iter()
        .enumerate()
        .map(|(pi, &p)| {
            let vals = per_sample.iter().map(|v| v[pi]);
            if p.is_infinite() {
                let value = vals.fold(0.0, f64::max);
                return LpEstimate { p, r, value, stderr: 0.0, samples: m, seed };
            }
            let mut sum = Kahan::new();
            for v in vals.clone() {
                sum.add(v);
            }
            let mean = sum.value() / m as f64;
            let mut var = Kahan::new();
            for v in vals {
                var.add((v - mean) * (v - mean));
            }
            let var = var.value() / (m as f64 * (m as f64 - 1.0));
            let value = mean.powf(1.0 / p);
            // Delta method: d(mean^(1/p))/d(mean) = mean^(1/p - 1)/p.
            let stderr = if mean > 0.0 {
                mean.powf(1.0 / p - 1.0) / p * var.sqrt()
            } else {
                0.0
            };
            LpEstimate { p, r, value, stderr, samples: m, seed }
        })
        .collect();
    Ok(estimates)
}

/// sqrt of the mean squared L^2 norm over K jittered-equispaced rotations
/// in [0, pi/2). Each angle gets an independent derived seed; the angle
/// average and every inner norm are deterministic given (seed, K, M).
pub fn rotation_average_l2(
    body: &Body2D,
    r: f64,
    k_angles: usize,
    m: usize,
    seed: u64,
) -> Result<f64> {
    if k_angles < 8 {
        return Err(Error::InvalidParam(format!(
            "rotation_average_l2 requires K >= 8 angles, got {k_angles}"
        )));
    }
    let norms: Vec<f64> = (0..k_angles)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let u = unit_jitter(seed, STREAM_ANGLE, k as u64);
            let theta = (k as f64 + u) * std::f64::consts::FRAC_PI_2 / k_angles as f64;
            let rotated = crate::body::rotate_body(body, theta, None)?;
            let sub_seed: u64 = keyed_rng(seed, STREAM_ANGLE, k as u64).gen();
            let est = lp_norm(&rotated, r, 2.0, m, sub_seed, None)?;
            Ok(est.value * est.value)
        })
        .collect::<Result<_>>()?;
    let mut acc = Kahan::new();
    for v in &norms {
        acc.add(*v);
    }
    Ok((acc.value() / k_angles as f64).sqrt())
}
