//! Experiment configuration: TOML schema, validation, and body construction.
//!
//! A config file describes one experiment as data. Every knob has an explicit
//! default except `seed` and `experiment`, which must be stated so that runs
//! are reproducible on purpose rather than by accident. Validation happens
//! up front and names the offending key; nothing touches the filesystem or
//! spawns work until the config is coherent. Unknown keys are rejected so a
//! typo cannot silently fall back to a default.

use serde::{Deserialize, Serialize};

use latdisc_core::body::{self, Body2D, ProfileSpec};
use latdisc_core::numerics::log_grid;

use crate::{Error, Result};

/// Hard ceiling on CSV rows a single run may emit.
pub const MAX_ROWS: u64 = 1_000_000_000;

/// Which experiment the runner executes. Serialized in snake_case so config
/// files read naturally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// L^p norms of the discrepancy across a dilation grid, with slope fits.
    ExponentScan,
    /// Scaled residual after subtracting the flat-point main term, plus the
    /// ratio of the measured L^2 norm to the predicted series norm.
    MaintermResidual,
    /// Boundary-transform magnitudes along fixed directions, with envelope
    /// decay fits per regime.
    FourierDecay,
    /// Rotation-averaged L^2 norms across a dilation grid.
    RotationScan,
    /// Axis-aligned body against its golden-rotated copy: slope gap and
    /// norm ratio driven by the rotation's Diophantine quality.
    DiophantineCompare,
    /// Closed-form cross-checks that need no sampling; rows carry errors.
    IdentitySuite,
}

impl ExperimentKind {
    /// Stable lowercase label used in CSV rows and artifact names.
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::ExponentScan => "exponent_scan",
            ExperimentKind::MaintermResidual => "mainterm_residual",
            ExperimentKind::FourierDecay => "fourier_decay",
            ExperimentKind::RotationScan => "rotation_scan",
            ExperimentKind::DiophantineCompare => "diophantine_compare",
            ExperimentKind::IdentitySuite => "identity_suite",
        }
    }
}

/// Pass thresholds for the fits an experiment performs. Defaults match the
/// library's verified regimes; configs may loosen or tighten them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed |fit - predicted| for L^p slope fits.
    pub slope: f64,
    /// Allowed relative gap between the measured top-R L^2 norm and the
    /// predicted series norm.
    pub ratio: f64,
    /// The scaled residual slope must sit below this (strictly negative
    /// means the residual genuinely decays).
    pub residual_slope_max: f64,
    /// Upper bound on the rotation-averaged L^2 slope.
    pub rotation_slope_max: f64,
    /// Upper bound on the golden-rotated body's L^2 slope.
    pub rotated_slope_max: f64,
    /// The rotated slope must sit at least this far below the base slope.
    pub slope_gap_min: f64,
    /// The base/rotated L^2 ratio at the top dilation must exceed this.
    pub l2_ratio_min: f64,
    /// Absolute error allowed in closed-form identity checks.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            slope: 0.05,
            ratio: 0.10,
            residual_slope_max: -0.05,
            rotation_slope_max: 0.65,
            rotated_slope_max: 0.60,
            slope_gap_min: 0.12,
            l2_ratio_min: 1.5,
            identity: 1e-8,
        }
    }
}

fn default_body() -> String {
    "disk".to_string()
}
fn default_b() -> f64 {
    0.8
}
fn default_r_min() -> f64 {
    64.0
}
fn default_r_max() -> f64 {
    4096.0
}
fn default_r_count() -> usize {
    12
}
fn default_r_integer() -> bool {
    true
}
fn default_p() -> Vec<f64> {
    vec![2.0]
}
fn default_m() -> usize {
    256
}
fn default_out() -> String {
    "latdisc_run".to_string()
}
fn default_k_angles() -> usize {
    12
}

/// One experiment, fully described. `seed` drives every random stream in
/// the run; two runs of the same config produce byte-identical artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Body family: "disk", "gen_ellipse", "superellipse", "profile_power".
    #[serde(default = "default_body")]
    pub body: String,
    /// Flatness parameter for the non-disk families.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Optional rotation angle (radians) applied after construction.
    #[serde(default)]
    pub theta: Option<f64>,
    /// Profile half-width for the profile_power family.
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_r_count")]
    pub r_count: usize,
    /// Round the log-spaced dilation grid to integers (deduplicated).
    /// Fractional dilations decohere the flat-point series and smear slope
    /// fits, so integer grids are the default.
    #[serde(default = "default_r_integer")]
    pub r_integer: bool,
    /// Norm exponents; for fourier_decay the column instead carries the
    /// regime code.
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    /// Stratified samples per dilation.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Master seed. Required: omitting it is an error, not a default.
    pub seed: u64,
    /// Artifact prefix; the runner writes `{out}.csv` and `{out}.json`.
    #[serde(default = "default_out")]
    pub out: String,
    /// Rotation count for rotation_scan.
    #[serde(default = "default_k_angles")]
    pub k_angles: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    /// The dilation grid this config describes: log-spaced, optionally
    /// rounded to integers and deduplicated.
    pub fn r_grid(&self) -> Vec<f64> {
        let raw = log_grid(self.r_min, self.r_max, self.r_count);
        if !self.r_integer {
            return raw;
        }
        let mut grid: Vec<f64> = raw.into_iter().map(f64::round).collect();
        grid.dedup();
        grid
    }

    /// Upper bound on CSV rows the run will emit, used for the row budget.
    /// Uses `r_count` directly (deduplication only shrinks the grid) so the
    /// estimate never materializes an oversized grid.
    pub fn estimated_rows(&self) -> u64 {
        let r = self.r_count as u64;
        let p = self.p.len().max(1) as u64;
        match self.experiment {
            ExperimentKind::ExponentScan | ExperimentKind::RotationScan => r * p,
            ExperimentKind::MaintermResidual => r * p + 1,
            ExperimentKind::FourierDecay => 3 * r,
            ExperimentKind::DiophantineCompare => 2 * r,
            ExperimentKind::IdentitySuite => 64,
        }
    }

    /// Check coherence and name the offending key on failure.
    pub fn validate(&self) -> Result<()> {
        if !(self.r_min.is_finite() && self.r_max.is_finite() && self.r_min > 0.0) {
            return Err(Error::Config(format!(
                "r_min/r_max must be finite and positive, got {} and {}",
                self.r_min, self.r_max
            )));
        }
        if self.r_max <= self.r_min {
            return Err(Error::Config(format!(
                "r_max ({}) must exceed r_min ({})",
                self.r_max, self.r_min
            )));
        }
        if self.r_count < 2 {
            return Err(Error::Config(format!(
                "r_count must be at least 2, got {}",
                self.r_count
            )));
        }
        if self.m < 16 {
            return Err(Error::Config(format!(
                "m must be at least 16 stratified samples, got {}",
                self.m
            )));
        }
        if self.p.is_empty() {
            return Err(Error::Config("p must list at least one exponent".into()));
        }
        for &p in &self.p {
            let ok = p.is_infinite() && p > 0.0 || (p.is_finite() && p >= 1.0);
            if !ok {
                return Err(Error::Config(format!("p entries must lie in [1, inf], got {p}")));
            }
        }
        if self.k_angles > 4096 {
            return Err(Error::Config(format!(
                "k_angles must be at most 4096, got {}",
                self.k_angles
            )));
        }
        match self.experiment {
            ExperimentKind::FourierDecay => {
                if self.r_count < 48 {
                    return Err(Error::Config(format!(
                        "fourier_decay needs r_count >= 48 for envelope fits, got {}",
                        self.r_count
                    )));
                }
                if self.r_max > 16_384.0 {
                    return Err(Error::Config(format!(
                        "fourier_decay caps r_max at 16384, got {}",
                        self.r_max
                    )));
                }
            }
            ExperimentKind::MaintermResidual => {
                if self.body != "gen_ellipse" || self.theta.is_some() {
                    return Err(Error::Config(
                        "mainterm_residual requires body = gen_ellipse with theta unset: \
                         the subtracted term needs a vertical flat pair on an otherwise \
                         curved boundary"
                            .into(),
                    ));
                }
                if !self.r_integer {
                    return Err(Error::Config(
                        "mainterm_residual requires r_integer = true: the flat-point \
                         series only cohere on integer dilations"
                            .into(),
                    ));
                }
                if !self.p.contains(&2.0) {
                    return Err(Error::Config(
                        "mainterm_residual requires p to contain 2 (the series norm \
                         comparison is an L^2 statement)"
                            .into(),
                    ));
                }
            }
            ExperimentKind::RotationScan => {
                if self.k_angles < 8 {
                    return Err(Error::Config(format!(
                        "rotation_scan needs k_angles >= 8, got {}",
                        self.k_angles
                    )));
                }
            }
            ExperimentKind::DiophantineCompare => {
                if self.theta.is_some() {
                    return Err(Error::Config(
                        "diophantine_compare applies its own golden rotation; leave \
                         theta unset"
                            .into(),
                    ));
                }
                if self.p != vec![2.0] {
                    return Err(Error::Config(format!(
                        "diophantine_compare fixes p = [2.0] (the comparison is an L^2 \
                         statement), got {:?}",
                        self.p
                    )));
                }
            }
            _ => {}
        }
        let rows = self.estimated_rows();
        if rows > MAX_ROWS {
            return Err(Error::Config(format!(
                "run would emit about {rows} rows, over the {MAX_ROWS} budget; \
                 shrink r_count or p"
            )));
        }
        // Slope fits need at least 8 grid points after integer deduplication.
        let needs_fit = matches!(
            self.experiment,
            ExperimentKind::ExponentScan
                | ExperimentKind::MaintermResidual
                | ExperimentKind::RotationScan
                | ExperimentKind::DiophantineCompare
        );
        if needs_fit && self.r_count <= 10_000 && self.r_grid().len() < 8 {
            return Err(Error::Config(format!(
                "r_count gives only {} distinct grid points after rounding; slope \
                 fits need at least 8",
                self.r_grid().len()
            )));
        }
        // Body construction doubles as parameter validation.
        self.build_body()?;
        Ok(())
    }

    /// Construct the configured body.
    pub fn build_body(&self) -> Result<Body2D> {
        build_body_from_parts(&self.body, self.gamma, self.theta, self.b)
    }

    /// Comma-free body label for CSV rows (CSV fields are never quoted).
    pub fn body_label(&self) -> String {
        let mut label = match (self.body.as_str(), self.gamma) {
            ("disk", _) => "disk".to_string(),
            (name, Some(g)) => format!("{name}{g}"),
            (name, None) => name.to_string(),
        };
        if let Some(theta) = self.theta {
            label.push_str(&format!("_rot{theta}"));
        }
        label
    }
}

/// Shared body factory for configs and CLI flags. `gamma` is required for
/// every family except the disk; `theta` optionally rotates the result.
pub fn build_body_from_parts(
    body: &str,
    gamma: Option<f64>,
    theta: Option<f64>,
    b: f64,
) -> Result<Body2D> {
    let need_gamma = || {
        gamma.ok_or_else(|| Error::Config(format!("body \"{body}\" requires the gamma key")))
    };
    let base = match body {
        "disk" => body::disk(),
        "gen_ellipse" => body::gen_ellipse(need_gamma()?)?,
        "superellipse" => body::superellipse(need_gamma()?)?,
        "profile_power" => power_profile_body(need_gamma()?, b)?,
        other => {
            return Err(Error::Config(format!(
                "unknown body \"{other}\"; expected disk, gen_ellipse, superellipse, \
                 or profile_power"
            )));
        }
    };
    match theta {
        Some(theta) => Ok(body::rotate_body(&base, theta, None)?),
        None => Ok(base),
    }
}

/// Profile body with phi(x) = |x|^gamma on [0, b]: the minimal member of
/// the flat class at order gamma, used as the user-supplied-profile example.
pub fn power_profile_body(gamma: f64, b: f64) -> Result<Body2D> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::Config(format!(
            "profile_power needs gamma > 1, got {gamma}"
        )));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Config(format!("profile_power needs b > 0, got {b}")));
    }
    let g = gamma;
    let spec = ProfileSpec {
        gamma,
        b,
        phi: std::sync::Arc::new(move |x: f64| x.abs().powf(g)),
        phi2: std::sync::Arc::new(move |x: f64| g * (g - 1.0) * x.abs().powf(g - 2.0)),
    };
    Ok(body::profile_body(spec)?)
}

/// Parse a TOML config. Errors carry toml's key/line diagnostics verbatim.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
