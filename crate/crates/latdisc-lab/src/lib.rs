//! Experiment orchestration for the discrepancy library: declarative TOML
//! configs, deterministic seeded runs, CSV/JSON artifacts, and offline
//! refitting of emitted data.
//!
//! Invariants maintained here:
//! - a run is a pure function of its config: identical config (including
//!   seed) produces byte-identical CSV output regardless of thread count;
//! - every reported fit is re-fittable offline from the stored rows (the
//!   refit path parses the CSV and calls the same least-squares routine,
//!   reproducing the fit bit for bit; floats are printed with 17
//!   significant digits so the round trip is exact);
//! - all randomness derives from the single config seed by counter-based
//!   keying; no entropy is drawn anywhere else;
//! - row-count budgets are checked before any work starts.

pub mod config;
pub mod csvio;
pub mod experiments;

pub use config::{ExperimentConfig, ExperimentKind, Tolerances};
pub use csvio::{fit_rows, parse_csv, to_csv, CSV_HEADER};
pub use experiments::{run_experiment, write_artifacts, Row, RunReport};

use thiserror::Error as ThisError;

/// Errors surfaced by config parsing, experiment dispatch, and artifact IO.
#[derive(Debug, ThisError)]
pub enum Error {
    /// Invalid or inconsistent config; the message names the offending key
    /// (and carries the TOML line/column for parse failures).
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] latdisc_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed CSV input; the message names the line number.
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;
