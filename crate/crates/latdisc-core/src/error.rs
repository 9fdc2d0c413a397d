use thiserror::Error;

/// Errors shared across the crate.
///
/// Numerical routines fail loudly (`Resolution`, `NotConverged`) instead of
/// silently degrading accuracy; constructors reject out-of-domain parameters
/// with the offending value in the message.
#[derive(Debug, Error)]
pub enum Error {
    /// Body construction rejected (order out of range, bad profile data, ...).
    #[error("invalid body: {0}")]
    InvalidBody(String),

    /// A scalar parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Quadrature would exceed its node budget; the result would be
    /// unresolved at the requested frequency.
    #[error("quadrature resolution exceeded: {0}")]
    Resolution(String),

    /// Panel refinement stalled above the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    NotConverged(String),

    /// The Fourier transform at zero frequency is the area; the boundary
    /// formula is singular there.
    #[error("zero frequency: chi_hat_2d requires zeta != 0 (use area instead)")]
    ZeroFrequency,

    /// Main-term evaluation needs at least one flat point with a rational
    /// normal (m0 present).
    #[error("no rational flat normal: {0}")]
    NoRationalNormal(String),

    /// The requested operation needs the main term to be constant in z1,
    /// i.e. every rational flat normal parallel to the z2 axis.
    #[error("main term depends on z1: {0}")]
    MainTermDependsOnZ1(String),

    /// Paired flat-point parameters must match (same order, same g0).
    #[error("mismatched flat pair: {0}")]
    MismatchedPair(String),

    /// A user-supplied evaluator returned a non-finite value.
    #[error("evaluator failure: {0}")]
    Evaluator(String),

    /// Too few samples to fit or report.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    /// Log-log fits need strictly positive values.
    #[error("nonpositive value in fit input: {0}")]
    NonpositiveValue(String),

    /// Work estimate exceeds the configured budget.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;
