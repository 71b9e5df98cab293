use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
///
/// Messages that stem from a violated step-size or contraction condition
/// name the inequality that failed (for example `λ < 1/ρ` or `σ < 2/L²`).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("schedule error: {inequality} fails at k = {k} ({detail})")]
    Schedule {
        k: usize,
        inequality: &'static str,
        detail: String,
    },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("instance error: {0}")]
    Instance(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "inner solver did not converge after {iterations} iterations (best residual {residual:e})"
    )]
    Nonconvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("locality violation: distance {distance:e} to the reference point exceeds radius {radius:e} ({what})")]
    LocalityViolation {
        distance: f64,
        radius: f64,
        what: &'static str,
    },

    #[error("no minimizer of the prox subproblem inside the search ball of radius {radius:e}")]
    NoMinimizerInBall { radius: f64 },

    #[error("prox subproblem is not strongly convex on the search ball (non-monotone subgradient near {at:e})")]
    NotStronglyConvex { at: f64 },

    #[error("unsupported dimension {dimension}: the grid oracle supports n <= 2")]
    UnsupportedDimension { dimension: usize },
}
