//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Errors surfaced by the geometric and numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Metric matrix is singular or not positive definite at a sampled point.
    SingularMetric { detail: String },
    /// A warp function violates positivity or convexity on the sampled domain.
    InvalidWarp { detail: String },
    /// Requested dimension is outside the supported range.
    UnsupportedDimension { dim: usize },
    /// Adaptive step size underflowed; `t_last` is the last time reached.
    StepUnderflow { t_last: f64 },
    /// Geodesic shooting did not converge; the best residual is reported.
    ShootingDiverged { residual: f64 },
    /// Inputs span a degenerate plane (denominator below threshold).
    CollinearVectors,
    /// A convex 1-d minimum was not bracketed inside the search horizon.
    MinimumNotBracketed,
    /// Busemann extrapolation saw a non-monotone defect sequence.
    NonMonotoneBusemann,
    /// Sphere radius below the supported minimum.
    RadiusTooSmall { r: f64, r_min: f64 },
    /// Base point of the vector lies on the thickened support.
    BaseOnSupport,
    /// Eigenvalue iteration failed to converge.
    EigenFailed,
    /// A constants-ledger inequality is violated; names the inequality.
    ConstraintViolated { name: &'static str, detail: String },
    /// A per-step avoidance check failed; names the check.
    CheckFailed { check: &'static str, detail: String },
    /// Iteration cap reached before stabilisation.
    IterationCap { iterations: usize },
    /// Jitter retries exhausted while moving a sample off the support.
    JitterExhausted,
    /// No intersection of the deformed sphere families was found.
    NoIntersection,
    /// Input validation failure.
    InvalidInput { detail: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SingularMetric { detail } => write!(f, "singular metric: {detail}"),
            Error::InvalidWarp { detail } => write!(f, "invalid warp function: {detail}"),
            Error::UnsupportedDimension { dim } => {
                write!(f, "unsupported dimension {dim} (expected 2..=6)")
            }
            Error::StepUnderflow { t_last } => {
                write!(f, "integrator step underflow at t = {t_last}")
            }
            Error::ShootingDiverged { residual } => {
                write!(f, "shooting failed to converge (best residual {residual:.3e})")
            }
            Error::CollinearVectors => write!(f, "vectors are collinear"),
            Error::MinimumNotBracketed => write!(f, "minimum not bracketed inside the horizon"),
            Error::NonMonotoneBusemann => {
                write!(f, "Busemann defect sequence is not non-increasing")
            }
            Error::RadiusTooSmall { r, r_min } => {
                write!(f, "radius {r} below the minimum {r_min}")
            }
            Error::BaseOnSupport => write!(f, "base point lies on the thickened support"),
            Error::EigenFailed => write!(f, "eigenvalue iteration failed"),
            Error::ConstraintViolated { name, detail } => {
                write!(f, "constant constraint `{name}` violated: {detail}")
            }
            Error::CheckFailed { check, detail } => {
                write!(f, "avoidance check `{check}` failed: {detail}")
            }
            Error::IterationCap { iterations } => {
                write!(f, "iteration cap {iterations} reached without stabilisation")
            }
            Error::JitterExhausted => write!(f, "jitter retries exhausted"),
            Error::NoIntersection => write!(f, "deformed families do not intersect"),
            Error::InvalidInput { detail } => write!(f, "invalid input: {detail}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
