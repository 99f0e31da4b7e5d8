use thiserror::Error;

/// Errors raised by the simulation library.
///
/// Variants split into two families: [`Error::is_validation`] ones mean the
/// caller passed parameters outside a type's invariants, the rest are
/// numerical failures of an otherwise valid request.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge: estimated error {estimate:.3e} after {intervals} subintervals")]
    QuadratureNotConverged { estimate: f64, intervals: usize },

    #[error("low-temperature conductivity is singular at hbar*omega = 2*mu_c; offset omega by at least {min_offset_ev:.1e} eV")]
    LogSingularity { min_offset_ev: f64 },

    #[error("sheet conductivity is zero; no surface wave exists")]
    NoConductivity,

    #[error("Re k(omega) is not monotonic across the finite-difference stencil at omega = {omega:.6e} rad/s")]
    NonMonotonicDispersion { omega: f64 },

    #[error("mode is not supported: {0}")]
    UnsupportedMode(String),

    #[error("singular boundary-value system (condition number {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("no reflectance minimum below R = {threshold} in the scanned window (best R = {best:.4})")]
    NotResonant { threshold: f64, best: f64 },

    #[error("gap field is not evanescent (theta below the critical angle)")]
    NonEvanescentGap,

    #[error("truncation dimension {dim} too small: retained norm {norm:.12}")]
    TruncationTooSmall { dim: usize, norm: f64 },

    #[error("parity projection undefined: both branch weights below 1e-14")]
    ParityUndefined,

    #[error("state norm collapsed to {norm:.3e} at step {step} of trajectory {trajectory}")]
    NormCollapse { norm: f64, step: usize, trajectory: u64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for errors caused by out-of-contract inputs rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::DimensionMismatch { .. } | Error::NonEvanescentGap
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
