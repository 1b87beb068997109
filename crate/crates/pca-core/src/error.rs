use core::fmt;

/// Errors shared across the model, dynamics, and inference layers.
#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    /// A model parameter violates its domain (`K ≥ 2`, `N ≥ 1`, symbol
    /// ranges, matrix shape or stochasticity, …).
    InvalidParameter {
        /// What was wrong, in plain words.
        what: &'static str,
    },
    /// `K^N` exceeds the exact-enumeration cap; only simulation paths are
    /// available at this size.
    EnumerationTooLarge {
        /// Alphabet size requested.
        k: usize,
        /// Node count requested.
        n: usize,
        /// State-count cap that was exceeded.
        cap: usize,
    },
    /// A matrix that should encode a PCA global kernel does not: the
    /// recovered local matrix fails row-stochasticity.
    NotRepresentable {
        /// Largest observed violation of the row-sum identity.
        max_violation: f64,
    },
    /// The matrix is not irreducible and aperiodic, so the requested
    /// limit object (stationary distribution, mixing exponent) need not
    /// exist or be unique.
    NotErgodic,
    /// Power iteration hit its iteration cap before reaching tolerance.
    NoConvergence {
        /// Residual `‖πM − π‖₁` at the final iterate.
        residual: f64,
        /// Number of iterations performed.
        iterations: usize,
    },
    /// No power of the support pattern became strictly positive within the
    /// cap; the matrix is not primitive.
    NotPrimitive {
        /// Power cap that was exhausted.
        cap: usize,
    },
    /// A scalar argument is outside its admissible range.
    InvalidRange {
        /// Which argument, and what range it must lie in.
        what: &'static str,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { what } => write!(f, "invalid parameter: {what}"),
            Error::EnumerationTooLarge { k, n, cap } => write!(
                f,
                "state space K^N = {k}^{n} exceeds the enumeration cap of {cap} states"
            ),
            Error::NotRepresentable { max_violation } => write!(
                f,
                "matrix is not the global kernel of any local transition matrix \
                 (row-sum violation {max_violation:e})"
            ),
            Error::NotErgodic => {
                write!(f, "matrix is not irreducible and aperiodic")
            }
            Error::NoConvergence { residual, iterations } => write!(
                f,
                "power iteration did not reach tolerance after {iterations} iterations \
                 (residual {residual:e})"
            ),
            Error::NotPrimitive { cap } => write!(
                f,
                "no strictly positive power found within {cap} multiplications; \
                 matrix is not primitive"
            ),
            Error::InvalidRange { what } => write!(f, "argument out of range: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
