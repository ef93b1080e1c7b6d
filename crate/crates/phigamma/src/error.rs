//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenient result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failures surfaced by the arithmetic, transform and cohomology engines.
///
/// Every variant corresponds to a situation in which continuing would mean
/// guessing: the engines report instead of silently zero-filling or truncating.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Two operands live over different coefficient rings.
    #[error("coefficient ring mismatch: {0}")]
    RingMismatch(String),

    /// Inversion of a non-unit; `annihilator` names a generator of Ann(a).
    #[error("element is not a unit (annihilator generated by {annihilator})")]
    NonUnit {
        /// Human-readable generator of the annihilator ideal.
        annihilator: String,
    },

    /// Only odd primes are supported.
    #[error("unsupported prime {0}: an odd prime is required")]
    UnsupportedPrime(u32),

    /// A defining polynomial for a finite extension is reducible or could not be certified.
    #[error("defining polynomial rejected: {0}")]
    BadModulus(String),

    /// A value is indistinguishable from zero at the available precision.
    #[error("value indistinguishable from zero at absolute precision {0}")]
    IndistinguishableFromZero(i64),

    /// An exact rational result was requested but the value is transcendental over Q.
    #[error("not representable over the rationals: {0}")]
    NotRational(String),

    /// A truncated-series operation needs coefficients outside the known window.
    #[error("window overflow in {op}: {detail}")]
    WindowOverflow {
        /// Operation name.
        op: &'static str,
        /// What was missing.
        detail: String,
    },

    /// Row reduction met a pivot whose precision is too small to decide whether it is zero.
    #[error("pivot ambiguity: candidate pivot has only {relative_digits} significant digits")]
    PivotAmbiguity {
        /// Significant digits left on the candidate pivot.
        relative_digits: i64,
    },

    /// A series failed to converge on the configured window.
    #[error("series does not converge: {0}")]
    NonConvergence(String),

    /// A pair (z1, z2) violates the gluing condition.
    #[error("compatibility violated: defect valuation {0}")]
    CompatibilityViolation(i64),

    /// A cocycle or commutation identity fails beyond tolerance.
    #[error("identity check failed: {0}")]
    IdentityFailure(String),

    /// Shapes of matrices or vectors do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Invalid argument for an operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Malformed textual input (characters, configs).
    #[error("parse error: {0}")]
    Parse(String),
}
