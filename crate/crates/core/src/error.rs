//! Error type shared across the crate.

use thiserror::Error;

/// Errors surfaced by the toolkit.
///
/// Domain and precondition violations are reported with enough context to
/// identify the offending argument; callers that need a process exit code
/// can use [`Error::is_internal`] to separate usage errors from bugs.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument exceeded the configured sieve bound.
    #[error("argument {n} exceeds the sieve bound {bound}")]
    SieveBound { n: u64, bound: u64 },

    /// Zero was passed where a positive integer is required.
    #[error("zero is outside the domain (positive integers required)")]
    ZeroArgument,

    /// A prime was required but the argument is not prime.
    #[error("{n} is not prime")]
    NotPrime { n: u64 },

    /// An argument fell outside a tabulated range.
    #[error("argument {n} exceeds the tabulated range {max}")]
    OutOfRange { n: u64, max: u64 },

    /// A tabulation that must be multiplicative with value 1 at 1 is not.
    #[error("tabulation is not normalised: value at 1 must be 1")]
    NotNormalised,

    /// A named precondition of an identity or construction failed.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A finite closed-form summation was requested for a coefficient whose
    /// support cannot be proven finite from its symbolic description.
    #[error("finiteness not provable: exact summation requires the zero default rule on unlisted primes")]
    FinitenessNotProvable,

    /// A scan exceeded the configured term budget.
    #[error("scan budget exceeded: {terms} terms requested, budget {budget}")]
    ScanBudget { terms: u64, budget: u64 },

    /// A tabulated function failed a semi-multiplicativity check.
    #[error("not semi-multiplicative: violated at ({a}, {b})")]
    NotSemiMultiplicative { a: u64, b: u64 },

    /// A required expansion entry is missing from a sparse coefficient map.
    #[error("missing expansion entry for modulus {q}")]
    MissingEntry { q: u64 },

    ///// The dilated-mixture recovery was invoked outside its two branches.
    #[error("unsupported branch: |alpha| = {alpha_abs} must be < 1 or > rho = {rho}")]
    UnsupportedBranch { alpha_abs: f64, rho: f64 },

    /// A growth-exponent fit was requested on a trace that is not growing.
    #[error("trace is not growing: {0}")]
    NotGrowing(String),

    /// Numeric overflow while building an integer quantity (e.g. a conductor).
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    /// Exact arithmetic cannot represent a requested operation.
    #[error("exact arithmetic unsupported: {0}")]
    ExactUnsupported(String),
}

impl Error {
    /// True for errors that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Overflow(_))
    }
}

/// Convenient alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
