//! One error type for the whole crate.
//!
//! Library operations return `Result<T, Error>`; the variants mirror the
//! contract failures of the individual modules rather than wrapping source
//! errors, so a failed precondition is distinguishable from a statistical
//! failure (e.g. `NoGapFound`) at match sites.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    // ---- field ----
    /// Modulus is not a prime.
    NotPrime(u64),
    /// Modulus exceeds the supported word bound.
    TooLarge(u64),
    /// Multiplicative inverse of zero requested.
    ZeroInverse,

    // ---- linmodel ----
    /// Vector lengths disagree (expected, got).
    DimensionMismatch { expected: usize, got: usize },
    /// Requested sparsity exceeds the dimension.
    BadSparsity { d: usize, n: usize },
    /// Noise rates outside the valid range (the implied flip probability).
    BadRates { rho: f64 },
    /// A scaling vector entry is zero.
    ZeroScale { index: usize },
    /// Padding target is smaller than the current dimension.
    ShrinkNotAllowed { from: usize, to: usize },
    /// Argument outside a γ specification's covered domain.
    OutOfDomain { value: f64 },
    /// Malformed instance file.
    ParseInstance(String),

    // ---- approx ----
    /// The integer band [⌈γ⁻¹(d)⌉, ⌊γ(d)⌋] is empty.
    EmptyBand { d: u64 },
    /// The candidate class q^n is too large to enumerate.
    TooLargeToEnumerate { q: u64, n: usize },

    // ---- psi ----
    /// Rejection sampling acceptance fell below 1/2 over a window.
    RejectionStall { d: usize, accepted: u64, window: u64 },
    /// No adjacent gap of the required size in the scanned range.
    NoGapFound { m: usize, upper: usize },

    // ---- sparse_reduction ----
    /// Accept bands for the two sparsity classes are not disjoint.
    IntervalOverlap { k: usize },
    /// Coefficient recovery needs an irrelevant index and none exists.
    NoIrrelevantIndex,
    /// Zero or several candidate coefficients matched the accept band.
    AmbiguousCoefficient { index: usize, matches: usize },
    /// Distinguisher calibration unusable: the answer on uniform-label
    /// streams is unstable, or coincides with the sparse-promise answer.
    CalibrationAmbiguous { k1_votes: u64, trials: u64 },
    /// A reduction's checked precondition does not hold.
    PreconditionFailed(String),
    /// An inner contract failure surfaced by a reduction pipeline.
    ContractViolation(Box<Error>),

    // ---- full_learner ----
    /// Hypothesis selection over an empty pool.
    EmptyCandidateSet,
    /// Every sweep run failed.
    AllRunsFailed,
    /// Mode boosting found no majority hypothesis.
    NoMajority { best: u64, reps: u64 },

    // ---- harness / shared ----
    /// A configured example, trial, or wall-clock cap was hit.
    BudgetExceeded(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Error::*;
        match self {
            NotPrime(q) => write!(f, "{q} is not prime"),
            TooLarge(q) => write!(f, "modulus {q} exceeds the word bound"),
            ZeroInverse => write!(f, "zero has no multiplicative inverse"),
            DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            BadSparsity { d, n } => write!(f, "sparsity {d} exceeds dimension {n}"),
            BadRates { rho } => write!(f, "noise rates imply flip probability {rho} outside [0, 1]"),
            ZeroScale { index } => write!(f, "scaling vector has zero entry at index {index}"),
            ShrinkNotAllowed { from, to } => {
                write!(f, "cannot pad from dimension {from} down to {to}")
            }
            OutOfDomain { value } => write!(f, "{value} is outside the γ specification's domain"),
            ParseInstance(msg) => write!(f, "malformed instance: {msg}"),
            EmptyBand { d } => write!(f, "approximation band for sparsity {d} is empty"),
            TooLargeToEnumerate { q, n } => {
                write!(f, "cannot enumerate {q}^{n} candidate functions")
            }
            RejectionStall { d, accepted, window } => write!(
                f,
                "rejection sampling stalled at d={d}: {accepted}/{window} accepted"
            ),
            NoGapFound { m, upper } => {
                write!(f, "no unit gap in the Ψ table between {m} and {upper}")
            }
            IntervalOverlap { k } => {
                write!(f, "accept bands around Ψ'({k}) are not disjoint")
            }
            NoIrrelevantIndex => write!(f, "no irrelevant index available for shifting"),
            AmbiguousCoefficient { index, matches } => write!(
                f,
                "coefficient at index {index} ambiguous: {matches} candidates matched"
            ),
            CalibrationAmbiguous { k1_votes, trials } => write!(
                f,
                "distinguisher calibration ambiguous: {k1_votes}/{trials} sparse-class answers on uniform streams"
            ),
            PreconditionFailed(msg) => write!(f, "precondition failed: {msg}"),
            ContractViolation(inner) => write!(f, "reduction contract violated: {inner}"),
            EmptyCandidateSet => write!(f, "hypothesis selection over an empty candidate set"),
            AllRunsFailed => write!(f, "every noise-sweep run failed"),
            NoMajority { best, reps } => {
                write!(f, "no majority hypothesis: best count {best} of {reps} repetitions")
            }
            BudgetExceeded(what) => write!(f, "budget exceeded: {what}"),
        }
    }
}

impl std::error::Error for Error {}

impl Error {
    /// Wrap an inner failure as a pipeline-level contract violation.
    pub fn into_contract_violation(self) -> Error {
        Error::ContractViolation(Box::new(self))
    }
}
