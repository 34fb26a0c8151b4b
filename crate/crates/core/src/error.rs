//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong in the solver suite.
///
/// Numeric failures (`Bracket`, `NonPositiveParameter`, `DegenerateSigma`)
/// are recoverable by the caller: the usual response is to perturb the
/// trial point or escalate precision and retry.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A root bracket did not straddle a sign change.
    #[error("no sign change across bracket ({lo}, {hi})")]
    Bracket { lo: String, hi: String },

    /// Two polynomials were expected to have equal degree.
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },

    /// A leading principal minor vanished exactly at the trial shift.
    #[error("leading principal minor vanished at sigma = {sigma}")]
    DegenerateSigma { sigma: String },

    /// Bisection or synthesis kept failing after all allowed escalations.
    #[error("precision exhausted after {escalations} escalation(s): {context}")]
    PrecisionExhausted { escalations: u32, context: String },

    /// The requested multiplicity pattern violates the feasibility gate.
    #[error("infeasible spectrum: multiplicity t_{index} = {mult} exceeds {index}")]
    InfeasibleSpectrum { index: usize, mult: usize },

    /// A quantity that must be strictly positive came out non-positive.
    #[error("non-positive parameter in {context}")]
    NonPositiveParameter { context: String },

    /// The dense oracle refuses problems beyond its size limit.
    #[error("size {n} exceeds oracle limit {limit}")]
    SizeLimit { n: usize, limit: usize },

    /// Chain parameters violate the model invariants.
    #[error("invalid chain: {0:?}")]
    Validation(Vec<crate::chain::Violation>),

    /// An operation was handed data of the wrong dimension.
    #[error("dimension error: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Exponent bookkeeping left the representable range.
    #[error("overflow while computing {context}")]
    Overflow { context: String },

    /// Malformed input (bad number, bad schema).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
