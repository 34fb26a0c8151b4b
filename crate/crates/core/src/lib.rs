//! Solvers for the inverse eigenvalue problem of fixed-free
//! mass-spring-inerter chains.
//!
//! Given a set of positive numbers with multiplicities, the crate
//! decides whether a chain with those natural frequencies exists
//! (`t_i <= i` for eigenvalues sorted ascending), constructs chain
//! parameters realizing them with user-pinned masses, and certifies
//! constructions with an independent forward eigensolver for the matrix
//! pencil `K - lambda (M+B)`.
//!
//! Modules:
//! * [`poly`] / [`precision`] / [`decimal`] — arbitrary-precision
//!   substrate: product-form real-rooted polynomials, bracketed
//!   bisection, interlacing predicates, exact decimal round trips;
//! * [`chain`] — the physical model and its matrices;
//! * [`forward`] — determinant recurrences, Sturm counts, spectrum;
//! * [`plan`] — feasibility gate and the pole-assignment plan;
//! * [`constants`] / [`synthesis`] — the constructive engine;
//! * [`verify`] — a-posteriori certification and the necessity fuzzer;
//! * [`oracle`] — dense exact-rational cross-checks.

// Negated comparisons on floats are deliberate throughout: a NaN that
// sneaks past an invariant must fail the check, and `!(a < b)` fails
// closed where `a >= b` would not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod constants;
pub mod decimal;
pub mod error;
pub mod forward;
pub mod oracle;
pub mod plan;
pub mod poly;
pub mod precision;
pub mod synthesis;
pub mod verify;

pub use chain::{assemble, ChainJson, ChainSystem, PencilMatrices, Violation};
pub use error::{Error, Result};
pub use forward::{
    fg_sequence, spectrum, sturm_count, SpectrumReport, SpectrumReportJson, SturmSample,
};
pub use oracle::dense_charpoly;
pub use plan::{build_plan, feasible, MultiplicityPlan, SpectrumJson, Strategy, TargetSpectrum};
pub use poly::{interlaces, root_in_bracket, RootPoly, ScaledPair};
pub use precision::PrecisionConfig;
pub use synthesis::{
    synthesize, synthesize_default, Mode, StepRecord, SynthesisResult, SynthesisResultJson,
};
pub use verify::{five_dof_bound, necessity_fuzz, verify, FuzzSummary, VerificationReport};
