//! Solver library for multistage robust unit commitment with energy storage.
//!
//! The problem is a two-layer game: binary commitment decisions are fixed
//! before any renewable output is observed, and continuous dispatch decisions
//! adapt stage by stage to the realized outputs inside a box uncertainty set.
//! The library decomposes it into a commitment master problem with
//! nonanticipative robust-envelope constraints, expanded by representative
//! scenario paths, and a chain of per-stage dispatch problems whose worst-case
//! cost-to-go functions are bracketed from below by supporting hyperplanes and
//! from above by convex combinations of evaluated candidate points.
//!
//! Three solve modes are provided:
//!
//! * `radp` — worst cases from a McCormick-relaxed linear program over the
//!   dualized upper-bound stage problem; fast, possibly sub-worst scenarios.
//! * `rddp` — exact worst cases (vertex enumeration or big-M MILP); converges
//!   to the exact worst-case cost for a fixed commitment.
//! * `rfr`  — envelope-only commitment loop without cost-to-go approximation.
//!
//! Everything solves through the embedded bounded-variable simplex in
//! [`lpsolve`]; no external solver is required.

pub mod driver;
pub mod eval;
pub mod fmt;
pub mod gen;
pub mod lower;
pub mod lpsolve;
pub mod model;
pub mod ucstage;
pub mod upper;
pub mod worstcase;

pub use driver::{run_radp, run_rddp, run_rfr, RunConfig, SolveReport};
pub use lpsolve::{LinearProgram, LpSolution, LpStatus, MixedProgram, SolverConfig};
pub use model::{CommitmentSchedule, SystemCase, UncertaintySet};

/// Library-level error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input file could not be parsed; carries location context when known.
    #[error("parse error: {0}")]
    Parse(String),
    /// A domain invariant was violated; names the offending component.
    #[error("invalid {component}: {reason}")]
    Invalid { component: String, reason: String },
    /// Network structure prevents the computation (e.g. disconnected graph).
    #[error("structural error: {0}")]
    Structural(String),
    /// A configured resource cap was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),
    /// Contract that should hold by construction was observed broken.
    #[error("internal consistency: {0}")]
    Internal(String),
    /// Underlying LP/MILP solver failure.
    #[error(transparent)]
    Solver(#[from] lpsolve::SolverError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
