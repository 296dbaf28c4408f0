//! Minimization machinery on top of the scalar fiber analysis: Nehari-branch
//! and global minimizers, extremal-parameter upper bounds, the `(a, b)` phase
//! diagram, the `b -> 0` continuation and solution verification.

mod continuation;
mod extremal;
mod gate;
mod nehari;
mod phase;
mod starts;
mod verify;

pub use continuation::{ContinuationOutcome, ContinuationStep, continuation_b_to_zero};
pub use extremal::{ExtremalEstimate, ExtremalOptions, extremal_lambda, extremal_lambda0};
pub use gate::{GateReport, second_solution_gate};
pub use nehari::{
    Branch, NehariConfig, NehariResult, NehariSummary, global_minimize, nehari_minus_minimize,
};
pub use phase::{LambdaPolicy, PhaseCell, PhaseGrid, Regime, phase_diagram};
pub use starts::standard_starts;
pub use verify::{VerificationReport, verify_solution};

use crate::fiber::FiberError;
use crate::function::FunctionError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("the Nehari branch is empty along the start direction")]
    NehariEmptyAlongStart,
    #[error("invalid solver input: {0}")]
    Invalid(String),
    #[error("descent diverged (energy below -1e12)")]
    Diverged,
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error(transparent)]
    Function(#[from] FunctionError),
}
