//! Concrete execution: reference interpreter, counterexamples and the
//! exhaustive oracle.

pub mod cex;
pub mod eval;
pub mod interp;
pub mod oracle;

use std::collections::HashMap;

pub use cex::{extract_counterexample, replay, CexInput, Counterexample};
pub use interp::{InterpConfig, InterpError, Outcome, Run, TraceEntry};
pub use oracle::{exhaustive_oracle, OracleResult};

use crate::frontend::ast::Program;
use crate::transform::TransformError;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum WitnessError {
    #[error("expected {expected} inputs, got {got}")]
    InputArityMismatch { expected: usize, got: usize },
    #[error("model for {vc_id} does not reproduce its claim: {outcome}")]
    ReplayMismatch { vc_id: String, outcome: String },
    #[error("{bits} input bits exceed the budget of {limit}")]
    BitBudgetExceeded { bits: u32, limit: u32 },
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Run `entry` on inputs listed in the symbol order of the lowered program.
pub fn interpret(p: &Program, entry: &str, inputs: &[i128], cfg: &InterpConfig) -> Result<Run, WitnessError> {
    let ssa = crate::transform::lower(p, entry, cfg.k, cfg.mode)?;
    if ssa.nondet_symbols.len() != inputs.len() {
        return Err(WitnessError::InputArityMismatch { expected: ssa.nondet_symbols.len(), got: inputs.len() });
    }
    let map: HashMap<_, _> = ssa.nondet_symbols.iter().map(|s| s.key.clone()).zip(inputs.iter().copied()).collect();
    Ok(interp::run(p, entry, cfg, &|k| map.get(k).copied())?)
}
