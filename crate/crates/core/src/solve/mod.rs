//! Feature extraction, strategy selection and solving.

pub mod enumerative;
pub mod external;
pub mod features;
pub mod portfolio;
pub mod registry;
pub mod strategy;

use std::sync::atomic::AtomicBool;
use std::time::{Duration, Instant};

use serde::Serialize;

pub use enumerative::solve_enumerative;
pub use external::solve_external;
pub use features::{extract_features, FeatureVector};
pub use portfolio::solve_portfolio;
pub use registry::{SolverConfig, SolverKind};
pub use strategy::{select_strategy, Strategy};

use crate::encode::{self, EncodingKind, Precision};
use crate::semantics::Semantics;
use crate::transform::ssa::SymKey;
use crate::vcgen::VerificationCondition;
use crate::witness::eval::{eval_vc, VcEval};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    SolverError,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Sat => "sat",
            SolveStatus::Unsat => "unsat",
            SolveStatus::Unknown => "unknown",
            SolveStatus::Timeout => "timeout",
            SolveStatus::SolverError => "solver-error",
        }
    }

    pub fn is_definitive(self) -> bool {
        matches!(self, SolveStatus::Sat | SolveStatus::Unsat)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Values of the VC's symbols; present iff `status` is sat.
    pub model: Option<Vec<(SymKey, i128)>>,
    pub precision: Precision,
    pub encoding: EncodingKind,
    pub solver: String,
    pub wall_time: Duration,
    /// Solver diagnostics for errors and rejected models.
    pub message: Option<String>,
}

impl SolveResult {
    pub fn failed(
        status: SolveStatus,
        solver: &str,
        encoding: EncodingKind,
        precision: Precision,
        msg: impl Into<String>,
        t: Duration,
    ) -> SolveResult {
        SolveResult { status, model: None, precision, encoding, solver: solver.into(), wall_time: t, message: Some(msg.into()) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("no configured solver can handle logic {logic} with {bits} input bits")]
    NoCapableSolver { logic: String, bits: u32 },
    #[error("{bits} input bits exceed the budget of {limit}")]
    BitBudgetExceeded { bits: u32, limit: u32 },
    #[error("every strategy failed: {}", .0.iter().map(|r| format!("{}/{}: {}", r.solver, r.encoding, r.status.name())).collect::<Vec<_>>().join(", "))]
    AllFailed(Vec<SolveResult>),
}

/// Does the model violate the claim under exact semantics?
pub fn model_replays(vc: &VerificationCondition, model: &[(SymKey, i128)]) -> bool {
    let mut inputs = vec![0; vc.ssa.nondet_symbols.len()];
    for (k, v) in model {
        if let Some(i) = vc.ssa.symbol_index(k) {
            inputs[i] = *v;
        }
    }
    matches!(eval_vc(vc, &inputs, Semantics::Exact), Ok(VcEval::Violated))
}

/// Run one strategy to completion or cancellation. Approximate sat answers
/// are checked against exact semantics and demoted to unknown when the
/// model does not violate the claim.
pub fn run_strategy(vc: &VerificationCondition, s: &Strategy, cancel: &AtomicBool) -> SolveResult {
    let start = Instant::now();
    let mut r = match &s.solver.kind {
        SolverKind::BuiltinEnumerative { limit_bits } => match solve_enumerative(vc, *limit_bits, cancel, Some(start + s.solver.timeout)) {
            Ok(r) => r,
            Err(e) => SolveResult::failed(
                SolveStatus::SolverError,
                &s.solver.name,
                EncodingKind::Bv,
                Precision::Precise,
                e.to_string(),
                start.elapsed(),
            ),
        },
        SolverKind::External { .. } => match encode::encode(vc, s.encoding, s.precision == Precision::Precise) {
            Ok(q) => solve_external(&q, &s.solver, cancel),
            Err(e) => {
                SolveResult::failed(SolveStatus::SolverError, &s.solver.name, s.encoding, s.precision, e.to_string(), start.elapsed())
            }
        },
    };
    if r.status == SolveStatus::Sat && r.precision == Precision::Approximate {
        let ok = r.model.as_deref().is_some_and(|m| model_replays(vc, m));
        if !ok {
            r.status = SolveStatus::Unknown;
            r.model = None;
            r.message = Some("approximate model does not violate the claim under exact semantics".into());
        }
    }
    r
}
