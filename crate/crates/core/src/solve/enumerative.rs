//! Built-in solver: exhaustive enumeration under exact semantics.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use super::{SolveError, SolveResult, SolveStatus};
use crate::encode::{EncodingKind, Precision};
use crate::semantics::Semantics;
use crate::transform::ssa::Symbol;
use crate::vcgen::VerificationCondition;
use crate::witness::eval::{eval_vc_steps, VcEval};
use crate::witness::oracle::decode;

const CHECK_EVERY: u64 = 1024;

/// Enumerate all assignments of the VC's symbols, first symbol most
/// significant, and return the first one violating the property.
pub fn solve_enumerative(
    vc: &VerificationCondition,
    limit_bits: u32,
    cancel: &AtomicBool,
    deadline: Option<Instant>,
) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let bits = vc.input_bits();
    if bits > limit_bits {
        return Err(SolveError::BitBudgetExceeded { bits, limit: limit_bits });
    }
    let result = |status, model, msg: Option<&str>| SolveResult {
        status,
        model,
        precision: Precision::Precise,
        encoding: EncodingKind::Bv,
        solver: super::registry::BUILTIN_NAME.into(),
        wall_time: start.elapsed(),
        message: msg.map(str::to_string),
    };
    let steps = vc.relevant_steps();
    let symbols: Vec<Symbol> = vc.symbols.iter().map(|&i| vc.ssa.nondet_symbols[i].clone()).collect();
    let mut inputs = vec![0; vc.ssa.nondet_symbols.len()];
    for n in 0..1u64 << bits {
        if n % CHECK_EVERY == CHECK_EVERY - 1 {
            if cancel.load(Ordering::Relaxed) {
                return Ok(result(SolveStatus::Unknown, None, Some("cancelled")));
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return Ok(result(SolveStatus::Timeout, None, None));
            }
        }
        let vals = decode(&symbols, n);
        for (&i, &v) in vc.symbols.iter().zip(&vals) {
            inputs[i] = v;
        }
        match eval_vc_steps(vc, &steps, &inputs, Semantics::Exact) {
            Ok(VcEval::Violated) => {
                let model = symbols.iter().map(|s| s.key.clone()).zip(vals).collect();
                return Ok(result(SolveStatus::Sat, Some(model), None));
            }
            Ok(_) => {}
            Err(e) => return Ok(result(SolveStatus::SolverError, None, Some(&e.to_string()))),
        }
    }
    Ok(result(SolveStatus::Unsat, None, None))
}
