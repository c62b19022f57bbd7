//! Rule chain mapping features to an encoding and a solver.

use serde::Serialize;

use super::features::FeatureVector;
use super::registry::SolverConfig;
use super::SolveError;
use crate::encode::{EncodingKind, Precision};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Strategy {
    pub encoding: EncodingKind,
    pub precision: Precision,
    pub logic: String,
    pub solver: SolverConfig,
    /// Rules that fired, in order.
    pub rationale: Vec<String>,
}

pub const RULE_BIT_LEVEL: &str = "rule 1: bit-level operators or overflow claims require bit-vectors";
pub const RULE_CERTIFIED: &str = "rule 2: linear and certified in-width, integers are exact";
pub const RULE_DEFAULT: &str = "rule 3: default to bit-vectors";

pub fn logic_for(kind: EncodingKind, fv: &FeatureVector) -> &'static str {
    match kind {
        EncodingKind::Bv => "QF_ABV",
        EncodingKind::Int if fv.linear_only => "QF_AUFLIA",
        EncodingKind::Int => "QF_AUFNIA",
    }
}

/// Whether routing permits the integer encoding at all.
pub fn int_allowed(fv: &FeatureVector) -> bool {
    fv.bitwise_ops == 0 && fv.shifts == 0 && !fv.has_overflow_claims
}

fn pick(kind: EncodingKind, fv: &FeatureVector, available: &[SolverConfig]) -> Option<SolverConfig> {
    let logic = logic_for(kind, fv);
    available.iter().find(|s| s.can_solve(logic, fv.nondet_bits_total)).cloned()
}

pub fn select_strategy(fv: &FeatureVector, available: &[SolverConfig]) -> Result<Strategy, SolveError> {
    let (kind, precision, rule) = if !int_allowed(fv) {
        (EncodingKind::Bv, Precision::Precise, RULE_BIT_LEVEL)
    } else if fv.linear_only && fv.in_width_certified {
        (EncodingKind::Int, Precision::Precise, RULE_CERTIFIED)
    } else {
        (EncodingKind::Bv, Precision::Precise, RULE_DEFAULT)
    };
    let mut rationale = vec![rule.to_string()];
    if let Some(solver) = pick(kind, fv, available) {
        return Ok(Strategy { encoding: kind, precision, logic: logic_for(kind, fv).into(), solver, rationale });
    }
    if kind == EncodingKind::Int {
        if let Some(solver) = pick(EncodingKind::Bv, fv, available) {
            rationale.push("no integer-capable solver, falling back to bit-vectors".into());
            return Ok(Strategy { encoding: EncodingKind::Bv, precision: Precision::Precise, logic: "QF_ABV".into(), solver, rationale });
        }
    }
    Err(SolveError::NoCapableSolver { logic: logic_for(kind, fv).into(), bits: fv.nondet_bits_total })
}

/// Every solver paired with every encoding routing permits. Integer
/// strategies are approximate unless certified.
pub fn portfolio_strategies(fv: &FeatureVector, available: &[SolverConfig]) -> Vec<Strategy> {
    let mut out = Vec::new();
    let int_precision = if fv.linear_only && fv.in_width_certified { Precision::Precise } else { Precision::Approximate };
    for s in available {
        if s.is_builtin() {
            if s.can_solve("QF_ABV", fv.nondet_bits_total) {
                out.push(Strategy {
                    encoding: EncodingKind::Bv,
                    precision: Precision::Precise,
                    logic: "QF_ABV".into(),
                    solver: s.clone(),
                    rationale: vec!["portfolio: exhaustive enumeration".into()],
                });
            }
            continue;
        }
        if s.supports_logic("QF_ABV") {
            out.push(Strategy {
                encoding: EncodingKind::Bv,
                precision: Precision::Precise,
                logic: "QF_ABV".into(),
                solver: s.clone(),
                rationale: vec!["portfolio: bit-vectors".into()],
            });
        }
        let logic = logic_for(EncodingKind::Int, fv);
        if int_allowed(fv) && s.supports_logic(logic) {
            out.push(Strategy {
                encoding: EncodingKind::Int,
                precision: int_precision,
                logic: logic.into(),
                solver: s.clone(),
                rationale: vec!["portfolio: integers".into()],
            });
        }
    }
    out
}
