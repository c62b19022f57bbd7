//! Counterexamples: construction from solver models and replay.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::interp::{self, InterpConfig, Outcome, TraceEntry};
use super::WitnessError;
use crate::frontend::ast::{Program, ScalarType, Span, UnwindingMode};
use crate::transform::ssa::{PropertyKind, SymKey};
use crate::vcgen::VerificationCondition;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CexInput {
    pub symbol: String,
    #[serde(rename = "type")]
    pub ty: ScalarType,
    pub value: i128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub vc_id: String,
    pub inputs: Vec<CexInput>,
    pub trace: Vec<TraceEntry>,
    pub kind: PropertyKind,
    /// Settings the counterexample was found under, used by replay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unwinding_mode: Option<UnwindingMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<BTreeSet<PropertyKind>>,
}

/// Parts of a VC id: entry function, claim span, kind and ordinal.
pub fn parse_vc_id(id: &str) -> Option<(String, Span, PropertyKind, usize)> {
    let mut parts = id.rsplitn(5, ':');
    let ord = parts.next()?.parse().ok()?;
    let kind = PropertyKind::from_name(parts.next()?)?;
    let col = parts.next()?.parse().ok()?;
    let line = parts.next()?.parse().ok()?;
    let func = parts.next()?.to_string();
    Some((func, Span::new(line, col), kind, ord))
}

/// Run the source program on a model of `vc` and package the trace.
pub fn extract_counterexample(
    p: &Program,
    vc: &VerificationCondition,
    model: &[(SymKey, i128)],
    cfg: &InterpConfig,
) -> Result<Counterexample, WitnessError> {
    let map: HashMap<&SymKey, i128> = model.iter().map(|(k, v)| (k, *v)).collect();
    let mut cfg = cfg.clone();
    cfg.record_trace = true;
    let run = interp::run(p, &vc.ssa.entry_function, &cfg, &|k| map.get(k).copied())?;
    let expected = vc.claim_key();
    match &run.outcome {
        Outcome::Violated(key) if *key == expected => {}
        other => {
            return Err(WitnessError::ReplayMismatch { vc_id: vc.id.clone(), outcome: format!("{other:?}") });
        }
    }
    let inputs = vc
        .symbols
        .iter()
        .map(|&i| {
            let s = &vc.ssa.nondet_symbols[i];
            CexInput { symbol: s.key.to_string(), ty: s.ty, value: s.ty.wrap(map.get(&s.key).copied().unwrap_or(0)) }
        })
        .collect();
    Ok(Counterexample {
        vc_id: vc.id.clone(),
        inputs,
        trace: run.trace,
        kind: vc.kind,
        bound: Some(cfg.k),
        unwinding_mode: Some(cfg.mode),
        checks: Some(cfg.checks.clone()),
    })
}

/// True iff running `p` on the counterexample inputs violates a claim with
/// the same span and kind.
pub fn replay(p: &Program, cex: &Counterexample, cfg: &InterpConfig) -> bool {
    let Some((entry, span, kind, _)) = parse_vc_id(&cex.vc_id) else { return false };
    let mut map: HashMap<SymKey, i128> = HashMap::new();
    for i in &cex.inputs {
        match i.symbol.parse::<SymKey>() {
            Ok(k) => {
                map.insert(k, i.value);
            }
            Err(_) => return false,
        }
    }
    match interp::run(p, &entry, cfg, &|k| map.get(k).copied()) {
        Ok(run) => matches!(run.outcome, Outcome::Violated(ref k) if k.span == span && k.kind == kind),
        Err(_) => false,
    }
}

/// Interpreter settings stored in a counterexample, with fallbacks.
pub fn replay_config(cex: &Counterexample, k: u32, mode: UnwindingMode, checks: &BTreeSet<PropertyKind>) -> InterpConfig {
    InterpConfig::new(cex.checks.clone().unwrap_or_else(|| checks.clone()), cex.unwinding_mode.unwrap_or(mode), cex.bound.unwrap_or(k))
}
