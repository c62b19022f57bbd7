#![allow(dead_code)]

pub mod gen;
pub mod smt;

use std::collections::{BTreeMap, BTreeSet};

use cvbmc::semantics::Semantics;
use cvbmc::transform::PropertyKind;
use cvbmc::vcgen::VerificationCondition;
use cvbmc::witness::eval::{eval_vc, VcEval};

pub fn all_checks() -> BTreeSet<PropertyKind> {
    PropertyKind::ALL.into_iter().collect()
}

/// Bits needed to enumerate every nondet symbol of the VC's program.
pub fn total_bits(vc: &VerificationCondition) -> u32 {
    vc.ssa.nondet_symbols.iter().map(|s| s.ty.width()).sum()
}

/// Every input vector over the VC's symbols, in bit-pattern order.
pub fn assignments(vc: &VerificationCondition) -> impl Iterator<Item = Vec<i128>> + '_ {
    let syms = &vc.ssa.nondet_symbols;
    (0..1u64 << total_bits(vc)).map(move |n| cvbmc::witness::oracle::decode(syms, n))
}

/// Is some input violating under `sem`? `None` if an operator has no
/// meaning under `sem`.
pub fn violable(vc: &VerificationCondition, sem: Semantics) -> Option<bool> {
    for inputs in assignments(vc) {
        match eval_vc(vc, &inputs, sem) {
            Ok(VcEval::Violated) => return Some(true),
            Ok(_) => {}
            Err(_) => return None,
        }
    }
    Some(false)
}

/// Input vector from a model of an encoded VC. Bit-vector values are read
/// in two's complement for signed types.
pub fn model_inputs(vc: &VerificationCondition, model: &BTreeMap<String, smt::Val>) -> Vec<i128> {
    vc.ssa
        .nondet_symbols
        .iter()
        .map(|s| {
            let name = format!("{}::{}", vc.ssa.entry_function, s.key);
            match model.get(&name) {
                Some(smt::Val::Bv(w, v)) if s.ty.is_signed() && v >> (w - 1) == 1 => *v as i128 - (1i128 << w),
                Some(v) => v.as_i128(),
                None => 0,
            }
        })
        .collect()
}
