//! Exhaustive ground truth by enumeration of every input assignment.

use std::collections::{BTreeMap, BTreeSet};

use super::interp::{self, InterpConfig, Outcome};
use super::WitnessError;
use crate::frontend::ast::{Program, ScalarType, UnwindingMode};
use crate::transform::ssa::{PropertyKind, SymKey, Symbol};
use crate::vcgen::{prepare, ClaimKey};

pub const DEFAULT_BIT_BUDGET: u32 = 20;

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// Every claim of the lowered program.
    pub claims: BTreeSet<ClaimKey>,
    /// Violated claims with the first falsifying assignment in enumeration order.
    pub violated: BTreeMap<ClaimKey, Vec<(SymKey, i128)>>,
    pub assignments: u64,
}

impl OracleResult {
    pub fn is_violated(&self, key: &ClaimKey) -> bool {
        self.violated.contains_key(key)
    }
}

/// Decode assignment number `n`: the first symbol takes the most
/// significant bits.
pub fn decode(symbols: &[Symbol], mut n: u64) -> Vec<i128> {
    let mut out = vec![0; symbols.len()];
    for (i, s) in symbols.iter().enumerate().rev() {
        let w = s.ty.width();
        let bits = n & ((1u64 << w) - 1);
        n >>= w;
        out[i] = s.ty.from_bits(bits);
    }
    out
}

pub fn exhaustive_oracle(
    p: &Program,
    entry: &str,
    k: u32,
    mode: UnwindingMode,
    checks: &BTreeSet<PropertyKind>,
    bit_budget: u32,
) -> Result<OracleResult, WitnessError> {
    let ssa = prepare(crate::transform::lower(p, entry, k, mode)?, checks);
    let symbols = ssa.nondet_symbols.clone();
    let bits: u32 = symbols.iter().map(|s| s.ty.width()).sum();
    if bits > bit_budget {
        return Err(WitnessError::BitBudgetExceeded { bits, limit: bit_budget });
    }
    let claims: BTreeSet<ClaimKey> = ssa
        .claims()
        .map(|(_, s)| {
            let crate::transform::ssa::StepKind::Claim { kind, .. } = s.kind else { unreachable!() };
            ClaimKey { span: s.span, kind, ctx: s.ctx.clone() }
        })
        .collect();
    let cfg = InterpConfig::new(checks.clone(), mode, k);
    let index: BTreeMap<&SymKey, usize> = symbols.iter().enumerate().map(|(i, s)| (&s.key, i)).collect();
    let mut violated = BTreeMap::new();
    let total = 1u64 << bits;
    let mut n = 0;
    while n < total {
        let vals = decode(&symbols, n);
        let run = interp::run(p, entry, &cfg, &|key| index.get(key).map(|&i| vals[i]))?;
        if let Outcome::Violated(key) = run.outcome {
            violated.entry(key).or_insert_with(|| symbols.iter().map(|s| s.key.clone()).zip(vals.iter().copied()).collect());
            if violated.len() == claims.len() && claims.iter().all(|c| violated.contains_key(c)) {
                n += 1;
                break;
            }
        }
        n += 1;
    }
    Ok(OracleResult { claims, violated, assignments: n })
}

/// Types of the symbols, for display.
pub fn schedule_types(symbols: &[Symbol]) -> Vec<ScalarType> {
    symbols.iter().map(|s| s.ty).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_and_check;

    fn oracle(src: &str, k: u32, mode: UnwindingMode) -> OracleResult {
        let p = parse_and_check(src).unwrap();
        let checks = PropertyKind::ALL.into_iter().collect();
        exhaustive_oracle(&p, "main", k, mode, &checks, DEFAULT_BIT_BUDGET).unwrap()
    }

    #[test]
    fn square_49_is_reachable() {
        let r = oracle("void main(){ i8 x = nondet_i8(); assert(cast<i16>(x) * cast<i16>(x) != 49); }", 1, UnwindingMode::Assertion);
        let user: Vec<_> = r.violated.iter().filter(|(k, _)| k.kind == PropertyKind::UserAssert).collect();
        assert_eq!(user.len(), 1);
        // Enumeration order is by bit pattern: 7 (0x07) precedes -7 (0xF9).
        assert_eq!(user[0].1[0].1, 7);
    }

    #[test]
    fn unsigned_nonnegative_is_safe() {
        let r = oracle("void main(){ u8 x = nondet_u8(); assert(x >= 0); }", 1, UnwindingMode::Assertion);
        assert!(r.violated.is_empty());
        assert_eq!(r.assignments, 256);
    }

    #[test]
    fn small_bound_violates_unwinding() {
        let src = "void main(){ u8 n = nondet_u8(); u8 i = 0; u16 s = 0; while (i < n) { s = s + cast<u16>(i); i = i + 1; } }";
        let r = oracle(src, 3, UnwindingMode::Assertion);
        assert!(r.violated.keys().any(|k| k.kind == PropertyKind::UnwindingAssertion));
        let r = oracle(src, 3, UnwindingMode::Assumption);
        assert!(r.violated.is_empty());
    }

    #[test]
    fn budget_enforced() {
        let p = parse_and_check("void main(){ u32 x = nondet_u32(); assert(x != 1); }").unwrap();
        let e = exhaustive_oracle(&p, "main", 1, UnwindingMode::Assertion, &BTreeSet::new(), 20).unwrap_err();
        assert_eq!(e, WitnessError::BitBudgetExceeded { bits: 32, limit: 20 });
    }

    #[test]
    fn decode_is_msb_first() {
        let syms = vec![
            Symbol { key: SymKey::nondet(0, Default::default()), ty: ScalarType::U8 },
            Symbol { key: SymKey::nondet(1, Default::default()), ty: ScalarType::Bool },
        ];
        assert_eq!(decode(&syms, 0b1_0), vec![1, 0]);
        assert_eq!(decode(&syms, 0b0_1), vec![0, 1]);
    }
}
