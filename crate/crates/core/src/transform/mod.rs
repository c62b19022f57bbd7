//! Program lowering: call inlining, loop unrolling and conversion to SSA.

pub mod inline;
pub mod lower;
mod returns;
pub mod ssa;
pub mod unroll;

pub use inline::inline_calls;
pub use lower::to_ssa;
pub use ssa::*;
pub use unroll::unroll_loops;

use crate::frontend::ast::{Program, UnwindingMode};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("unknown entry function `{0}`")]
    UnknownEntry(String),
    #[error("unwinding bound must be positive")]
    NonPositiveBound,
    #[error("recursive call to `{0}`")]
    Recursion(String),
    #[error("internal lowering error: {0}")]
    InternalLowering(String),
}

/// Inline, unroll to `k` and convert the entry function to SSA.
pub fn lower(p: &Program, entry: &str, k: u32, mode: UnwindingMode) -> Result<SsaProgram, TransformError> {
    let inlined = inline_calls(p, entry)?;
    let mut only_entry = inlined.clone();
    only_entry.functions.retain(|f| f.name == entry);
    let unrolled = unroll_loops(&only_entry, k, mode)?;
    let mut ssa = to_ssa(&unrolled, entry)?;
    ssa.bound_k = k;
    Ok(ssa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_and_check;

    #[test]
    fn pipeline_is_single_assignment() {
        let p = parse_and_check(
            "u8 g = 1; u8 inc(u8 v){ if (v > 200) { return v; } return v + g; }
             void main(){ u8 i = 0; u8 s = 0; while (i < 3) { s = inc(s); i = i + 1; } assert(s >= 0); }",
        )
        .unwrap();
        for k in 1..5 {
            let s = lower(&p, "main", k, UnwindingMode::Assertion).unwrap();
            s.check_well_formed().unwrap();
            assert_eq!(s.bound_k, k);
        }
    }

    #[test]
    fn nondets_in_loops_get_one_symbol_per_iteration() {
        let p = parse_and_check("void main(){ u8 i = 0; while (i < 3) { i = i + nondet_u8(); } }").unwrap();
        let s = lower(&p, "main", 3, UnwindingMode::Assumption).unwrap();
        let keys: Vec<String> = s.nondet_symbols.iter().map(|x| x.key.to_string()).collect();
        assert_eq!(keys, vec!["nd0@l0.0", "nd0@l0.1", "nd0@l0.2"]);
    }
}
