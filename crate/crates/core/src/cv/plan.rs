//! Work planning: cache lookups and test-constrained instances.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::cache::{Cache, CacheKey, CachedVerdict};
use super::closure_hash;
use crate::frontend::ast::{BinaryOp, Program, ScalarType, Span};
use crate::pipeline::{self, EncodingChoice, Options};
use crate::transform::ssa::{SsaExpr, SsaExprKind};
use crate::vcgen::VerificationCondition;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestInput {
    pub ordinal: usize,
    pub value: i128,
}

/// Concrete values for some of a function's nondet symbols, numbered in
/// the order the lowered function first reads them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub function: String,
    pub inputs: Vec<TestInput>,
}

pub fn parse_tests(text: &str) -> Result<Vec<TestCase>, serde_json::Error> {
    serde_json::from_str(text)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    SkipCached,
    SkipEquivalent,
    Verify,
}

#[derive(Clone, Debug)]
pub enum VcWork {
    Cached(CachedVerdict),
    /// Constrained instances first, then the unconstrained one.
    Solve {
        constrained: Vec<VerificationCondition>,
    },
}

#[derive(Clone, Debug)]
pub struct PlannedVc {
    pub function: String,
    pub vc: VerificationCondition,
    pub key: Option<CacheKey>,
    pub work: VcWork,
}

#[derive(Clone, Debug, Default)]
pub struct ChangePlan {
    pub decisions: BTreeMap<String, Decision>,
    pub items: Vec<PlannedVc>,
    /// Per-function failures to lower; reported as unknown.
    pub failures: Vec<(String, String)>,
    pub notes: Vec<String>,
}

impl ChangePlan {
    /// Solver instances scheduled, before early exits.
    pub fn planned(&self) -> usize {
        self.items
            .iter()
            .map(|i| match &i.work {
                VcWork::Cached(_) => 0,
                VcWork::Solve { constrained } => constrained.len() + 1,
            })
            .sum()
    }

    pub fn cache_hits(&self) -> usize {
        self.items.iter().filter(|i| matches!(i.work, VcWork::Cached(_))).count()
    }
}

/// Encoding and solver names a verdict depends on.
fn routing(vc: &VerificationCondition, opts: &Options) -> Option<(String, String)> {
    let strategies = pipeline::strategies_for(vc, opts).ok()?;
    let solver = strategies.iter().map(|s| s.solver.name.as_str()).collect::<BTreeSet<_>>().into_iter().collect::<Vec<_>>().join(",");
    let encoding = match opts.encoding {
        EncodingChoice::Portfolio => "portfolio".to_string(),
        _ => strategies[0].encoding.to_string(),
    };
    Some((encoding, solver))
}

fn constraint(vc: &VerificationCondition, t: &TestCase) -> Result<Vec<SsaExpr>, String> {
    let syms = &vc.ssa.nondet_symbols;
    let mut out = Vec::new();
    for i in &t.inputs {
        let s = syms.get(i.ordinal).ok_or_else(|| format!("ordinal {} out of range ({} inputs)", i.ordinal, syms.len()))?;
        if !s.ty.contains(i.value) {
            return Err(format!("value {} out of range for {} input {}", i.value, s.ty, s.key));
        }
        let sym = SsaExpr::new(SsaExprKind::Sym(i.ordinal), s.ty);
        let eq = SsaExprKind::Binary {
            op: BinaryOp::Eq,
            l: Box::new(sym),
            r: Box::new(SsaExpr::constant(i.value, s.ty)),
            span: Span::default(),
        };
        out.push(SsaExpr::new(eq, ScalarType::Bool));
    }
    Ok(out)
}

/// Decide what to do for every impacted function and each of its VCs.
/// `equivalent` lists modified functions proven equivalent; they are
/// recorded as skipped unless something else pulled them into `impact`.
pub fn make_plan(
    new: &Program,
    impact: &BTreeSet<String>,
    equivalent: &BTreeSet<String>,
    cache: &Cache,
    tests: &[TestCase],
    opts: &Options,
) -> ChangePlan {
    let mut plan = ChangePlan::default();
    for f in equivalent.difference(impact) {
        plan.decisions.insert(f.clone(), Decision::SkipEquivalent);
    }
    for t in tests {
        if !impact.contains(&t.function) {
            plan.notes.push(format!("test for `{}` ignored: function not impacted", t.function));
        }
    }
    for f in impact {
        let vcs = match pipeline::generate(new, f, opts) {
            Ok(v) => v,
            Err(e) => {
                plan.failures.push((f.clone(), e.to_string()));
                plan.decisions.insert(f.clone(), Decision::Verify);
                continue;
            }
        };
        let hash = closure_hash(new, f);
        let mut all_cached = true;
        // Validate tests once per function against its first VC's symbols;
        // every VC of a function shares the symbol table.
        let mut valid: Vec<&TestCase> = Vec::new();
        if let Some(vc0) = vcs.first() {
            for (i, t) in tests.iter().enumerate().filter(|(_, t)| &t.function == f) {
                match constraint(vc0, t) {
                    Ok(_) => valid.push(t),
                    Err(e) => plan.notes.push(format!("test #{i} for `{f}` rejected: {e}")),
                }
            }
        }
        for vc in vcs {
            let key = match (hash, routing(&vc, opts)) {
                (Some(h), Some((encoding, solver))) => Some(CacheKey {
                    function_hash: h,
                    vc_id: vc.id.clone(),
                    bound: opts.k,
                    unwinding_mode: opts.mode,
                    encoding,
                    solver,
                    checks: opts.checks.clone(),
                }),
                _ => None,
            };
            let work = match key.as_ref().and_then(|k| cache.get(k)) {
                Some(e) => VcWork::Cached(e.verdict.clone()),
                None => {
                    all_cached = false;
                    let constrained = valid.iter().map(|t| vc.with_extra(constraint(&vc, t).expect("validated"))).collect();
                    VcWork::Solve { constrained }
                }
            };
            plan.items.push(PlannedVc { function: f.clone(), vc, key, work });
        }
        plan.decisions.insert(f.clone(), if all_cached { Decision::SkipCached } else { Decision::Verify });
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_and_check;
    use crate::solve::SolverConfig;

    const SRC: &str = "void f(){ u8 a = nondet_u8(); u8 b = nondet_u8(); assert(a != 1); assert(b != 2); assert(a + b != 7); }";

    fn opts() -> Options {
        Options::new(2, vec![SolverConfig::builtin(20)])
    }

    fn tc(inputs: &[(usize, i128)]) -> TestCase {
        TestCase { function: "f".into(), inputs: inputs.iter().map(|&(ordinal, value)| TestInput { ordinal, value }).collect() }
    }

    #[test]
    fn counting_rule_and_order() {
        let p = parse_and_check(SRC).unwrap();
        let impact = BTreeSet::from(["f".to_string()]);
        let plan = make_plan(&p, &impact, &BTreeSet::new(), &Cache::new(), &[tc(&[(0, 1)]), tc(&[(1, 9)])], &opts());
        assert_eq!(plan.items.len(), 3);
        assert_eq!(plan.planned(), 9);
        assert_eq!(plan.decisions["f"], Decision::Verify);
        let VcWork::Solve { constrained } = &plan.items[0].work else { panic!() };
        assert_eq!(constrained[0].extra.len(), plan.items[0].vc.extra.len() + 1);
    }

    #[test]
    fn bad_tests_are_rejected_with_a_note() {
        let p = parse_and_check(SRC).unwrap();
        let impact = BTreeSet::from(["f".to_string()]);
        let tests = [tc(&[(0, 300)]), tc(&[(5, 0)]), TestCase { function: "g".into(), inputs: vec![] }];
        let plan = make_plan(&p, &impact, &BTreeSet::new(), &Cache::new(), &tests, &opts());
        assert_eq!(plan.planned(), 3);
        assert_eq!(plan.notes.len(), 3, "{:?}", plan.notes);
    }

    #[test]
    fn warm_cache_means_no_work() {
        let p = parse_and_check(SRC).unwrap();
        let impact = BTreeSet::from(["f".to_string()]);
        let mut cache = Cache::new();
        for item in make_plan(&p, &impact, &BTreeSet::new(), &cache.clone(), &[], &opts()).items {
            cache.insert(item.key.unwrap(), CachedVerdict { status: crate::pipeline::Status::Safe, witness: None });
        }
        let plan = make_plan(&p, &impact, &BTreeSet::new(), &cache, &[], &opts());
        assert_eq!((plan.planned(), plan.cache_hits()), (0, 3));
        assert_eq!(plan.decisions["f"], Decision::SkipCached);
        let empty = make_plan(&p, &BTreeSet::new(), &BTreeSet::new(), &cache, &[], &opts());
        assert_eq!(empty.planned(), 0);
    }

    #[test]
    fn tests_file_format() {
        let t = parse_tests(r#"[{"function":"f","inputs":[{"ordinal":0,"value":5}]}]"#).unwrap();
        assert_eq!(t, vec![tc(&[(0, 5)])]);
    }
}
