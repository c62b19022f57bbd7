//! Plan execution and the end-to-end driver.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::Serialize;

use super::cache::{Cache, CachedVerdict};
use super::plan::{make_plan, ChangePlan, Decision, TestCase, VcWork};
use super::{compute_impact, diff_versions, ChangeSet};
use crate::equiv::{self, EquivStatus, EquivVerdict};
use crate::frontend::ast::Program;
use crate::frontend::CallGraph;
use crate::pipeline::{self, Options, PipelineError, Status};
use crate::witness::Counterexample;

#[derive(Clone, Debug)]
pub struct CvConfig {
    pub opts: Options,
    /// Bound for equivalence checks; defaults to the verification bound.
    pub k_eq: Option<u32>,
}

impl CvConfig {
    pub fn new(opts: Options) -> CvConfig {
        CvConfig { opts, k_eq: None }
    }

    pub fn validate(&self) -> Result<(), CvError> {
        match self.k_eq {
            Some(k) if k < self.opts.k => Err(CvError::EquivBound { k_eq: k, k: self.opts.k }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CvError {
    #[error("equivalence bound {k_eq} is below the verification bound {k}; skipping would be unsound")]
    EquivBound { k_eq: u32, k: u32 },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PlanStats {
    /// Solver instances scheduled.
    pub planned: usize,
    /// Instances actually run.
    pub executed: usize,
    /// VCs answered from the cache.
    pub cache_hits: usize,
    pub solver_calls: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CvVerdict {
    pub function: String,
    pub vc_id: String,
    pub status: Status,
    pub cached: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Counterexample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CvReport {
    pub status: Status,
    pub changes: ChangeSet,
    pub equivalences: Vec<EquivVerdict>,
    pub decisions: BTreeMap<String, Decision>,
    pub plan_stats: PlanStats,
    pub verdicts: Vec<CvVerdict>,
    pub notes: Vec<String>,
    pub wall_time_ms: u64,
}

impl CvReport {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }
}

struct Executed {
    verdict: CvVerdict,
    instances: usize,
    solver_calls: u32,
}

fn execute(p: &Program, item: &super::plan::PlannedVc, opts: &Options) -> Executed {
    let mut verdict = CvVerdict {
        function: item.function.clone(),
        vc_id: item.vc.id.clone(),
        status: Status::Unknown,
        cached: false,
        witness: None,
        reason: None,
    };
    let (mut instances, mut solver_calls) = (0, 0);
    match &item.work {
        VcWork::Cached(c) => {
            verdict.status = c.status;
            verdict.witness = c.witness.clone();
            verdict.cached = true;
        }
        VcWork::Solve { constrained } => {
            // A constrained instance can only find bugs; its unsat says
            // nothing about the unconstrained VC.
            for vc in constrained {
                let o = pipeline::check_vc(p, vc, opts);
                instances += 1;
                solver_calls += o.solver_calls;
                if o.status == Status::Violation {
                    verdict.status = Status::Violation;
                    verdict.witness = o.witness;
                    return Executed { verdict, instances, solver_calls };
                }
            }
            let o = pipeline::check_vc(p, &item.vc, opts);
            instances += 1;
            solver_calls += o.solver_calls;
            verdict.status = o.status;
            verdict.witness = o.witness;
            verdict.reason = o.reason;
        }
    }
    Executed { verdict, instances, solver_calls }
}

/// Run every planned instance and write fresh definitive verdicts back
/// into the cache. Unknown verdicts are never cached.
pub fn run_plan(new: &Program, plan: &ChangePlan, cache: &mut Cache, opts: &Options) -> (Vec<CvVerdict>, PlanStats) {
    let mut stats = PlanStats { planned: plan.planned(), cache_hits: plan.cache_hits(), ..Default::default() };
    let done = pipeline::parallel_map(&plan.items, opts.jobs, |item| execute(new, item, opts));
    let mut verdicts = Vec::new();
    for (f, reason) in &plan.failures {
        verdicts.push(CvVerdict {
            function: f.clone(),
            vc_id: f.clone(),
            status: Status::Unknown,
            cached: false,
            witness: None,
            reason: Some(reason.clone()),
        });
    }
    for (item, e) in plan.items.iter().zip(done) {
        stats.executed += e.instances;
        stats.solver_calls += e.solver_calls;
        if !e.verdict.cached && e.verdict.status != Status::Unknown {
            if let Some(k) = &item.key {
                cache.insert(k.clone(), CachedVerdict { status: e.verdict.status, witness: e.verdict.witness.clone() });
            }
        }
        verdicts.push(e.verdict);
    }
    verdicts.sort_by(|a, b| (&a.function, &a.vc_id).cmp(&(&b.function, &b.vc_id)));
    (verdicts, stats)
}

/// Diff, gate on equivalence, plan and run.
pub fn run_cv(old: &Program, new: &Program, tests: &[TestCase], cache: &mut Cache, cfg: &CvConfig) -> Result<CvReport, CvError> {
    cfg.validate()?;
    let start = Instant::now();
    let opts = &cfg.opts;
    let changes = diff_versions(old, new);
    let mut eq_opts = opts.clone();
    eq_opts.k = cfg.k_eq.unwrap_or(opts.k);
    let equivalences = equiv::equivalences(old, new, &changes.modified_same_signature, &eq_opts)?;
    let impact = compute_impact(&changes, &equivalences, &CallGraph::build(new));
    let equivalent: BTreeSet<String> =
        equivalences.iter().filter(|(_, v)| v.status == EquivStatus::EquivalentUpToK).map(|(f, _)| f.clone()).collect();
    let plan = make_plan(new, &impact, &equivalent, cache, tests, opts);
    let (verdicts, plan_stats) = run_plan(new, &plan, cache, opts);
    let status = verdicts.iter().fold(Status::Safe, |s, v| s.combine(v.status));
    Ok(CvReport {
        status,
        changes,
        equivalences: equivalences.into_values().collect(),
        decisions: plan.decisions,
        plan_stats,
        verdicts,
        notes: plan.notes,
        wall_time_ms: opts.millis(start.elapsed()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cv::plan::TestInput;
    use crate::frontend::parse_and_check;
    use crate::solve::SolverConfig;

    fn cfg() -> CvConfig {
        CvConfig::new(Options::new(2, vec![SolverConfig::builtin(20)]))
    }

    const OLD: &str = "u8 f(u8 x){ return x + 1; } void g(){ u8 a = nondet_u8(); u8 r = f(a); assert(r != 0); } void h(){ assert(true); }";

    #[test]
    fn rerun_hits_cache() {
        let old = parse_and_check(OLD).unwrap();
        let new = parse_and_check(&OLD.replace("x + 1", "x + 2")).unwrap();
        let mut cache = Cache::new();
        let r = run_cv(&old, &new, &[], &mut cache, &cfg()).unwrap();
        assert_eq!(r.status, Status::Violation);
        assert_eq!(r.equivalences[0].status, EquivStatus::NotEquivalent);
        assert!(r.verdicts.iter().all(|v| v.function != "h"));
        assert!(r.plan_stats.executed > 0);
        let again = run_cv(&old, &new, &[], &mut cache, &cfg()).unwrap();
        assert_eq!(again.plan_stats.executed, 0);
        assert_eq!(again.status, Status::Violation);
        assert!(again.verdicts.iter().all(|v| v.cached));
    }

    #[test]
    fn equivalent_change_runs_nothing() {
        let old = parse_and_check(OLD).unwrap();
        let new = parse_and_check(&OLD.replace("x + 1", "1 + x")).unwrap();
        let r = run_cv(&old, &new, &[], &mut Cache::new(), &cfg()).unwrap();
        assert_eq!(r.status, Status::Safe);
        assert_eq!(r.plan_stats.executed, 0);
        assert_eq!(r.decisions["f"], Decision::SkipEquivalent);
    }

    #[test]
    fn constrained_instance_short_circuits() {
        let old = parse_and_check(OLD).unwrap();
        let new = parse_and_check(&OLD.replace("x + 1", "x + 2")).unwrap();
        let tests = [TestCase { function: "g".into(), inputs: vec![TestInput { ordinal: 0, value: 254 }] }];
        let r = run_cv(&old, &new, &tests, &mut Cache::new(), &cfg()).unwrap();
        let g = r.verdicts.iter().find(|v| v.function == "g").unwrap();
        assert_eq!(g.status, Status::Violation);
        assert_eq!(g.witness.as_ref().unwrap().inputs[0].value, 254);
        assert!(r.plan_stats.executed < r.plan_stats.planned);
    }

    #[test]
    fn low_equivalence_bound_is_rejected() {
        let mut c = cfg();
        c.k_eq = Some(1);
        let p = parse_and_check(OLD).unwrap();
        assert!(matches!(run_cv(&p, &p, &[], &mut Cache::new(), &c), Err(CvError::EquivBound { .. })));
    }
}
