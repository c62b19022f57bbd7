//! End-to-end checking of one entry function: lower, generate VCs, route,
//! solve and turn models into counterexamples.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::encode::{self, EncodingKind, Precision};
use crate::frontend::ast::{Program, UnwindingMode};
use crate::solve::strategy::{int_allowed, logic_for, portfolio_strategies};
use crate::solve::{self, extract_features, select_strategy, SolveStatus, SolverConfig, Strategy};
use crate::transform::{self, TransformError};
use crate::vcgen::{generate_vcs, prepare, PropertyKind, VerificationCondition};
use crate::witness::{extract_counterexample, Counterexample, InterpConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingChoice {
    Bv,
    Int,
    Auto,
    Portfolio,
}

impl EncodingChoice {
    pub fn name(self) -> &'static str {
        match self {
            EncodingChoice::Bv => "bv",
            EncodingChoice::Int => "int",
            EncodingChoice::Auto => "auto",
            EncodingChoice::Portfolio => "portfolio",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub k: u32,
    pub mode: UnwindingMode,
    pub checks: BTreeSet<PropertyKind>,
    pub encoding: EncodingChoice,
    pub solvers: Vec<SolverConfig>,
    pub force_approximate: bool,
    pub dump_smt: Option<PathBuf>,
    /// Worker budget. With one worker, reported timings are zero so output
    /// is reproducible byte for byte.
    pub jobs: usize,
}

impl Options {
    pub fn new(k: u32, solvers: Vec<SolverConfig>) -> Options {
        Options {
            k,
            mode: UnwindingMode::Assertion,
            checks: PropertyKind::ALL.into_iter().collect(),
            encoding: EncodingChoice::Auto,
            solvers,
            force_approximate: false,
            dump_smt: None,
            jobs: 1,
        }
    }

    pub fn interp_config(&self) -> InterpConfig {
        InterpConfig::new(self.checks.clone(), self.mode, self.k)
    }

    pub fn deterministic(&self) -> bool {
        self.jobs <= 1
    }

    pub fn millis(&self, d: Duration) -> u64 {
        if self.deterministic() {
            0
        } else {
            d.as_millis() as u64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Safe,
    Violation,
    Unknown,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Safe => "SAFE-up-to-k",
            Status::Violation => "VIOLATION",
            Status::Unknown => "UNKNOWN",
        }
    }

    /// Violation dominates unknown, which dominates safe.
    pub fn combine(self, other: Status) -> Status {
        self.max(other)
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Safe => 0,
            Status::Violation => 10,
            Status::Unknown => 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VcOutcome {
    pub vc_id: String,
    pub kind: PropertyKind,
    pub line: u32,
    pub col: u32,
    pub status: Status,
    pub precision: Precision,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoding: Option<EncodingKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
    pub rationale: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Counterexample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub solver_calls: u32,
    pub wall_time_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub function: String,
    pub bound: u32,
    pub unwinding_mode: UnwindingMode,
    pub checks: BTreeSet<PropertyKind>,
    pub encoding: EncodingChoice,
    pub status: Status,
    /// Some SAFE verdict rests on an approximate encoding.
    pub approximate: bool,
    pub vcs: Vec<VcOutcome>,
    pub wall_time_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("integer encoding refused for {0}: it has bit-level operators or overflow claims (use --force-approximate)")]
    IntRefused(String),
    #[error("{0}")]
    Io(String),
}

/// Lower `entry` and generate its verification conditions.
pub fn generate(p: &Program, entry: &str, opts: &Options) -> Result<Vec<VerificationCondition>, TransformError> {
    let ssa = transform::lower(p, entry, opts.k, opts.mode)?;
    Ok(generate_vcs(&prepare(ssa, &opts.checks)))
}

/// Strategies to run for one VC, or the reason there are none.
pub fn strategies_for(vc: &VerificationCondition, opts: &Options) -> Result<Vec<Strategy>, String> {
    let fv = extract_features(vc);
    let solvers = &opts.solvers;
    let fixed = |kind: EncodingKind, precision: Precision, why: &str| -> Result<Vec<Strategy>, String> {
        let logic = logic_for(kind, &fv);
        // The builtin solver decides exact semantics, which is not what a
        // requested integer encoding means.
        let solver = solvers
            .iter()
            .find(|s| s.can_solve(logic, fv.nondet_bits_total) && !(kind == EncodingKind::Int && s.is_builtin()))
            .ok_or_else(|| format!("no configured solver for {logic} with {} input bits", fv.nondet_bits_total))?;
        Ok(vec![Strategy { encoding: kind, precision, logic: logic.into(), solver: solver.clone(), rationale: vec![why.into()] }])
    };
    match opts.encoding {
        EncodingChoice::Auto => select_strategy(&fv, solvers).map(|s| vec![s]).map_err(|e| e.to_string()),
        EncodingChoice::Bv => fixed(EncodingKind::Bv, Precision::Precise, "requested: bit-vectors"),
        EncodingChoice::Int => {
            let precision =
                if int_allowed(&fv) && fv.linear_only && fv.in_width_certified { Precision::Precise } else { Precision::Approximate };
            fixed(EncodingKind::Int, precision, "requested: integers")
        }
        EncodingChoice::Portfolio => {
            let s = portfolio_strategies(&fv, solvers);
            if s.is_empty() {
                Err("no configured solver for any strategy".into())
            } else {
                Ok(s)
            }
        }
    }
}

fn dump(vc: &VerificationCondition, strategies: &[Strategy], opts: &Options) -> Result<(), String> {
    let Some(dir) = &opts.dump_smt else { return Ok(()) };
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let mut seen = BTreeSet::new();
    for s in strategies {
        if !seen.insert(s.encoding) {
            continue;
        }
        if let Ok(q) = encode::encode(vc, s.encoding, s.precision == Precision::Precise) {
            let name = format!("{}.{}.smt2", vc.id.replace([':', '/', '\\'], "_"), s.encoding);
            std::fs::write(dir.join(name), q.text).map_err(|e| format!("{}: {e}", dir.display()))?;
        }
    }
    Ok(())
}

/// Solve one VC and, on a violation, build the counterexample.
pub fn check_vc(p: &Program, vc: &VerificationCondition, opts: &Options) -> VcOutcome {
    let start = Instant::now();
    let mut out = VcOutcome {
        vc_id: vc.id.clone(),
        kind: vc.kind,
        line: vc.span.line,
        col: vc.span.col,
        status: Status::Unknown,
        precision: Precision::Precise,
        encoding: None,
        solver: None,
        rationale: Vec::new(),
        witness: None,
        reason: None,
        solver_calls: 0,
        wall_time_ms: 0,
    };
    let strategies = match strategies_for(vc, opts) {
        Ok(s) => s,
        Err(e) => {
            out.reason = Some(e);
            return out;
        }
    };
    if let Err(e) = dump(vc, &strategies, opts) {
        out.reason = Some(e);
        return out;
    }
    out.solver_calls = strategies.len() as u32;
    let result = if strategies.len() == 1 {
        out.rationale = strategies[0].rationale.clone();
        Ok(solve::run_strategy(vc, &strategies[0], &AtomicBool::new(false)))
    } else {
        out.rationale = vec![format!("portfolio of {} strategies", strategies.len())];
        solve::solve_portfolio(vc, &strategies, opts.jobs > 1)
    };
    match result {
        Err(e) => out.reason = Some(e.to_string()),
        Ok(r) => {
            out.encoding = Some(r.encoding);
            out.solver = Some(r.solver.clone());
            out.precision = r.precision;
            match r.status {
                SolveStatus::Unsat => out.status = Status::Safe,
                SolveStatus::Sat => {
                    let model = r.model.unwrap_or_default();
                    match extract_counterexample(p, vc, &model, &opts.interp_config()) {
                        Ok(cex) => {
                            out.status = Status::Violation;
                            out.witness = Some(cex);
                        }
                        Err(e) => out.reason = Some(e.to_string()),
                    }
                }
                s => out.reason = Some(r.message.unwrap_or_else(|| s.name().to_string())),
            }
        }
    }
    out.wall_time_ms = opts.millis(start.elapsed());
    out
}

/// Run `f` over `items` with up to `jobs` workers, keeping input order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(items.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("every slot filled")).collect()
}

/// Refuse a requested integer encoding where routing forbids it.
pub fn check_int_allowed(vcs: &[VerificationCondition], opts: &Options) -> Result<(), PipelineError> {
    if opts.encoding == EncodingChoice::Int && !opts.force_approximate {
        if let Some(vc) = vcs.iter().find(|vc| !int_allowed(&extract_features(vc))) {
            return Err(PipelineError::IntRefused(vc.id.clone()));
        }
    }
    Ok(())
}

pub fn verify(p: &Program, entry: &str, opts: &Options) -> Result<VerifyReport, PipelineError> {
    let start = Instant::now();
    let vcs = generate(p, entry, opts)?;
    check_int_allowed(&vcs, opts)?;
    let outcomes = parallel_map(&vcs, opts.jobs, |vc| check_vc(p, vc, opts));
    Ok(summarize(entry, opts, outcomes, start.elapsed()))
}

pub fn summarize(entry: &str, opts: &Options, vcs: Vec<VcOutcome>, elapsed: Duration) -> VerifyReport {
    let status = vcs.iter().fold(Status::Safe, |s, v| s.combine(v.status));
    let approximate = vcs.iter().any(|v| v.status == Status::Safe && v.precision == Precision::Approximate);
    VerifyReport {
        function: entry.into(),
        bound: opts.k,
        unwinding_mode: opts.mode,
        checks: opts.checks.clone(),
        encoding: opts.encoding,
        status,
        approximate,
        vcs,
        wall_time_ms: opts.millis(elapsed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_and_check;

    fn builtin_opts(k: u32) -> Options {
        Options::new(k, vec![SolverConfig::builtin(20)])
    }

    #[test]
    fn violation_with_witness() {
        let p = parse_and_check("void main(){ u8 x = nondet_u8(); assert(x != 255); }").unwrap();
        let r = verify(&p, "main", &builtin_opts(1)).unwrap();
        assert_eq!(r.status, Status::Violation);
        let w = r.vcs[0].witness.as_ref().unwrap();
        assert_eq!(w.inputs[0].value, 255);
    }

    #[test]
    fn safe_program() {
        let p = parse_and_check("void main(){ u8 x = nondet_u8(); u16 y = cast<u16>(x) + 1; assert(y > 0); }").unwrap();
        let r = verify(&p, "main", &builtin_opts(1)).unwrap();
        assert_eq!(r.status, Status::Safe);
        assert!(!r.approximate);
    }

    #[test]
    fn no_solver_is_unknown() {
        let p = parse_and_check("void main(){ u32 x = nondet_u32(); assert(x != 255); }").unwrap();
        let mut o = builtin_opts(1);
        o.encoding = EncodingChoice::Bv;
        let r = verify(&p, "main", &o).unwrap();
        assert_eq!(r.status, Status::Unknown);
        assert_eq!(r.status.exit_code(), 20);
    }

    #[test]
    fn int_refused_for_shifts() {
        let p = parse_and_check("void main(){ u8 x = nondet_u8(); assert((x >> 1) != 200); }").unwrap();
        let mut o = builtin_opts(1);
        o.encoding = EncodingChoice::Int;
        assert!(matches!(verify(&p, "main", &o), Err(PipelineError::IntRefused(_))));
    }

    #[test]
    fn parallel_map_keeps_order() {
        let v: Vec<u32> = (0..50).collect();
        assert_eq!(parallel_map(&v, 4, |x| x * 2), v.iter().map(|x| x * 2).collect::<Vec<_>>());
    }
}
