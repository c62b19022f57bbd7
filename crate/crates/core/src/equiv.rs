//! Bounded partial equivalence of two versions of a function.
//!
//! The miter copies each version, with its transitive callees and the
//! globals they touch, under an `old$` or `new$` prefix. A driver takes the
//! function's parameters, calls both copies from the same call site and
//! asserts that return values and written globals agree. Nondets are shared
//! by order of appearance, so both copies see the same input stream.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::frontend::ast::*;
use crate::frontend::CallGraph;
use crate::pipeline::{self, Options, PipelineError, Status};
use crate::vcgen::PropertyKind;
use crate::witness::Counterexample;

pub const MITER_ENTRY: &str = "$miter";
const OLD: &str = "old";
const NEW: &str = "new";

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EquivError {
    #[error("function `{0}` not found in the {1} program")]
    MissingFunction(String, &'static str),
    #[error("signatures differ: {old} vs {new}")]
    SignatureMismatch { old: String, new: String },
    #[error("global `{0}` is written but missing or differently typed in one version")]
    GlobalMismatch(String),
}

#[derive(Clone, Debug)]
pub struct Miter {
    pub program: Program,
    pub entry: String,
    pub function: String,
    /// Globals whose final values are compared.
    pub compared_globals: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivStatus {
    EquivalentUpToK,
    NotEquivalent,
    Unknown,
    Incomparable,
}

impl EquivStatus {
    pub fn name(self) -> &'static str {
        match self {
            EquivStatus::EquivalentUpToK => "equivalent-up-to-k",
            EquivStatus::NotEquivalent => "not-equivalent",
            EquivStatus::Unknown => "unknown",
            EquivStatus::Incomparable => "incomparable",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            EquivStatus::EquivalentUpToK => 0,
            EquivStatus::NotEquivalent => 10,
            EquivStatus::Unknown | EquivStatus::Incomparable => 20,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivVerdict {
    pub function: String,
    pub status: EquivStatus,
    pub bound: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Counterexample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub solver_calls: u32,
}

fn sig_string(f: &FunctionDef) -> String {
    let params: Vec<&str> = f.params.iter().map(|p| p.ty.name()).collect();
    format!("{}({})", f.ret.map_or("void", |t| t.name()), params.join(", "))
}

fn closure(p: &Program, f: &str) -> Vec<String> {
    let mut names = vec![f.to_string()];
    names.extend(CallGraph::build(p).transitive_callees(f).into_iter().filter(|n| n != f));
    names
}

fn locals(f: &FunctionDef) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = f.params.iter().map(|p| p.name.clone()).collect();
    f.walk_stmts(&mut |s| {
        if let StmtKind::Decl { name, .. } = &s.kind {
            out.insert(name.clone());
        }
    });
    out
}

/// Globals assigned by `f` or anything it calls.
pub fn written_globals(p: &Program, f: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for name in closure(p, f) {
        let Some(def) = p.function(&name) else { continue };
        let local = locals(def);
        def.walk_stmts(&mut |s| {
            let target = match &s.kind {
                StmtKind::Assign { name, .. } => name,
                StmtKind::Store { array, .. } => array,
                _ => return,
            };
            if !local.contains(target) && p.global(target).is_some() {
                out.insert(target.clone());
            }
        });
    }
    out
}

/// Shared nondet numbering: the k-th nondet of the second copy reuses the
/// k-th id of the first when the types agree.
#[derive(Default)]
struct NondetTable {
    shared: Vec<ScalarType>,
    fresh: u32,
    frozen: bool,
}

impl NondetTable {
    fn id(&mut self, ordinal: usize, ty: ScalarType) -> u32 {
        if !self.frozen {
            self.shared.push(ty);
            return ordinal as u32;
        }
        if self.shared.get(ordinal) == Some(&ty) {
            return ordinal as u32;
        }
        self.fresh += 1;
        (self.shared.len() as u32) + self.fresh - 1
    }
}

struct Copier<'a> {
    prog: &'a Program,
    tag: &'static str,
    funcs: BTreeSet<String>,
    nondets: &'a mut NondetTable,
    nondet_ordinal: usize,
    next_site: u32,
    next_loop: u32,
    sites: HashMap<u32, u32>,
    loops: HashMap<u32, u32>,
}

impl Copier<'_> {
    fn name(&self, n: &str) -> String {
        format!("{}${n}", self.tag)
    }

    fn expr(&mut self, e: &mut Expr, local: &BTreeSet<String>) {
        match &mut e.kind {
            ExprKind::Var(n) | ExprKind::Index(n, _) if !local.contains(n.as_str()) => *n = self.name(n),
            ExprKind::Nondet(id) => {
                *id = self.nondets.id(self.nondet_ordinal, e.ty);
                self.nondet_ordinal += 1;
            }
            ExprKind::Call { callee, site, .. } => {
                if self.funcs.contains(callee.as_str()) {
                    *callee = self.name(callee);
                }
                let next = &mut self.next_site;
                *site = *self.sites.entry(*site).or_insert_with(|| {
                    *next += 1;
                    *next
                });
            }
            _ => {}
        }
        match &mut e.kind {
            ExprKind::Unary(_, a) | ExprKind::Cast(a) | ExprKind::Index(_, a) => self.expr(a, local),
            ExprKind::Binary(_, l, r) => {
                self.expr(l, local);
                self.expr(r, local);
            }
            ExprKind::Call { args, .. } => {
                for a in args {
                    self.expr(a, local);
                }
            }
            _ => {}
        }
    }

    fn loop_id(&mut self, id: &mut u32) {
        let next = &mut self.next_loop;
        *id = *self.loops.entry(*id).or_insert_with(|| {
            let v = *next;
            *next += 1;
            v
        });
    }

    /// Rewrite in evaluation order; assertions are dropped.
    fn block(&mut self, body: &[Stmt], local: &BTreeSet<String>) -> Vec<Stmt> {
        let mut out = Vec::new();
        for s in body {
            if matches!(s.kind, StmtKind::Assert(_)) {
                continue;
            }
            out.push(self.stmt(s, local));
        }
        out
    }

    fn stmt(&mut self, s: &Stmt, local: &BTreeSet<String>) -> Stmt {
        let mut s = s.clone();
        let global = |n: &String| !local.contains(n.as_str());
        match &mut s.kind {
            StmtKind::Decl { init, .. } => {
                if let Some(e) = init {
                    self.expr(e, local);
                }
            }
            StmtKind::Assign { name, value } => {
                self.expr(value, local);
                if global(name) {
                    *name = self.name(name);
                }
            }
            StmtKind::Store { array, index, value } => {
                self.expr(index, local);
                self.expr(value, local);
                if global(array) {
                    *array = self.name(array);
                }
            }
            StmtKind::If { cond, then_body, else_body } => {
                self.expr(cond, local);
                *then_body = self.block(then_body, local);
                *else_body = self.block(else_body, local);
            }
            StmtKind::While { cond, body, loop_id } => {
                self.loop_id(loop_id);
                self.expr(cond, local);
                *body = self.block(body, local);
            }
            StmtKind::For { init, cond, step, body, loop_id } => {
                self.loop_id(loop_id);
                **init = self.stmt(init, local);
                self.expr(cond, local);
                *body = self.block(body, local);
                **step = self.stmt(step, local);
            }
            StmtKind::Unwind { cond, loop_id, .. } => {
                self.loop_id(loop_id);
                self.expr(cond, local);
            }
            StmtKind::Assert(e) | StmtKind::Assume(e) | StmtKind::Call(e) => self.expr(e, local),
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e, local);
                }
            }
        }
        s
    }
}

/// Copy `f` and its callees (in call order) plus every global they may touch.
fn copy_version(p: &Program, f: &str, tag: &'static str, nondets: &mut NondetTable, out: &mut Program) {
    let names = closure(p, f);
    let mut cp = Copier {
        prog: p,
        tag,
        funcs: names.iter().cloned().collect(),
        nondets,
        nondet_ordinal: 0,
        next_site: 0,
        next_loop: 0,
        sites: HashMap::new(),
        loops: HashMap::new(),
    };
    // Callees follow first-call order from `f`, so corresponding helpers of
    // the two versions get corresponding ids.
    let mut order = vec![f.to_string()];
    let mut i = 0;
    while i < order.len() {
        if let Some(def) = cp.prog.function(&order[i]) {
            for c in def.callees() {
                if names.contains(&c) && !order.contains(&c) {
                    order.push(c);
                }
            }
        }
        i += 1;
    }
    for name in &order {
        let Some(def) = p.function(name) else { continue };
        let local = locals(def);
        let body = cp.block(&def.body, &local);
        out.functions.push(FunctionDef { name: cp.name(name), params: def.params.clone(), ret: def.ret, body, span: def.span });
    }
    for g in &p.globals {
        out.globals.push(Global { name: format!("{tag}${}", g.name), ..g.clone() });
    }
}

pub fn build_miter(old: &Program, new: &Program, function: &str) -> Result<Miter, EquivError> {
    let fo = old.function(function).ok_or_else(|| EquivError::MissingFunction(function.into(), OLD))?;
    let fnew = new.function(function).ok_or_else(|| EquivError::MissingFunction(function.into(), NEW))?;
    if fo.signature() != fnew.signature() {
        return Err(EquivError::SignatureMismatch { old: sig_string(fo), new: sig_string(fnew) });
    }
    let written: BTreeSet<String> = written_globals(old, function).into_iter().chain(written_globals(new, function)).collect();
    let mut compared = Vec::new();
    for g in &written {
        match (old.global(g), new.global(g)) {
            (Some(a), Some(b)) if a.ty == b.ty => compared.push((g.clone(), a.ty)),
            _ => return Err(EquivError::GlobalMismatch(g.clone())),
        }
    }

    let mut program = Program::default();
    let mut nondets = NondetTable::default();
    copy_version(old, function, OLD, &mut nondets, &mut program);
    nondets.frozen = true;
    copy_version(new, function, NEW, &mut nondets, &mut program);

    // Driver statements get distinct synthetic positions so each assert is
    // its own claim.
    let mut line = 0;
    let mut span = || {
        line += 1;
        Span::new(line, 1)
    };
    let args: Vec<Expr> = fo.params.iter().map(|p| Expr::var(p.name.clone(), p.ty, Span::default())).collect();
    let call = |tag: &str, sp: Span| Expr {
        kind: ExprKind::Call { callee: format!("{tag}${function}"), args: args.clone(), site: 0 },
        ty: fo.ret.unwrap_or(ScalarType::Bool),
        span: sp,
    };
    let mut body = Vec::new();
    match fo.ret {
        Some(t) => {
            for (tag, var) in [(OLD, "$r_old"), (NEW, "$r_new")] {
                let sp = span();
                body.push(Stmt::new(StmtKind::Decl { name: var.into(), ty: VarType::Scalar(t), init: Some(call(tag, sp)) }, sp));
            }
            let sp = span();
            let eq = Expr::binary(BinaryOp::Eq, Expr::var("$r_old", t, sp), Expr::var("$r_new", t, sp), ScalarType::Bool, sp);
            body.push(Stmt::new(StmtKind::Assert(eq), sp));
        }
        None => {
            for tag in [OLD, NEW] {
                let sp = span();
                body.push(Stmt::new(StmtKind::Call(call(tag, sp)), sp));
            }
        }
    }
    for (g, ty) in &compared {
        let (a, b) = (format!("{OLD}${g}"), format!("{NEW}${g}"));
        match *ty {
            VarType::Scalar(t) => {
                let sp = span();
                let eq = Expr::binary(BinaryOp::Eq, Expr::var(a, t, sp), Expr::var(b, t, sp), ScalarType::Bool, sp);
                body.push(Stmt::new(StmtKind::Assert(eq), sp));
            }
            VarType::Array(t, n) => {
                for i in 0..n {
                    let sp = span();
                    let idx = || Box::new(Expr::lit(i as i128, ScalarType::U32, sp));
                    let l = Expr::new(ExprKind::Index(a.clone(), idx()), t, sp);
                    let r = Expr::new(ExprKind::Index(b.clone(), idx()), t, sp);
                    body.push(Stmt::new(StmtKind::Assert(Expr::binary(BinaryOp::Eq, l, r, ScalarType::Bool, sp)), sp));
                }
            }
        }
    }
    program.functions.push(FunctionDef { name: MITER_ENTRY.into(), params: fo.params.clone(), ret: None, body, span: Span::default() });
    Ok(Miter {
        program,
        entry: MITER_ENTRY.into(),
        function: function.into(),
        compared_globals: compared.into_iter().map(|(g, _)| g).collect(),
    })
}

/// Options used on a miter: only the equality asserts are claims, and
/// executions longer than the bound are cut off rather than reported.
pub fn miter_options(opts: &Options) -> Options {
    let mut o = opts.clone();
    o.checks = BTreeSet::from([PropertyKind::UserAssert]);
    o.mode = UnwindingMode::Assumption;
    o
}

pub fn check_equivalence(m: &Miter, opts: &Options) -> Result<EquivVerdict, PipelineError> {
    let o = miter_options(opts);
    let report = pipeline::verify(&m.program, &m.entry, &o)?;
    let solver_calls = report.vcs.iter().map(|v| v.solver_calls).sum();
    let mut v =
        EquivVerdict { function: m.function.clone(), status: EquivStatus::Unknown, bound: o.k, witness: None, reason: None, solver_calls };
    match report.status {
        Status::Violation => {
            v.status = EquivStatus::NotEquivalent;
            v.witness = report.vcs.iter().find_map(|c| c.witness.clone());
        }
        Status::Safe if !report.approximate => v.status = EquivStatus::EquivalentUpToK,
        Status::Safe => v.reason = Some("only approximate encodings proved the miter".into()),
        Status::Unknown => v.reason = report.vcs.iter().find_map(|c| c.reason.clone()),
    }
    Ok(v)
}

/// Build and check in one step; construction failures are incomparable.
pub fn equivalence(old: &Program, new: &Program, function: &str, opts: &Options) -> Result<EquivVerdict, PipelineError> {
    match build_miter(old, new, function) {
        Ok(m) => check_equivalence(&m, opts),
        Err(e) => Ok(EquivVerdict {
            function: function.into(),
            status: EquivStatus::Incomparable,
            bound: opts.k,
            witness: None,
            reason: Some(e.to_string()),
            solver_calls: 0,
        }),
    }
}

/// Verdicts for several functions, keyed by name.
pub fn equivalences<'a>(
    old: &Program,
    new: &Program,
    functions: impl IntoIterator<Item = &'a String>,
    opts: &Options,
) -> Result<BTreeMap<String, EquivVerdict>, PipelineError> {
    functions.into_iter().map(|f| Ok((f.clone(), equivalence(old, new, f, opts)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_and_check;
    use crate::solve::SolverConfig;
    use crate::witness::cex::{replay, replay_config};

    fn opts() -> Options {
        Options::new(4, vec![SolverConfig::builtin(20)])
    }

    fn check(a: &str, b: &str, f: &str) -> EquivVerdict {
        equivalence(&parse_and_check(a).unwrap(), &parse_and_check(b).unwrap(), f, &opts()).unwrap()
    }

    #[test]
    fn doubling_is_equivalent() {
        let v = check("u8 f(u8 x){ return x + x; }", "u8 f(u8 x){ return 2 * x; }", "f");
        assert_eq!(v.status, EquivStatus::EquivalentUpToK, "{v:?}");
    }

    #[test]
    fn off_by_two_found_with_replayable_witness() {
        let old = parse_and_check("u8 f(u8 x){ return x + 1; }").unwrap();
        let new = parse_and_check("u8 f(u8 x){ return x - 1; }").unwrap();
        let m = build_miter(&old, &new, "f").unwrap();
        let v = check_equivalence(&m, &opts()).unwrap();
        assert_eq!(v.status, EquivStatus::NotEquivalent);
        let w = v.witness.unwrap();
        assert_eq!(w.inputs[0].symbol, "param!x");
        assert_eq!(w.inputs[0].value, 0);
        let o = miter_options(&opts());
        assert!(replay(&m.program, &w, &replay_config(&w, o.k, o.mode, &o.checks)));
    }

    #[test]
    fn signature_change_is_incomparable() {
        let v = check("u8 f(u8 x){ return x; }", "u8 f(u8 x, u8 y){ return x; }", "f");
        assert_eq!(v.status, EquivStatus::Incomparable);
        assert_eq!(v.status.exit_code(), 20);
    }

    #[test]
    fn written_global_is_compared() {
        let old = parse_and_check("u8 c; void f(u8 x){ c = c + x; }").unwrap();
        let new = parse_and_check("u8 c; void f(u8 x){ c = x + c + 1; }").unwrap();
        let m = build_miter(&old, &new, "f").unwrap();
        assert_eq!(m.compared_globals, vec!["c".to_string()]);
        let text = crate::frontend::pretty::program(&m.program);
        assert!(text.contains("assert(old$c == new$c)"), "{text}");
        assert_eq!(check_equivalence(&m, &opts()).unwrap().status, EquivStatus::NotEquivalent);
    }

    #[test]
    fn callees_and_loops_are_copied() {
        let src = "u8 g(u8 v){ return v * 2; } u8 f(u8 x){ u8 s = 0; for (u8 i = 0; i < 3; i = i + 1) { s = s + g(x); } return s; }";
        let alt = "u8 f(u8 x){ return x * 6; }";
        assert_eq!(check(src, src, "f").status, EquivStatus::EquivalentUpToK);
        assert_eq!(check(src, alt, "f").status, EquivStatus::EquivalentUpToK);
    }

    #[test]
    fn nondets_are_shared_and_asserts_ignored() {
        let a = "u8 f(){ u8 v = nondet_u8(); assert(v < 3); return v; }";
        let b = "u8 f(){ return nondet_u8(); }";
        assert_eq!(check(a, b, "f").status, EquivStatus::EquivalentUpToK);
    }
}
