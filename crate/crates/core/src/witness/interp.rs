//! Reference interpreter over the source AST.
//!
//! Runs with exact machine semantics, checks the enabled properties in the
//! order the instrumentation inserts them, and caps every loop at `k`
//! iterations the same way the unroller does. Call and loop contexts are
//! tracked so nondet draws and violated claims are keyed exactly like the
//! symbols and claims of the lowered program.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use serde::Serialize;

use super::eval::{ArrayValue, Value};
use crate::frontend::ast::*;
use crate::frontend::pretty;
use crate::semantics::{self, Semantics};
use crate::transform::ssa::{PropertyKind, SymKey};
use crate::vcgen::ClaimKey;

#[derive(Clone, Debug)]
pub struct InterpConfig {
    pub checks: BTreeSet<PropertyKind>,
    pub mode: UnwindingMode,
    pub k: u32,
    pub record_trace: bool,
}

impl InterpConfig {
    pub fn new(checks: BTreeSet<PropertyKind>, mode: UnwindingMode, k: u32) -> InterpConfig {
        InterpConfig { checks, mode, k, record_trace: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct TraceEntry {
    pub line: u32,
    pub col: u32,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<i128>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    Violated(ClaimKey),
    AssumptionFailed(Span),
    /// A loop needed more than `k` iterations (assumption mode).
    DepthExceeded(Span),
}

#[derive(Clone, Debug)]
pub struct Run {
    pub outcome: Outcome,
    pub ret: Option<i128>,
    pub globals: Vec<(String, Value)>,
    pub trace: Vec<TraceEntry>,
    /// Every input read, in order of first use.
    pub inputs: Vec<(SymKey, ScalarType, i128)>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InterpError {
    #[error("unknown entry function `{0}`")]
    UnknownEntry(String),
    #[error("malformed program: {0}")]
    Malformed(String),
}

enum Stop {
    Violated(ClaimKey),
    Assume(Span),
    Depth(Span),
    Error(InterpError),
}

type Flow<T> = Result<T, Stop>;

const TRACE_LIMIT: usize = 10_000;

pub fn run(p: &Program, entry: &str, cfg: &InterpConfig, inputs: &dyn Fn(&SymKey) -> Option<i128>) -> Result<Run, InterpError> {
    let f = p.function(entry).ok_or_else(|| InterpError::UnknownEntry(entry.to_string()))?;
    let mut it = Interp {
        prog: p,
        cfg,
        inputs,
        ctx: Ctx::default(),
        globals: HashMap::new(),
        frames: Vec::new(),
        trace: Vec::new(),
        used: Vec::new(),
        used_set: BTreeSet::new(),
        violation_recorded: false,
    };
    for g in &p.globals {
        let v = match g.ty {
            VarType::Scalar(_) => Value::Scalar(g.initial_value()),
            VarType::Array(_, n) => Value::Array(Rc::new(ArrayValue::zeros(n))),
        };
        it.globals.insert(g.name.clone(), v);
    }
    let mut frame = vec![HashMap::new()];
    for prm in &f.params {
        let v = it.input(SymKey::param(&prm.name), prm.ty);
        frame[0].insert(prm.name.clone(), (VarType::Scalar(prm.ty), Value::Scalar(v)));
    }
    it.frames.push(frame);
    let res = it.body(&f.body);
    let (outcome, ret) = match res {
        Ok(r) => (Outcome::Completed, r),
        Err(Stop::Violated(k)) => (Outcome::Violated(k), None),
        Err(Stop::Assume(s)) => (Outcome::AssumptionFailed(s), None),
        Err(Stop::Depth(s)) => (Outcome::DepthExceeded(s), None),
        Err(Stop::Error(e)) => return Err(e),
    };
    let globals = if outcome == Outcome::Completed {
        p.globals.iter().map(|g| (g.name.clone(), it.globals[&g.name].clone())).collect()
    } else {
        Vec::new()
    };
    Ok(Run { outcome, ret, globals, trace: it.trace, inputs: it.used })
}

type Scope = HashMap<String, (VarType, Value)>;

struct Interp<'a> {
    prog: &'a Program,
    cfg: &'a InterpConfig,
    inputs: &'a dyn Fn(&SymKey) -> Option<i128>,
    ctx: Ctx,
    globals: HashMap<String, Value>,
    frames: Vec<Vec<Scope>>,
    trace: Vec<TraceEntry>,
    used: Vec<(SymKey, ScalarType, i128)>,
    used_set: BTreeSet<SymKey>,
    violation_recorded: bool,
}

fn malformed(msg: String) -> Stop {
    Stop::Error(InterpError::Malformed(msg))
}

impl Interp<'_> {
    fn input(&mut self, key: SymKey, ty: ScalarType) -> i128 {
        let v = ty.wrap((self.inputs)(&key).unwrap_or(0));
        if self.used_set.insert(key.clone()) {
            self.used.push((key, ty, v));
        }
        v
    }

    fn scopes(&mut self) -> &mut Vec<Scope> {
        self.frames.last_mut().unwrap()
    }

    fn slot(&mut self, name: &str) -> Flow<&mut Value> {
        let frame = self.frames.last_mut().unwrap();
        for s in frame.iter_mut().rev() {
            if let Some((_, v)) = s.get_mut(name) {
                return Ok(v);
            }
        }
        self.globals.get_mut(name).ok_or_else(|| malformed(format!("unbound variable `{name}`")))
    }

    fn read(&mut self, name: &str) -> Flow<Value> {
        Ok(self.slot(name)?.clone())
    }

    fn violated(&self, span: Span, kind: PropertyKind) -> Stop {
        Stop::Violated(ClaimKey { span, kind, ctx: self.ctx.clone() })
    }

    fn check(&self, kind: PropertyKind, ok: bool, span: Span) -> Flow<()> {
        if !ok && (kind == PropertyKind::UserAssert || self.cfg.checks.contains(&kind)) {
            return Err(self.violated(span, kind));
        }
        Ok(())
    }

    fn record(&mut self, s: &Stmt, var: Option<String>, value: Option<i128>) {
        if self.cfg.record_trace && self.trace.len() < TRACE_LIMIT {
            self.trace.push(TraceEntry { line: s.span.line, col: s.span.col, text: pretty::header(s), var, value });
        }
    }

    fn body(&mut self, stmts: &[Stmt]) -> Flow<Option<i128>> {
        match self.block(stmts)? {
            Some(r) => Ok(r),
            None => Ok(None),
        }
    }

    /// `Some(ret)` when a `return` executed.
    fn block(&mut self, stmts: &[Stmt]) -> Flow<Option<Option<i128>>> {
        self.scopes().push(HashMap::new());
        let mut result = Ok(None);
        for s in stmts {
            match self.stmt(s) {
                Ok(None) => {}
                other => {
                    result = other;
                    break;
                }
            }
        }
        self.scopes().pop();
        result
    }

    fn stmt(&mut self, s: &Stmt) -> Flow<Option<Option<i128>>> {
        let r = self.stmt_inner(s);
        if let Err(Stop::Violated(_)) = &r {
            if !self.violation_recorded {
                self.violation_recorded = true;
                if !matches!(s.kind, StmtKind::Assert(_)) {
                    self.record(s, None, None);
                }
            }
        }
        r
    }

    fn stmt_inner(&mut self, s: &Stmt) -> Flow<Option<Option<i128>>> {
        match &s.kind {
            StmtKind::Decl { name, ty, init } => {
                let v = match (ty, init) {
                    (VarType::Scalar(_), Some(e)) => Value::Scalar(self.expr(e)?),
                    (VarType::Scalar(_), None) => Value::Scalar(0),
                    (VarType::Array(_, n), _) => Value::Array(Rc::new(ArrayValue::zeros(*n))),
                };
                let shown = match v {
                    Value::Scalar(x) => Some(x),
                    _ => None,
                };
                self.scopes().last_mut().unwrap().insert(name.clone(), (*ty, v));
                self.record(s, Some(name.clone()), shown);
            }
            StmtKind::Assign { name, value } => {
                let v = self.expr(value)?;
                *self.slot(name)? = Value::Scalar(v);
                self.record(s, Some(name.clone()), Some(v));
            }
            StmtKind::Store { array, index, value } => {
                let i = self.expr(index)?;
                let v = self.expr(value)?;
                let key = semantics::index_key(index.ty, i, Semantics::Exact);
                let slot = self.slot(array)?;
                let Value::Array(arr) = slot else { return Err(malformed(format!("`{array}` is not an array"))) };
                let n = arr.elems.len() as u32;
                self.check(PropertyKind::ArrayBounds, semantics::in_bounds(key, n), s.span)?;
                let Value::Array(arr) = self.slot(array)? else { unreachable!() };
                Rc::make_mut(arr).set(key, v);
                self.record(s, Some(format!("{array}[{key}]")), Some(v));
            }
            StmtKind::If { cond, then_body, else_body } => {
                let c = self.expr(cond)?;
                self.record(s, None, Some(c));
                return if c != 0 { self.block(then_body) } else { self.block(else_body) };
            }
            StmtKind::While { cond, body, loop_id } => return self.while_loop(s, cond, body, None, *loop_id),
            StmtKind::For { init, cond, step, body, loop_id } => {
                self.scopes().push(HashMap::new());
                let r = match self.stmt(init) {
                    Ok(_) => self.while_loop(s, cond, body, Some(step), *loop_id),
                    Err(e) => Err(e),
                };
                self.scopes().pop();
                return r;
            }
            StmtKind::Assert(e) => {
                let v = self.expr(e)?;
                self.record(s, None, None);
                self.check(PropertyKind::UserAssert, v != 0, s.span)?;
            }
            StmtKind::Assume(e) => {
                let v = self.expr(e)?;
                self.record(s, None, None);
                if v == 0 {
                    return Err(Stop::Assume(s.span));
                }
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => Some(self.expr(e)?),
                    None => None,
                };
                self.record(s, None, v);
                return Ok(Some(v));
            }
            StmtKind::Call(e) => {
                let ExprKind::Call { callee, args, site } = &e.kind else {
                    self.expr(e)?;
                    return Ok(None);
                };
                self.record(s, None, None);
                self.call(callee, args, *site)?;
            }
            StmtKind::Unwind { .. } => return Err(malformed("unwinding check in source program".into())),
        }
        Ok(None)
    }

    fn while_loop(&mut self, s: &Stmt, cond: &Expr, body: &[Stmt], step: Option<&Stmt>, id: u32) -> Flow<Option<Option<i128>>> {
        let base = self.ctx.clone();
        let mut j = 0u32;
        let result = loop {
            self.ctx = if j == 0 { base.clone() } else { base.with(CtxItem::Loop(id, j - 1)) };
            let c = match self.expr(cond) {
                Ok(c) => c,
                Err(e) => break Err(e),
            };
            if c == 0 {
                break Ok(None);
            }
            if j == self.cfg.k {
                break Err(match self.cfg.mode {
                    UnwindingMode::Assertion => self.violated(s.span, PropertyKind::UnwindingAssertion),
                    UnwindingMode::Assumption => Stop::Depth(s.span),
                });
            }
            self.ctx = base.with(CtxItem::Loop(id, j));
            match self.block(body) {
                Ok(None) => {}
                other => break other,
            }
            if let Some(st) = step {
                match self.stmt(st) {
                    Ok(None) => {}
                    other => break other,
                }
            }
            j += 1;
        };
        self.ctx = base;
        result
    }

    fn call(&mut self, callee: &str, args: &[Expr], site: u32) -> Flow<Option<i128>> {
        let f = self.prog.function(callee).ok_or_else(|| malformed(format!("unknown function `{callee}`")))?;
        let mut scope = HashMap::new();
        for (p, a) in f.params.iter().zip(args) {
            let v = self.expr(a)?;
            scope.insert(p.name.clone(), (VarType::Scalar(p.ty), Value::Scalar(v)));
        }
        let saved = self.ctx.clone();
        self.ctx = saved.with(CtxItem::Call(site));
        self.frames.push(vec![scope]);
        let r = self.body(&f.body);
        self.frames.pop();
        self.ctx = saved;
        r
    }

    fn expr(&mut self, e: &Expr) -> Flow<i128> {
        Ok(match &e.kind {
            ExprKind::Lit(v) => *v,
            ExprKind::Var(n) => match self.read(n)? {
                Value::Scalar(v) => v,
                _ => return Err(malformed(format!("`{n}` is not a scalar"))),
            },
            ExprKind::Nondet(id) => {
                let key = SymKey::nondet(*id, self.ctx.clone());
                self.input(key, e.ty)
            }
            ExprKind::Unary(op, a) => {
                let v = self.expr(a)?;
                semantics::eval_unary(*op, a.ty, v, Semantics::Exact).map_err(|x| malformed(x.to_string()))?
            }
            ExprKind::Binary(op, l, r) => {
                let a = self.expr(l)?;
                match op {
                    BinaryOp::And if a == 0 => return Ok(0),
                    BinaryOp::Or if a != 0 => return Ok(1),
                    _ => {}
                }
                let b = self.expr(r)?;
                let ty = l.ty;
                match op {
                    BinaryOp::Div => self.check(PropertyKind::DivByZero, b != 0, e.span)?,
                    BinaryOp::Rem => self.check(PropertyKind::ModByZero, b != 0, e.span)?,
                    BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul if ty.is_signed() => {
                        self.check(PropertyKind::SignedOverflow, semantics::no_overflow(*op, ty, a, b), e.span)?
                    }
                    BinaryOp::Shl | BinaryOp::Shr => {
                        let key = semantics::index_key(r.ty, b, Semantics::Exact);
                        self.check(PropertyKind::ShiftRange, semantics::in_bounds(key, ty.width()), e.span)?
                    }
                    _ => {}
                }
                semantics::eval_binary(*op, ty, a, b, Semantics::Exact).map_err(|x| malformed(x.to_string()))?
            }
            ExprKind::Index(arr, i) => {
                let iv = self.expr(i)?;
                let key = semantics::index_key(i.ty, iv, Semantics::Exact);
                let Value::Array(a) = self.read(arr)? else {
                    return Err(malformed(format!("`{arr}` is not an array")));
                };
                self.check(PropertyKind::ArrayBounds, semantics::in_bounds(key, a.elems.len() as u32), e.span)?;
                a.get(key)
            }
            ExprKind::Cast(a) => {
                let v = self.expr(a)?;
                semantics::eval_cast(a.ty, e.ty, v)
            }
            ExprKind::Call { callee, args, site } => match self.call(callee, args, *site)? {
                Some(v) => v,
                None => return Err(malformed(format!("void call to `{callee}` used as a value"))),
            },
        })
    }
}
