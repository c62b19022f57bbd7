//! Type checking and the structural well-formedness rules of MiniC.
//!
//! There are no implicit conversions. Untyped integer literals take the type
//! demanded by their context, or `i32` when nothing constrains them.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::ast::*;
use super::callgraph::CallGraph;
use super::{Diagnostic, DiagnosticKind};
use crate::semantics::{self, Semantics};

struct Checker {
    globals: HashMap<String, VarType>,
    sigs: HashMap<String, (Vec<ScalarType>, Option<ScalarType>)>,
    diags: Vec<Diagnostic>,
    scopes: Vec<HashMap<String, VarType>>,
    ret: Option<ScalarType>,
}

fn is_untyped_int_lit(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Lit(_)) && e.ty != ScalarType::Bool
}

pub fn check_program(p: &mut Program) -> Result<(), Vec<Diagnostic>> {
    let mut ck = Checker { globals: HashMap::new(), sigs: HashMap::new(), diags: Vec::new(), scopes: Vec::new(), ret: None };

    for f in &p.functions {
        if ck.sigs.contains_key(&f.name) {
            ck.error(f.span, format!("function `{}` defined twice", f.name));
        }
        ck.sigs.insert(f.name.clone(), f.signature());
    }
    for g in &mut p.globals {
        if ck.globals.contains_key(&g.name) {
            ck.error(g.span, format!("global `{}` declared twice", g.name));
        }
        if ck.sigs.contains_key(&g.name) {
            ck.error(g.span, format!("global `{}` clashes with a function name", g.name));
        }
        ck.globals.insert(g.name.clone(), g.ty);
        if let Some(init) = &mut g.init {
            match g.ty {
                VarType::Array(..) => ck.error(g.span, "array declarations take no initializer"),
                VarType::Scalar(t) => {
                    ck.check(init, t);
                    match const_value(init) {
                        Some(v) => *init = Expr::lit(v, t, init.span),
                        None => ck.error(init.span, format!("initializer of global `{}` is not constant", g.name)),
                    }
                }
            }
        }
    }

    for f in &mut p.functions {
        ck.function(f);
    }

    if ck.diags.is_empty() {
        let cg = CallGraph::build(p);
        if let Some(cycle) = cg.find_cycle() {
            let span = p.function(&cycle[0]).map(|f| f.span).unwrap_or_default();
            ck.error(span, format!("recursive call cycle {}", cycle.join("→")));
        }
    }

    if ck.diags.is_empty() {
        Ok(())
    } else {
        Err(ck.diags)
    }
}

/// Value of a constant expression (no variables, calls or nondet).
fn const_value(e: &Expr) -> Option<i128> {
    match &e.kind {
        ExprKind::Lit(v) => Some(*v),
        ExprKind::Unary(op, a) => semantics::eval_unary(*op, a.ty, const_value(a)?, Semantics::Exact).ok(),
        ExprKind::Binary(op, a, b) => semantics::eval_binary(*op, a.ty, const_value(a)?, const_value(b)?, Semantics::Exact).ok(),
        ExprKind::Cast(a) => Some(semantics::eval_cast(a.ty, e.ty, const_value(a)?)),
        _ => None,
    }
}

fn ends_in_return(body: &[Stmt]) -> bool {
    match body.last().map(|s| &s.kind) {
        Some(StmtKind::Return(_)) => true,
        Some(StmtKind::If { then_body, else_body, .. }) => ends_in_return(then_body) && ends_in_return(else_body),
        _ => false,
    }
}

impl Checker {
    fn error(&mut self, span: Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(DiagnosticKind::Type, span, msg));
    }

    fn lookup(&self, name: &str) -> Option<VarType> {
        for s in self.scopes.iter().rev() {
            if let Some(t) = s.get(name) {
                return Some(*t);
            }
        }
        self.globals.get(name).copied()
    }

    fn declare(&mut self, name: &str, ty: VarType, span: Span) {
        if self.lookup(name).is_some() {
            self.error(span, format!("`{name}` is already declared in an enclosing scope"));
        }
        if self.sigs.contains_key(name) {
            self.error(span, format!("`{name}` clashes with a function name"));
        }
        self.scopes.last_mut().expect("scope").insert(name.to_string(), ty);
    }

    fn function(&mut self, f: &mut FunctionDef) {
        self.scopes = vec![HashMap::new()];
        self.ret = f.ret;
        let mut seen = HashSet::new();
        for p in &f.params {
            if !seen.insert(p.name.clone()) {
                self.error(f.span, format!("duplicate parameter `{}`", p.name));
            }
            self.declare(&p.name, VarType::Scalar(p.ty), f.span);
        }
        self.block(&mut f.body);
        if f.ret.is_some() && !ends_in_return(&f.body) {
            self.error(f.span, format!("function `{}` may finish without returning a value", f.name));
        }
        self.scopes.clear();
    }

    fn block(&mut self, body: &mut [Stmt]) {
        self.scopes.push(HashMap::new());
        for s in body {
            self.stmt(s);
        }
        self.scopes.pop();
    }

    fn scalar_var(&mut self, name: &str, span: Span) -> Option<ScalarType> {
        match self.lookup(name) {
            Some(VarType::Scalar(t)) => Some(t),
            Some(VarType::Array(..)) => {
                self.error(span, format!("array `{name}` used as a scalar"));
                None
            }
            None => {
                self.error(span, format!("undeclared name `{name}`"));
                None
            }
        }
    }

    fn array_var(&mut self, name: &str, span: Span) -> Option<(ScalarType, u32)> {
        match self.lookup(name) {
            Some(VarType::Array(t, n)) => Some((t, n)),
            Some(VarType::Scalar(_)) => {
                self.error(span, format!("`{name}` is not an array"));
                None
            }
            None => {
                self.error(span, format!("undeclared name `{name}`"));
                None
            }
        }
    }

    fn check_index(&mut self, idx: &mut Expr) {
        let t = self.synth(idx).unwrap_or(ScalarType::I32);
        if t.is_bool() {
            self.error(idx.span, "array index must be an integer");
        }
        self.check(idx, t);
    }

    fn stmt(&mut self, s: &mut Stmt) {
        let span = s.span;
        match &mut s.kind {
            StmtKind::Decl { name, ty, init } => {
                if let Some(e) = init {
                    match ty {
                        VarType::Array(..) => self.error(span, "array declarations take no initializer"),
                        VarType::Scalar(t) => self.check(e, *t),
                    }
                }
                let (name, ty) = (name.clone(), *ty);
                self.declare(&name, ty, span);
            }
            StmtKind::Assign { name, value } => {
                let t = self.scalar_var(name, span);
                self.check(value, t.unwrap_or(ScalarType::I32));
            }
            StmtKind::Store { array, index, value } => {
                let at = self.array_var(array, span);
                self.check_index(index);
                self.check(value, at.map(|a| a.0).unwrap_or(ScalarType::I32));
            }
            StmtKind::If { cond, then_body, else_body } => {
                self.check(cond, ScalarType::Bool);
                self.block(then_body);
                self.block(else_body);
            }
            StmtKind::While { cond, body, .. } => {
                self.check(cond, ScalarType::Bool);
                self.block(body);
            }
            StmtKind::For { init, cond, step, body, .. } => {
                self.scopes.push(HashMap::new());
                self.stmt(init);
                self.check(cond, ScalarType::Bool);
                self.block(body);
                self.stmt(step);
                self.scopes.pop();
            }
            StmtKind::Assert(e) | StmtKind::Assume(e) => self.check(e, ScalarType::Bool),
            StmtKind::Unwind { cond, .. } => self.check(cond, ScalarType::Bool),
            StmtKind::Return(e) => match (self.ret, e) {
                (Some(t), Some(e)) => self.check(e, t),
                (None, None) => {}
                (Some(t), None) => self.error(span, format!("missing return value of type {t}")),
                (None, Some(e)) => {
                    let sp = e.span;
                    self.error(sp, "void function returns a value");
                }
            },
            StmtKind::Call(e) => self.call(e, None),
        }
    }

    /// Type of `e` when it is determined without context.
    fn synth(&self, e: &Expr) -> Option<ScalarType> {
        match &e.kind {
            ExprKind::Lit(_) => (e.ty == ScalarType::Bool).then_some(ScalarType::Bool),
            ExprKind::Var(n) => self.lookup(n).map(|t| t.elem()),
            ExprKind::Index(n, _) => self.lookup(n).map(|t| t.elem()),
            ExprKind::Nondet(_) | ExprKind::Cast(_) => Some(e.ty),
            ExprKind::Call { callee, .. } => self.sigs.get(callee).and_then(|s| s.1),
            ExprKind::Unary(UnaryOp::Not, _) => Some(ScalarType::Bool),
            ExprKind::Unary(_, a) => self.synth(a),
            ExprKind::Binary(op, l, r) => {
                if op.is_comparison() || op.is_logical() {
                    Some(ScalarType::Bool)
                } else {
                    self.synth(l).or_else(|| self.synth(r))
                }
            }
        }
    }

    fn expect(&mut self, found: ScalarType, expected: ScalarType, span: Span) {
        if found != expected {
            self.error(span, format!("type mismatch: expected {expected}, found {found} (use cast<{expected}>(..))"));
        }
    }

    fn call(&mut self, e: &mut Expr, expected: Option<ScalarType>) {
        let span = e.span;
        let ExprKind::Call { callee, args, .. } = &mut e.kind else { unreachable!() };
        let Some((params, ret)) = self.sigs.get(callee).cloned() else {
            self.error(span, format!("call to undefined function `{callee}`"));
            return;
        };
        if params.len() != args.len() {
            self.error(span, format!("`{callee}` takes {} argument(s), {} given", params.len(), args.len()));
        }
        for (a, t) in args.iter_mut().zip(params.iter()) {
            self.check(a, *t);
        }
        match (expected, ret) {
            (Some(t), Some(r)) => {
                self.expect(r, t, span);
                e.ty = r;
            }
            (Some(_), None) => self.error(span, format!("void function `{callee}` used as a value")),
            (None, r) => e.ty = r.unwrap_or(ScalarType::Bool),
        }
    }

    /// Check `e` against `t`, filling in types bottom-up.
    fn check(&mut self, e: &mut Expr, t: ScalarType) {
        let span = e.span;
        match &mut e.kind {
            ExprKind::Lit(v) => {
                if e.ty == ScalarType::Bool {
                    self.expect(ScalarType::Bool, t, span);
                } else if t.is_bool() {
                    self.error(span, "integer literal used where bool is expected");
                } else if *v > (1i128 << t.width()) - 1 {
                    self.error(span, format!("literal {v} does not fit in {t}"));
                } else {
                    *v = t.wrap(*v);
                }
                e.ty = t;
            }
            ExprKind::Var(n) => {
                let n = n.clone();
                if let Some(vt) = self.scalar_var(&n, span) {
                    self.expect(vt, t, span);
                }
                e.ty = t;
            }
            ExprKind::Index(n, idx) => {
                let n = n.clone();
                if let Some((et, _)) = self.array_var(&n, span) {
                    self.expect(et, t, span);
                }
                self.check_index(idx);
                e.ty = t;
            }
            ExprKind::Nondet(_) => self.expect(e.ty, t, span),
            ExprKind::Cast(a) => {
                let from = self.synth(a).unwrap_or(ScalarType::I32);
                self.check(a, from);
                self.expect(e.ty, t, span);
            }
            ExprKind::Call { .. } => {
                self.call(e, Some(t));
                e.ty = t;
            }
            ExprKind::Unary(op, a) => {
                match op {
                    UnaryOp::Not => {
                        self.expect(ScalarType::Bool, t, span);
                        self.check(a, ScalarType::Bool);
                    }
                    _ => {
                        if t.is_bool() {
                            self.error(span, format!("operator `{}` needs an integer operand", op.symbol()));
                        }
                        self.check(a, t);
                    }
                }
                e.ty = t;
            }
            ExprKind::Binary(op, l, r) => {
                let op = *op;
                if op.is_logical() {
                    self.expect(ScalarType::Bool, t, span);
                    self.check(l, ScalarType::Bool);
                    self.check(r, ScalarType::Bool);
                } else if op.is_comparison() {
                    self.expect(ScalarType::Bool, t, span);
                    let ot = self.synth(l).or_else(|| self.synth(r)).unwrap_or(ScalarType::I32);
                    if ot.is_bool() && !matches!(op, BinaryOp::Eq | BinaryOp::Ne) {
                        self.error(span, format!("operator `{}` needs integer operands", op.symbol()));
                    }
                    self.check(l, ot);
                    self.check(r, ot);
                } else {
                    if t.is_bool() {
                        self.error(span, format!("operator `{}` needs integer operands", op.symbol()));
                    }
                    // Check operands with their own types so a mismatch is
                    // reported at the operand, not at the whole expression.
                    let lt = if is_untyped_int_lit(l) { t } else { self.synth(l).unwrap_or(t) };
                    self.check(l, lt);
                    let rt = if is_untyped_int_lit(r) { lt } else { self.synth(r).unwrap_or(lt) };
                    self.check(r, rt);
                    if lt != rt {
                        self.error(span, format!("operand types differ: {lt} {} {rt}", op.symbol()));
                    } else {
                        self.expect(lt, t, span);
                    }
                }
                e.ty = t;
            }
        }
    }
}

/// Names declared anywhere in a function body, with their types.
pub fn local_decls(f: &FunctionDef) -> BTreeMap<String, VarType> {
    let mut out = BTreeMap::new();
    for p in &f.params {
        out.insert(p.name.clone(), VarType::Scalar(p.ty));
    }
    f.walk_stmts(&mut |s| {
        if let StmtKind::Decl { name, ty, .. } = &s.kind {
            out.insert(name.clone(), *ty);
        }
    });
    out
}
