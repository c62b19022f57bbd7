//! Lowering of a loop-free, call-free entry function to SSA steps.

use std::collections::{BTreeSet, HashMap};

use super::returns::{self, ReturnVars};
use super::ssa::*;
use super::TransformError;
use crate::frontend::ast::*;

pub const RET_VAR: &str = "$ret";
const DONE_VAR: &str = "$done";

pub fn to_ssa(p: &Program, entry: &str) -> Result<SsaProgram, TransformError> {
    let f = p.function(entry).ok_or_else(|| TransformError::UnknownEntry(entry.to_string()))?;
    let mut b = Builder {
        vars: Vec::new(),
        versions: HashMap::new(),
        env: HashMap::new(),
        steps: Vec::new(),
        symbols: Vec::new(),
        sym_index: HashMap::new(),
        guard: SsaExpr::bool(true),
        fresh: 0,
    };

    for g in &p.globals {
        let ctx = Ctx::default();
        match g.ty {
            VarType::Scalar(t) => b.define(&g.name, g.ty, SsaExpr::constant(g.initial_value(), t), g.span, &ctx),
            VarType::Array(..) => b.array_init(&g.name, g.ty, g.span, &ctx),
        };
    }
    for prm in &f.params {
        let s = b.symbol(SymKey::param(&prm.name), prm.ty);
        b.define(&prm.name, VarType::Scalar(prm.ty), SsaExpr::new(SsaExprKind::Sym(s), prm.ty), f.span, &Ctx::default());
    }

    let vars = ReturnVars { ret: f.ret.map(|t| (RET_VAR, t)), done: DONE_VAR };
    let (body, decls) = returns::eliminate(&f.body, &vars, f.span, &Ctx::default());
    b.block(&decls)?;
    b.block(&body)?;

    let globals_out = p.globals.iter().map(|g| (g.name.clone(), b.env[&g.name])).collect();
    let ret = f.ret.map(|_| b.env[RET_VAR]);
    Ok(SsaProgram {
        entry_function: entry.to_string(),
        vars: b.vars,
        steps: b.steps,
        nondet_symbols: b.symbols,
        bound_k: 1,
        globals_out,
        ret,
        instrumented: BTreeSet::new(),
    })
}

struct Builder {
    vars: Vec<VarInfo>,
    versions: HashMap<String, u32>,
    env: HashMap<String, VarId>,
    steps: Vec<SsaStep>,
    symbols: Vec<Symbol>,
    sym_index: HashMap<SymKey, usize>,
    guard: SsaExpr,
    fresh: u32,
}

impl Builder {
    fn new_version(&mut self, name: &str, ty: VarType) -> VarId {
        let v = self.versions.entry(name.to_string()).or_insert(0);
        let id = VarId(self.vars.len() as u32);
        self.vars.push(VarInfo { name: name.to_string(), version: *v, ty });
        *v += 1;
        self.env.insert(name.to_string(), id);
        id
    }

    fn push(&mut self, kind: StepKind, span: Span, ctx: &Ctx) {
        self.steps.push(SsaStep { kind, guard: self.guard.clone(), span, ctx: ctx.clone() });
    }

    fn define(&mut self, name: &str, ty: VarType, value: SsaExpr, span: Span, ctx: &Ctx) -> VarId {
        let var = self.new_version(name, ty);
        self.push(StepKind::Define { var, value }, span, ctx);
        var
    }

    fn array_init(&mut self, name: &str, ty: VarType, span: Span, ctx: &Ctx) -> VarId {
        let var = self.new_version(name, ty);
        self.push(StepKind::ArrayInit { var }, span, ctx);
        var
    }

    fn fresh_bool(&mut self, prefix: &str, value: SsaExpr, span: Span, ctx: &Ctx) -> SsaExpr {
        let name = format!("{prefix}{}", self.fresh);
        self.fresh += 1;
        let v = self.define(&name, VarType::Scalar(ScalarType::Bool), value, span, ctx);
        SsaExpr::var(v, ScalarType::Bool)
    }

    fn symbol(&mut self, key: SymKey, ty: ScalarType) -> usize {
        if let Some(&i) = self.sym_index.get(&key) {
            return i;
        }
        let i = self.symbols.len();
        self.symbols.push(Symbol { key: key.clone(), ty });
        self.sym_index.insert(key, i);
        i
    }

    fn lookup(&self, name: &str) -> Result<VarId, TransformError> {
        self.env.get(name).copied().ok_or_else(|| TransformError::InternalLowering(format!("unbound variable `{name}`")))
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<(), TransformError> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), TransformError> {
        let ctx = &s.ctx;
        match &s.kind {
            StmtKind::Decl { name, ty, init } => match ty {
                VarType::Scalar(t) => {
                    let value = match init {
                        Some(e) => self.expr(e, ctx)?,
                        None => SsaExpr::constant(0, *t),
                    };
                    self.define(name, *ty, value, s.span, ctx);
                }
                VarType::Array(..) => {
                    self.array_init(name, *ty, s.span, ctx);
                }
            },
            StmtKind::Assign { name, value } => {
                let ty = self.vars[self.lookup(name)?.0 as usize].ty;
                let value = self.expr(value, ctx)?;
                self.define(name, ty, value, s.span, ctx);
            }
            StmtKind::Store { array, index, value } => {
                let input = self.lookup(array)?;
                let index = self.expr(index, ctx)?;
                let value = self.expr(value, ctx)?;
                let ty = self.vars[input.0 as usize].ty;
                let out = self.new_version(array, ty);
                self.push(StepKind::ArrayStore { out, input, index, value }, s.span, ctx);
            }
            StmtKind::If { cond, then_body, else_body } => self.branch(cond, then_body, else_body, s.span, ctx)?,
            StmtKind::Assert(e) => {
                let prop = self.expr(e, ctx)?;
                self.push(StepKind::Claim { prop, kind: PropertyKind::UserAssert }, s.span, ctx);
            }
            StmtKind::Assume(e) => {
                let cond = self.expr(e, ctx)?;
                self.push(StepKind::Constraint { cond, origin: ConstraintOrigin::Assume }, s.span, ctx);
            }
            StmtKind::Unwind { cond, mode, .. } => {
                let c = SsaExpr::not(self.expr(cond, ctx)?);
                let kind = match mode {
                    UnwindingMode::Assertion => StepKind::Claim { prop: c, kind: PropertyKind::UnwindingAssertion },
                    UnwindingMode::Assumption => StepKind::Constraint { cond: c, origin: ConstraintOrigin::UnwindingAssumption },
                };
                self.push(kind, s.span, ctx);
            }
            StmtKind::While { .. } | StmtKind::For { .. } => {
                return Err(TransformError::InternalLowering(format!("loop survives at {}", s.span)))
            }
            StmtKind::Call(_) => return Err(TransformError::InternalLowering(format!("call survives at {}", s.span))),
            StmtKind::Return(_) => return Err(TransformError::InternalLowering(format!("return survives at {}", s.span))),
        }
        Ok(())
    }

    fn branch(&mut self, cond: &Expr, then_body: &[Stmt], else_body: &[Stmt], span: Span, ctx: &Ctx) -> Result<(), TransformError> {
        let c = self.expr(cond, ctx)?;
        let cv = self.fresh_bool("$c", c, span, ctx);
        let outer = self.guard.clone();
        let before = self.env.clone();

        let g_then = self.path_guard(&outer, cv.clone(), span, ctx);
        self.guard = g_then;
        self.block(then_body)?;
        let after_then = std::mem::replace(&mut self.env, before.clone());

        self.guard = outer.clone();
        if !else_body.is_empty() {
            let g_else = self.path_guard(&outer, SsaExpr::not(cv.clone()), span, ctx);
            self.guard = g_else;
            self.block(else_body)?;
            self.guard = outer;
        }
        let after_else = std::mem::take(&mut self.env);

        // Only names live before the branch survive the join.
        let mut names: Vec<&String> = before.keys().collect();
        names.sort_by_key(|n| before[*n]);
        let mut env = before.clone();
        for name in names {
            let t = after_then[name];
            let e = after_else[name];
            if t == e {
                env.insert(name.clone(), t);
                continue;
            }
            let ty = self.vars[t.0 as usize].ty;
            if self.vars[e.0 as usize].ty != ty {
                continue;
            }
            let target = self.new_version(name, ty);
            self.push(StepKind::Merge { target, cond: cv.clone(), then_v: t, else_v: e }, span, ctx);
            env.insert(name.clone(), target);
        }
        self.env = env;
        Ok(())
    }

    fn path_guard(&mut self, outer: &SsaExpr, local: SsaExpr, span: Span, ctx: &Ctx) -> SsaExpr {
        if outer.is_true() {
            return local;
        }
        let g = SsaExpr::and(outer.clone(), local);
        self.fresh_bool("$g", g, span, ctx)
    }

    fn expr(&mut self, e: &Expr, ctx: &Ctx) -> Result<SsaExpr, TransformError> {
        let kind = match &e.kind {
            ExprKind::Lit(v) => SsaExprKind::Const(*v),
            ExprKind::Var(n) => SsaExprKind::Var(self.lookup(n)?),
            ExprKind::Nondet(id) => SsaExprKind::Sym(self.symbol(SymKey::nondet(*id, ctx.clone()), e.ty)),
            ExprKind::Unary(op, a) => SsaExprKind::Unary(*op, Box::new(self.expr(a, ctx)?)),
            ExprKind::Binary(op, l, r) => {
                SsaExprKind::Binary { op: *op, l: Box::new(self.expr(l, ctx)?), r: Box::new(self.expr(r, ctx)?), span: e.span }
            }
            ExprKind::Index(a, i) => {
                let array = self.lookup(a)?;
                let VarType::Array(_, size) = self.vars[array.0 as usize].ty else {
                    return Err(TransformError::InternalLowering(format!("`{a}` is not an array")));
                };
                SsaExprKind::Select { array, index: Box::new(self.expr(i, ctx)?), size, span: e.span }
            }
            ExprKind::Cast(a) => SsaExprKind::Cast(Box::new(self.expr(a, ctx)?)),
            ExprKind::Call { callee, .. } => {
                return Err(TransformError::InternalLowering(format!("call to `{callee}` survives at {}", e.span)))
            }
        };
        Ok(SsaExpr::new(kind, e.ty))
    }
}
