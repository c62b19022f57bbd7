//! Call inlining. Each call site gets a fresh copy of the callee whose
//! statements carry the site in their context, so copies stay distinct
//! after unrolling.

use std::collections::BTreeMap;

use super::returns::{self, ReturnVars};
use super::TransformError;
use crate::frontend::ast::*;
use crate::frontend::typeck::local_decls;

pub fn inline_calls(p: &Program, entry: &str) -> Result<Program, TransformError> {
    let f = p.function(entry).ok_or_else(|| TransformError::UnknownEntry(entry.to_string()))?;
    let mut has_call = false;
    f.walk_exprs(&mut |e| has_call |= matches!(e.kind, ExprKind::Call { .. }));
    if !has_call {
        return Ok(p.clone());
    }
    let mut inl = Inliner { prog: p, copies: 0, temps: 0, stack: vec![entry.to_string()] };
    let body = inl.block(&f.body)?;
    let mut out = p.clone();
    out.function_mut(entry).unwrap().body = body;
    Ok(out)
}

struct Inliner<'p> {
    prog: &'p Program,
    copies: u32,
    temps: u32,
    stack: Vec<String>,
}

fn no_calls(s: &Stmt) -> bool {
    let mut found = false;
    s.walk(&mut |t| {
        for e in t.exprs() {
            found |= e.contains_call();
        }
        if let StmtKind::For { init, step, .. } = &t.kind {
            for e in init.exprs().into_iter().chain(step.exprs()) {
                found |= e.contains_call();
            }
        }
    });
    !found
}

impl Inliner<'_> {
    fn temp(&mut self) -> String {
        let n = self.temps;
        self.temps += 1;
        format!("$t{n}")
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Vec<Stmt>, TransformError> {
        let mut out = Vec::new();
        for s in stmts {
            self.stmt(s, &mut out)?;
        }
        Ok(out)
    }

    fn stmt(&mut self, s: &Stmt, out: &mut Vec<Stmt>) -> Result<(), TransformError> {
        if no_calls(s) {
            out.push(s.clone());
            return Ok(());
        }
        let ctx = &s.ctx;
        let mk = |kind| Stmt::with_ctx(kind, s.span, ctx.clone());
        match &s.kind {
            StmtKind::Decl { name, ty, init } => {
                let init = match init {
                    Some(e) => Some(self.value(e, ctx, out)?),
                    None => None,
                };
                out.push(mk(StmtKind::Decl { name: name.clone(), ty: *ty, init }));
            }
            StmtKind::Assign { name, value } => {
                let value = self.value(value, ctx, out)?;
                out.push(mk(StmtKind::Assign { name: name.clone(), value }));
            }
            StmtKind::Store { array, index, value } => {
                let mut pi = Vec::new();
                let mut index = self.value(index, ctx, &mut pi)?;
                let mut pv = Vec::new();
                let value = self.value(value, ctx, &mut pv)?;
                if !pv.is_empty() {
                    index = self.materialize(index, ctx, &mut pi);
                }
                out.extend(pi);
                out.extend(pv);
                out.push(mk(StmtKind::Store { array: array.clone(), index, value }));
            }
            StmtKind::If { cond, then_body, else_body } => {
                let cond = self.value(cond, ctx, out)?;
                let then_body = self.block(then_body)?;
                let else_body = self.block(else_body)?;
                out.push(mk(StmtKind::If { cond, then_body, else_body }));
            }
            StmtKind::While { cond, body, loop_id } => {
                let mut body = self.block(body)?;
                if cond.contains_call() {
                    // pre; t = c; while (t) { body; pre'; t = c'; }
                    let c = self.value(cond, ctx, out)?;
                    let t = self.temp();
                    out.push(Stmt::with_ctx(
                        StmtKind::Decl { name: t.clone(), ty: VarType::Scalar(ScalarType::Bool), init: Some(c) },
                        cond.span,
                        ctx.clone(),
                    ));
                    let c2 = self.value(cond, ctx, &mut body)?;
                    body.push(Stmt::with_ctx(StmtKind::Assign { name: t.clone(), value: c2 }, cond.span, ctx.clone()));
                    out.push(mk(StmtKind::While { cond: Expr::var(t, ScalarType::Bool, cond.span), body, loop_id: *loop_id }));
                } else {
                    out.push(mk(StmtKind::While { cond: cond.clone(), body, loop_id: *loop_id }));
                }
            }
            StmtKind::For { init, cond, step, body, loop_id } => {
                let mut body = body.clone();
                body.push((**step).clone());
                self.stmt(init, out)?;
                let w = mk(StmtKind::While { cond: cond.clone(), body, loop_id: *loop_id });
                self.stmt(&w, out)?;
            }
            StmtKind::Assert(e) => {
                let e = self.value(e, ctx, out)?;
                out.push(mk(StmtKind::Assert(e)));
            }
            StmtKind::Assume(e) => {
                let e = self.value(e, ctx, out)?;
                out.push(mk(StmtKind::Assume(e)));
            }
            StmtKind::Return(e) => {
                let e = match e {
                    Some(e) => Some(self.value(e, ctx, out)?),
                    None => None,
                };
                out.push(mk(StmtKind::Return(e)));
            }
            StmtKind::Call(e) => {
                if let ExprKind::Call { callee, args, site } = &e.kind {
                    self.call(callee, args, *site, e.span, ctx, out)?;
                } else {
                    let e = self.value(e, ctx, out)?;
                    out.push(mk(StmtKind::Call(e)));
                }
            }
            StmtKind::Unwind { cond, mode, loop_id } => {
                let cond = self.value(cond, ctx, out)?;
                out.push(mk(StmtKind::Unwind { cond, mode: *mode, loop_id: *loop_id }));
            }
        }
        Ok(())
    }

    fn materialize(&mut self, e: Expr, ctx: &Ctx, out: &mut Vec<Stmt>) -> Expr {
        if matches!(e.kind, ExprKind::Lit(_)) {
            return e;
        }
        let t = self.temp();
        let (ty, span) = (e.ty, e.span);
        out.push(Stmt::with_ctx(StmtKind::Decl { name: t.clone(), ty: VarType::Scalar(ty), init: Some(e) }, span, ctx.clone()));
        Expr::var(t, ty, span)
    }

    /// Lower `e` to a call-free expression, emitting the statements that must
    /// run first into `out`.
    fn value(&mut self, e: &Expr, ctx: &Ctx, out: &mut Vec<Stmt>) -> Result<Expr, TransformError> {
        if !e.contains_call() {
            return Ok(e.clone());
        }
        let rebuild = |kind| Expr::new(kind, e.ty, e.span);
        Ok(match &e.kind {
            ExprKind::Lit(_) | ExprKind::Var(_) | ExprKind::Nondet(_) => e.clone(),
            ExprKind::Unary(op, a) => rebuild(ExprKind::Unary(*op, Box::new(self.value(a, ctx, out)?))),
            ExprKind::Cast(a) => rebuild(ExprKind::Cast(Box::new(self.value(a, ctx, out)?))),
            ExprKind::Index(arr, i) => rebuild(ExprKind::Index(arr.clone(), Box::new(self.value(i, ctx, out)?))),
            ExprKind::Binary(op, l, r) => {
                let mut pl = Vec::new();
                let l2 = self.value(l, ctx, &mut pl)?;
                let mut pr = Vec::new();
                let r2 = self.value(r, ctx, &mut pr)?;
                if pr.is_empty() {
                    out.extend(pl);
                    return Ok(rebuild(ExprKind::Binary(*op, Box::new(l2), Box::new(r2))));
                }
                if op.is_logical() {
                    // Short circuit: the right side's calls run only when needed.
                    out.extend(pl);
                    let t = self.temp();
                    out.push(Stmt::with_ctx(
                        StmtKind::Decl { name: t.clone(), ty: VarType::Scalar(ScalarType::Bool), init: Some(l2) },
                        e.span,
                        ctx.clone(),
                    ));
                    let tv = Expr::var(t.clone(), ScalarType::Bool, e.span);
                    let cond = if *op == BinaryOp::And { tv.clone() } else { Expr::not(tv.clone()) };
                    pr.push(Stmt::with_ctx(StmtKind::Assign { name: t, value: r2 }, e.span, ctx.clone()));
                    out.push(Stmt::with_ctx(StmtKind::If { cond, then_body: pr, else_body: vec![] }, e.span, ctx.clone()));
                    return Ok(tv);
                }
                let l2 = self.materialize(l2, ctx, &mut pl);
                out.extend(pl);
                out.extend(pr);
                rebuild(ExprKind::Binary(*op, Box::new(l2), Box::new(r2)))
            }
            ExprKind::Call { callee, args, site } => match self.call(callee, args, *site, e.span, ctx, out)? {
                Some(v) => v,
                None => return Err(TransformError::InternalLowering(format!("void call to `{callee}` used as a value"))),
            },
        })
    }

    fn call(
        &mut self,
        callee: &str,
        args: &[Expr],
        site: u32,
        span: Span,
        ctx: &Ctx,
        out: &mut Vec<Stmt>,
    ) -> Result<Option<Expr>, TransformError> {
        let f =
            self.prog.function(callee).ok_or_else(|| TransformError::InternalLowering(format!("call to unknown function `{callee}`")))?;
        if self.stack.iter().any(|s| s == callee) {
            return Err(TransformError::Recursion(callee.to_string()));
        }
        if f.params.len() != args.len() {
            return Err(TransformError::InternalLowering(format!("arity mismatch calling `{callee}`")));
        }
        let n = self.copies;
        self.copies += 1;
        let prefix = format!("{callee}${n}::");
        let locals: BTreeMap<String, VarType> = local_decls(f);

        // Arguments are evaluated left to right in the caller's context.
        for (p, a) in f.params.iter().zip(args) {
            let v = self.value(a, ctx, out)?;
            out.push(Stmt::with_ctx(
                StmtKind::Decl { name: format!("{prefix}{}", p.name), ty: VarType::Scalar(p.ty), init: Some(v) },
                a.span,
                ctx.clone(),
            ));
        }

        let inner = ctx.with(CtxItem::Call(site));
        let mut body = f.body.clone();
        for s in &mut body {
            s.walk_mut(&mut |t| {
                t.ctx = t.ctx.union(&inner);
                rename_stmt(t, &locals, &prefix);
            });
        }
        let ret_name = format!("$ret_{n}");
        let done_name = format!("$done_{n}");
        let vars = ReturnVars { ret: f.ret.map(|t| (ret_name.as_str(), t)), done: &done_name };
        let (body, decls) = returns::eliminate(&body, &vars, span, &inner);
        out.extend(decls);
        self.stack.push(callee.to_string());
        let lowered = self.block(&body);
        self.stack.pop();
        out.extend(lowered?);
        Ok(f.ret.map(|t| Expr::var(ret_name, t, span)))
    }
}

fn rename_stmt(s: &mut Stmt, locals: &BTreeMap<String, VarType>, prefix: &str) {
    let fix = |n: &mut String| {
        if locals.contains_key(n.as_str()) {
            *n = format!("{prefix}{n}");
        }
    };
    match &mut s.kind {
        StmtKind::Decl { name, .. } | StmtKind::Assign { name, .. } => fix(name),
        StmtKind::Store { array, .. } => fix(array),
        _ => {}
    }
    for e in s.exprs_mut() {
        e.walk_mut(&mut |x| match &mut x.kind {
            ExprKind::Var(n) | ExprKind::Index(n, _) => fix(n),
            _ => {}
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_and_check, pretty};

    fn inlined(src: &str) -> String {
        let p = parse_and_check(src).unwrap();
        let q = inline_calls(&p, "main").unwrap();
        pretty::function(q.function("main").unwrap())
    }

    #[test]
    fn substitution() {
        let out = inlined("u8 f(u8 x){ return x + 1; } void main(){ u8 y = f(3); }");
        assert_eq!(out, "void main() {\n    u8 f$0::x = 3;\n    u8 $ret_0;\n    $ret_0 = f$0::x + 1;\n    u8 y = $ret_0;\n}\n");
    }

    #[test]
    fn two_sites_two_copies() {
        let out = inlined("u8 f(u8 x){ u8 t = x; return t; } void main(){ u8 a = f(1); u8 b = f(2); }");
        assert!(out.contains("f$0::t") && out.contains("f$1::t"), "{out}");
    }

    #[test]
    fn identity_without_calls() {
        let p = parse_and_check("void main(){ u8 x = 1; while (x < 3) { x = x + 1; } }").unwrap();
        assert_eq!(inline_calls(&p, "main").unwrap(), p);
    }

    #[test]
    fn unknown_entry() {
        let p = parse_and_check("void main(){}").unwrap();
        assert_eq!(inline_calls(&p, "nope"), Err(TransformError::UnknownEntry("nope".into())));
    }

    #[test]
    fn left_operand_materialized_before_call() {
        let out = inlined("u8 g = 0; u8 f(){ g = g + 1; return g; } void main(){ u8 y = g + f(); }");
        let t = out.find("u8 $t0 = g;").expect(&out);
        let call = out.find("g = g + 1;").unwrap();
        assert!(t < call, "{out}");
    }

    #[test]
    fn short_circuit_call() {
        let out = inlined("bool f(){ return true; } void main(){ u8 x = 1; bool b = x > 1 && f(); }");
        assert!(out.contains("if ($t0) {"), "{out}");
    }

    #[test]
    fn callee_statements_carry_the_site() {
        let p = parse_and_check("void f(){ assert(true); } void main(){ f(); f(); }").unwrap();
        let q = inline_calls(&p, "main").unwrap();
        let ctxs: Vec<Ctx> = q.function("main").unwrap().body.iter().map(|s| s.ctx.clone()).collect();
        assert_eq!(ctxs.len(), 2);
        assert_ne!(ctxs[0], ctxs[1]);
    }

    #[test]
    fn call_in_loop_condition() {
        let out = inlined("bool f(u8 x){ return x < 3; } void main(){ u8 i = 0; while (f(i)) { i = i + 1; } }");
        assert!(out.contains("while ($t0) {"), "{out}");
        assert!(out.contains("$t0 = $ret_1;"), "{out}");
    }
}
