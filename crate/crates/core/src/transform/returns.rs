//! Return elimination: `return e;` becomes an assignment to a result variable
//! plus a done flag that guards everything after it.

use crate::frontend::ast::*;

pub(crate) struct ReturnVars<'a> {
    pub ret: Option<(&'a str, ScalarType)>,
    pub done: &'a str,
}

fn has_return(stmts: &[Stmt]) -> bool {
    let mut found = false;
    for s in stmts {
        s.walk(&mut |t| found |= matches!(t.kind, StmtKind::Return(_)));
    }
    found
}

fn done_var(name: &str, span: Span) -> Expr {
    Expr::var(name, ScalarType::Bool, span)
}

/// Rewrite `body` so it contains no `return`. Returns the new body and the
/// declarations the rewritten body needs, which the caller places first.
pub(crate) fn eliminate(body: &[Stmt], vars: &ReturnVars, span: Span, ctx: &Ctx) -> (Vec<Stmt>, Vec<Stmt>) {
    let mut decls = Vec::new();
    if let Some((ret, ty)) = vars.ret {
        decls.push(Stmt::with_ctx(StmtKind::Decl { name: ret.to_string(), ty: VarType::Scalar(ty), init: None }, span, ctx.clone()));
    }
    if !has_return(body) {
        return (body.to_vec(), decls);
    }
    // A single return as the final top-level statement needs no flag.
    let returns = {
        let mut n = 0;
        for s in body {
            s.walk(&mut |t| n += matches!(t.kind, StmtKind::Return(_)) as usize);
        }
        n
    };
    if returns == 1 && matches!(body.last().map(|s| &s.kind), Some(StmtKind::Return(_))) {
        let mut out = body[..body.len() - 1].to_vec();
        out.extend(rewrite_return(body.last().unwrap(), vars, false));
        return (out, decls);
    }
    decls.push(Stmt::with_ctx(
        StmtKind::Decl {
            name: vars.done.to_string(),
            ty: VarType::Scalar(ScalarType::Bool),
            init: Some(Expr::lit(0, ScalarType::Bool, span)),
        },
        span,
        ctx.clone(),
    ));
    (block(body, vars), decls)
}

fn rewrite_return(s: &Stmt, vars: &ReturnVars, set_done: bool) -> Vec<Stmt> {
    let StmtKind::Return(e) = &s.kind else { unreachable!() };
    let mut out = Vec::new();
    if let (Some(e), Some((ret, _))) = (e, vars.ret) {
        out.push(Stmt::with_ctx(StmtKind::Assign { name: ret.to_string(), value: e.clone() }, s.span, s.ctx.clone()));
    }
    if set_done {
        out.push(Stmt::with_ctx(
            StmtKind::Assign { name: vars.done.to_string(), value: Expr::lit(1, ScalarType::Bool, s.span) },
            s.span,
            s.ctx.clone(),
        ));
    }
    out
}

fn block(stmts: &[Stmt], vars: &ReturnVars) -> Vec<Stmt> {
    let mut out = Vec::new();
    for (i, s) in stmts.iter().enumerate() {
        if !has_return(std::slice::from_ref(s)) {
            out.push(s.clone());
            continue;
        }
        out.extend(stmt(s, vars));
        let rest = &stmts[i + 1..];
        if !rest.is_empty() {
            let first = &rest[0];
            out.push(Stmt::with_ctx(
                StmtKind::If { cond: Expr::not(done_var(vars.done, first.span)), then_body: block(rest, vars), else_body: vec![] },
                first.span,
                s.ctx.clone(),
            ));
        }
        break;
    }
    out
}

fn guarded_cond(cond: &Expr, done: &str) -> Expr {
    Expr::binary(BinaryOp::And, Expr::not(done_var(done, cond.span)), cond.clone(), ScalarType::Bool, cond.span)
}

fn stmt(s: &Stmt, vars: &ReturnVars) -> Vec<Stmt> {
    let mk = |kind| Stmt::with_ctx(kind, s.span, s.ctx.clone());
    match &s.kind {
        StmtKind::Return(_) => rewrite_return(s, vars, true),
        StmtKind::If { cond, then_body, else_body } => {
            vec![mk(StmtKind::If { cond: cond.clone(), then_body: block(then_body, vars), else_body: block(else_body, vars) })]
        }
        StmtKind::While { cond, body, loop_id } => {
            vec![mk(StmtKind::While { cond: guarded_cond(cond, vars.done), body: block(body, vars), loop_id: *loop_id })]
        }
        StmtKind::For { init, cond, step, body, loop_id } => {
            let mut body = body.clone();
            body.push((**step).clone());
            vec![(**init).clone(), mk(StmtKind::While { cond: guarded_cond(cond, vars.done), body: block(&body, vars), loop_id: *loop_id })]
        }
        _ => vec![s.clone()],
    }
}
