//! Loop unrolling to a fixed bound with an unwinding check after the last copy.

use super::TransformError;
use crate::frontend::ast::*;

pub fn unroll_loops(p: &Program, k: u32, mode: UnwindingMode) -> Result<Program, TransformError> {
    if k == 0 {
        return Err(TransformError::NonPositiveBound);
    }
    let mut out = p.clone();
    for f in &mut out.functions {
        f.body = block(&f.body, k, mode);
    }
    Ok(out)
}

fn block(stmts: &[Stmt], k: u32, mode: UnwindingMode) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    for s in stmts {
        match &s.kind {
            StmtKind::While { cond, body, loop_id } => out.push(unroll(cond, body, *loop_id, s, k, mode)),
            StmtKind::For { init, cond, step, body, loop_id } => {
                out.push((**init).clone());
                let mut body = body.clone();
                body.push((**step).clone());
                out.push(unroll(cond, &body, *loop_id, s, k, mode));
            }
            StmtKind::If { cond, then_body, else_body } => out.push(Stmt::with_ctx(
                StmtKind::If { cond: cond.clone(), then_body: block(then_body, k, mode), else_body: block(else_body, k, mode) },
                s.span,
                s.ctx.clone(),
            )),
            _ => out.push(s.clone()),
        }
    }
    out
}

/// Copy j of the body is tagged with `Loop(id, j)`. The test that guards
/// copy j is evaluated at the end of copy j-1, so it carries that tag.
fn unroll(cond: &Expr, body: &[Stmt], id: u32, s: &Stmt, k: u32, mode: UnwindingMode) -> Stmt {
    let body = block(body, k, mode);
    let base = &s.ctx;
    let mut tail = Stmt::with_ctx(StmtKind::Unwind { cond: cond.clone(), mode, loop_id: id }, s.span, base.with(CtxItem::Loop(id, k - 1)));
    for j in (0..k).rev() {
        let tag = CtxItem::Loop(id, j);
        let mut copy = body.clone();
        for st in &mut copy {
            st.walk_mut(&mut |t| t.ctx = t.ctx.with(tag));
        }
        copy.push(tail);
        let if_ctx = if j == 0 { base.clone() } else { base.with(CtxItem::Loop(id, j - 1)) };
        tail = Stmt::with_ctx(StmtKind::If { cond: cond.clone(), then_body: copy, else_body: vec![] }, s.span, if_ctx);
    }
    tail
}
