//! Constant folding and propagation over SSA.
//!
//! Literal operations are evaluated except where a property claim depends on
//! them: division or remainder by zero, over-wide shifts and wrapping signed
//! arithmetic stay symbolic so instrumentation still sees them.

use std::collections::HashMap;

use crate::frontend::ast::{BinaryOp, ScalarType, UnaryOp, VarType};
use crate::semantics::{self, Semantics};
use crate::transform::ssa::*;

pub fn fold_program(s: &mut SsaProgram) {
    let mut consts: HashMap<VarId, i128> = HashMap::new();
    let vars = s.vars.clone();
    for step in &mut s.steps {
        step.guard = fold_expr(&step.guard, &consts);
        for e in step.exprs_mut() {
            *e = fold_expr(e, &consts);
        }
        match &step.kind {
            StepKind::Define { var, value } => {
                if let Some(v) = value.as_const() {
                    consts.insert(*var, v);
                }
            }
            StepKind::Merge { target, cond, then_v, else_v } => {
                let scalar = matches!(vars[target.0 as usize].ty, VarType::Scalar(_));
                let chosen = match cond.as_const() {
                    Some(c) => Some(if c != 0 { *then_v } else { *else_v }),
                    None if then_v == else_v => Some(*then_v),
                    None => None,
                };
                let both = match (consts.get(then_v), consts.get(else_v)) {
                    (Some(a), Some(b)) if a == b => Some(*a),
                    _ => None,
                };
                if scalar {
                    let VarType::Scalar(ty) = vars[target.0 as usize].ty else { unreachable!() };
                    let value = match (chosen, both) {
                        (_, Some(v)) => Some(SsaExpr::constant(v, ty)),
                        (Some(c), None) => Some(match consts.get(&c) {
                            Some(v) => SsaExpr::constant(*v, ty),
                            None => SsaExpr::var(c, ty),
                        }),
                        _ => None,
                    };
                    if let Some(value) = value {
                        if let Some(v) = value.as_const() {
                            consts.insert(*target, v);
                        }
                        step.kind = StepKind::Define { var: *target, value };
                    }
                }
            }
            _ => {}
        }
    }
}

/// True when evaluating `e` can raise no instrumented property.
pub fn claim_free(e: &SsaExpr) -> bool {
    let mut ok = true;
    e.walk(&mut |n| match &n.kind {
        SsaExprKind::Select { .. } => ok = false,
        SsaExprKind::Binary { op, l, .. } => {
            let signed_arith = l.ty.is_signed() && matches!(op, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul);
            if signed_arith || matches!(op, BinaryOp::Div | BinaryOp::Rem) || op.is_shift() {
                ok = false;
            }
        }
        _ => {}
    });
    ok
}

fn foldable(op: BinaryOp, ty: ScalarType, a: i128, b: i128) -> bool {
    match op {
        BinaryOp::Div | BinaryOp::Rem => b != 0,
        BinaryOp::Shl | BinaryOp::Shr => semantics::index_key(ty, b, Semantics::Exact) < ty.width() as i128,
        BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul if ty.is_signed() => semantics::no_overflow(op, ty, a, b),
        _ => true,
    }
}

pub fn fold_expr(e: &SsaExpr, consts: &HashMap<VarId, i128>) -> SsaExpr {
    let ty = e.ty;
    match &e.kind {
        SsaExprKind::Const(_) | SsaExprKind::Sym(_) => e.clone(),
        SsaExprKind::Var(v) => match consts.get(v) {
            Some(c) => SsaExpr::constant(*c, ty),
            None => e.clone(),
        },
        SsaExprKind::Unary(op, a) => {
            let a = fold_expr(a, consts);
            if let Some(v) = a.as_const() {
                if let Ok(r) = semantics::eval_unary(*op, a.ty, v, Semantics::Exact) {
                    return SsaExpr::constant(r, ty);
                }
            }
            if let (UnaryOp::Not, SsaExprKind::Unary(UnaryOp::Not, inner)) = (op, &a.kind) {
                return (**inner).clone();
            }
            SsaExpr::new(SsaExprKind::Unary(*op, Box::new(a)), ty)
        }
        SsaExprKind::Binary { op, l, r, span } => {
            let l = fold_expr(l, consts);
            let r = fold_expr(r, consts);
            if let (Some(a), Some(b)) = (l.as_const(), r.as_const()) {
                if foldable(*op, l.ty, a, b) {
                    if let Ok(v) = semantics::eval_binary(*op, l.ty, a, b, Semantics::Exact) {
                        return SsaExpr::constant(v, ty);
                    }
                }
            }
            match op {
                BinaryOp::And => {
                    if l.is_false() {
                        return SsaExpr::bool(false);
                    }
                    if l.is_true() {
                        return r;
                    }
                    if r.is_true() {
                        return l;
                    }
                    if r.is_false() && claim_free(&l) {
                        return SsaExpr::bool(false);
                    }
                }
                BinaryOp::Or => {
                    if l.is_true() {
                        return SsaExpr::bool(true);
                    }
                    if l.is_false() {
                        return r;
                    }
                    if r.is_false() {
                        return l;
                    }
                    if r.is_true() && claim_free(&l) {
                        return SsaExpr::bool(true);
                    }
                }
                _ => {}
            }
            SsaExpr::new(SsaExprKind::Binary { op: *op, l: Box::new(l), r: Box::new(r), span: *span }, ty)
        }
        SsaExprKind::Select { array, index, size, span } => {
            SsaExpr::new(SsaExprKind::Select { array: *array, index: Box::new(fold_expr(index, consts)), size: *size, span: *span }, ty)
        }
        SsaExprKind::Cast(a) => {
            let a = fold_expr(a, consts);
            if let Some(v) = a.as_const() {
                return SsaExpr::constant(semantics::eval_cast(a.ty, ty, v), ty);
            }
            if a.ty == ty {
                return a;
            }
            SsaExpr::new(SsaExprKind::Cast(Box::new(a)), ty)
        }
        SsaExprKind::Ite(c, a, b) => {
            let c = fold_expr(c, consts);
            let a = fold_expr(a, consts);
            let b = fold_expr(b, consts);
            match c.as_const() {
                Some(v) if v != 0 => a,
                Some(_) => b,
                None if a == b => a,
                None => SsaExpr::new(SsaExprKind::Ite(Box::new(c), Box::new(a), Box::new(b)), ty),
            }
        }
        SsaExprKind::NoOverflow(op, a, b) => {
            let a = fold_expr(a, consts);
            let b = fold_expr(b, consts);
            if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
                return SsaExpr::bool(semantics::no_overflow(*op, a.ty, x, y));
            }
            SsaExpr::new(SsaExprKind::NoOverflow(*op, Box::new(a), Box::new(b)), ty)
        }
        SsaExprKind::InBounds(a, n) => {
            let a = fold_expr(a, consts);
            if let Some(x) = a.as_const() {
                return SsaExpr::bool(semantics::in_bounds(semantics::index_key(a.ty, x, Semantics::Exact), *n));
            }
            // An unsigned value narrower than the bound is always in range.
            if !a.ty.is_signed() && !a.ty.is_bool() && (1i128 << a.ty.width()) <= *n as i128 {
                return SsaExpr::bool(true);
            }
            SsaExpr::new(SsaExprKind::InBounds(Box::new(a), *n), ty)
        }
    }
}
