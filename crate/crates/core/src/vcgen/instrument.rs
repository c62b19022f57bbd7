//! Insertion of implicit property claims.

use std::collections::BTreeSet;

use crate::frontend::ast::{BinaryOp, Span};
use crate::transform::ssa::*;

pub fn instrument_properties(s: &SsaProgram, checks: &BTreeSet<PropertyKind>) -> SsaProgram {
    let todo: BTreeSet<PropertyKind> = checks.iter().copied().filter(|k| k.is_implicit() && !s.instrumented.contains(k)).collect();
    let mut out = s.clone();
    out.instrumented.extend(todo.iter().copied());
    if todo.is_empty() {
        return out;
    }
    let mut steps = Vec::with_capacity(s.steps.len() * 2);
    for step in &s.steps {
        let mut ins = Inserter { todo: &todo, step, claims: Vec::new() };
        for e in step.exprs() {
            ins.expr(e, &step.guard);
        }
        if let StepKind::ArrayStore { index, input, .. } = &step.kind {
            if let crate::frontend::ast::VarType::Array(_, n) = s.var(*input).ty {
                ins.claim(PropertyKind::ArrayBounds, in_bounds(index, n), step.span, &step.guard);
            }
        }
        steps.extend(ins.claims);
        steps.push(step.clone());
    }
    out.steps = steps;
    out
}

fn in_bounds(e: &SsaExpr, n: u32) -> SsaExpr {
    SsaExpr::new(SsaExprKind::InBounds(Box::new(e.clone()), n), crate::frontend::ast::ScalarType::Bool)
}

struct Inserter<'a> {
    todo: &'a BTreeSet<PropertyKind>,
    step: &'a SsaStep,
    claims: Vec<SsaStep>,
}

impl Inserter<'_> {
    fn claim(&mut self, kind: PropertyKind, prop: SsaExpr, span: Span, guard: &SsaExpr) {
        if !self.todo.contains(&kind) {
            return;
        }
        self.claims.push(SsaStep { kind: StepKind::Claim { prop, kind }, guard: guard.clone(), span, ctx: self.step.ctx.clone() });
    }

    /// Post-order, left to right: operands are checked before the operator.
    fn expr(&mut self, e: &SsaExpr, guard: &SsaExpr) {
        match &e.kind {
            SsaExprKind::Binary { op, l, r, span } => {
                self.expr(l, guard);
                if op.is_logical() {
                    let lv = if *op == BinaryOp::And { (**l).clone() } else { SsaExpr::not((**l).clone()) };
                    self.expr(r, &SsaExpr::and(guard.clone(), lv));
                    return;
                }
                self.expr(r, guard);
                let ty = l.ty;
                match op {
                    BinaryOp::Div | BinaryOp::Rem => {
                        let kind = if *op == BinaryOp::Div { PropertyKind::DivByZero } else { PropertyKind::ModByZero };
                        let nz = SsaExpr::new(
                            SsaExprKind::Binary { op: BinaryOp::Ne, l: r.clone(), r: Box::new(SsaExpr::constant(0, r.ty)), span: *span },
                            crate::frontend::ast::ScalarType::Bool,
                        );
                        self.claim(kind, nz, *span, guard);
                    }
                    BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul if ty.is_signed() => {
                        let p = SsaExpr::new(SsaExprKind::NoOverflow(*op, l.clone(), r.clone()), crate::frontend::ast::ScalarType::Bool);
                        self.claim(PropertyKind::SignedOverflow, p, *span, guard);
                    }
                    BinaryOp::Shl | BinaryOp::Shr => {
                        self.claim(PropertyKind::ShiftRange, in_bounds(r, ty.width()), *span, guard);
                    }
                    _ => {}
                }
            }
            SsaExprKind::Select { index, size, span, .. } => {
                self.expr(index, guard);
                self.claim(PropertyKind::ArrayBounds, in_bounds(index, *size), *span, guard);
            }
            SsaExprKind::Ite(c, a, b) => {
                self.expr(c, guard);
                self.expr(a, &SsaExpr::and(guard.clone(), (**c).clone()));
                self.expr(b, &SsaExpr::and(guard.clone(), SsaExpr::not((**c).clone())));
            }
            _ => {
                for c in e.children() {
                    self.expr(c, guard);
                }
            }
        }
    }
}
