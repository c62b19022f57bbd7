//! Syntactic features of a VC and the in-width certificate.

use std::collections::HashMap;

use serde::Serialize;

use crate::frontend::ast::{BinaryOp, ScalarType, UnaryOp, VarType};
use crate::transform::ssa::*;
use crate::vcgen::VerificationCondition;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FeatureVector {
    pub bitwise_ops: u32,
    pub shifts: u32,
    /// Products with no literal operand.
    pub nonconst_mul: u32,
    /// Divisions and remainders with a non-literal divisor.
    pub nonconst_div_mod: u32,
    pub array_accesses: u32,
    pub nondet_bits_total: u32,
    pub max_width: u32,
    pub has_overflow_claims: bool,
    pub linear_only: bool,
    /// Interval analysis shows no value of the VC ever leaves its type's
    /// range, no divisor can be zero and no array index is negative, so
    /// integer and bit-vector readings coincide.
    pub in_width_certified: bool,
}

fn count(e: &SsaExpr, fv: &mut FeatureVector) {
    e.walk(&mut |x| {
        fv.max_width = fv.max_width.max(x.ty.width());
        match &x.kind {
            SsaExprKind::Unary(UnaryOp::BitNot, _) => fv.bitwise_ops += 1,
            SsaExprKind::Binary { op, l, r, .. } => match op {
                BinaryOp::BitAnd | BinaryOp::BitOr | BinaryOp::BitXor => fv.bitwise_ops += 1,
                BinaryOp::Shl | BinaryOp::Shr => fv.shifts += 1,
                BinaryOp::Mul if l.as_const().is_none() && r.as_const().is_none() => fv.nonconst_mul += 1,
                BinaryOp::Div | BinaryOp::Rem if r.as_const().is_none() => fv.nonconst_div_mod += 1,
                _ => {}
            },
            SsaExprKind::Select { .. } => fv.array_accesses += 1,
            SsaExprKind::NoOverflow(..) => fv.has_overflow_claims = true,
            _ => {}
        }
    });
}

pub fn extract_features(vc: &VerificationCondition) -> FeatureVector {
    let mut fv = FeatureVector { nondet_bits_total: vc.input_bits(), ..Default::default() };
    let steps = vc.relevant_steps();
    for s in &steps {
        count(&s.guard, &mut fv);
        for e in s.exprs() {
            count(e, &mut fv);
        }
        match &s.kind {
            StepKind::ArrayStore { .. } => fv.array_accesses += 1,
            StepKind::Claim { kind: PropertyKind::SignedOverflow, .. } => fv.has_overflow_claims = true,
            _ => {}
        }
    }
    for e in vc.extra.iter().chain([&vc.property]) {
        count(e, &mut fv);
    }
    if vc.kind == PropertyKind::SignedOverflow {
        fv.has_overflow_claims = true;
    }
    for &i in &vc.symbols {
        fv.max_width = fv.max_width.max(vc.ssa.nondet_symbols[i].ty.width());
    }
    fv.linear_only = fv.nonconst_mul == 0 && fv.nonconst_div_mod == 0;
    fv.in_width_certified = certify(vc, &steps);
    fv
}

type Range = (i128, i128);

fn full(ty: ScalarType) -> Range {
    (ty.min_value(), ty.max_value())
}

fn hull(a: Range, b: Range) -> Range {
    (a.0.min(b.0), a.1.max(b.1))
}

struct Cert<'a> {
    ssa: &'a SsaProgram,
    vals: HashMap<VarId, Range>,
    ok: bool,
}

impl Cert<'_> {
    /// Result must fit `ty`; otherwise the certificate fails.
    fn fit(&mut self, r: Range, ty: ScalarType) -> Range {
        if r.0 < ty.min_value() || r.1 > ty.max_value() {
            self.ok = false;
            full(ty)
        } else {
            r
        }
    }

    fn index(&mut self, e: &SsaExpr) {
        if self.range(e).0 < 0 {
            self.ok = false;
        }
    }

    fn var(&self, v: VarId) -> Range {
        self.vals.get(&v).copied().unwrap_or_else(|| match self.ssa.var(v).ty {
            VarType::Scalar(t) | VarType::Array(t, _) => full(t),
        })
    }

    fn range(&mut self, e: &SsaExpr) -> Range {
        use BinaryOp::*;
        match &e.kind {
            SsaExprKind::Const(v) => (*v, *v),
            SsaExprKind::Var(v) => self.var(*v),
            SsaExprKind::Sym(i) => full(self.ssa.nondet_symbols[*i].ty),
            SsaExprKind::Unary(UnaryOp::Not, a) => {
                self.range(a);
                (0, 1)
            }
            SsaExprKind::Unary(UnaryOp::Neg, a) => {
                let (lo, hi) = self.range(a);
                self.fit((-hi, -lo), e.ty)
            }
            SsaExprKind::Unary(UnaryOp::BitNot, a) => {
                self.range(a);
                self.ok = false;
                full(e.ty)
            }
            SsaExprKind::Binary { op, l, r, .. } => {
                let a = self.range(l);
                let b = self.range(r);
                match op {
                    Add => self.fit((a.0 + b.0, a.1 + b.1), e.ty),
                    Sub => self.fit((a.0 - b.1, a.1 - b.0), e.ty),
                    Mul => {
                        let c = [a.0 * b.0, a.0 * b.1, a.1 * b.0, a.1 * b.1];
                        self.fit((*c.iter().min().unwrap(), *c.iter().max().unwrap()), e.ty)
                    }
                    Div | Rem if b.0 <= 0 && b.1 >= 0 => {
                        self.ok = false;
                        full(e.ty)
                    }
                    Div => {
                        let c = [a.0 / b.0, a.0 / b.1, a.1 / b.0, a.1 / b.1];
                        self.fit((*c.iter().min().unwrap(), *c.iter().max().unwrap()), e.ty)
                    }
                    Rem => {
                        let m = b.0.abs().max(b.1.abs()) - 1;
                        (if a.0 < 0 { -m } else { 0 }, if a.1 > 0 { m } else { 0 })
                    }
                    BitAnd | BitOr | BitXor | Shl | Shr => {
                        self.ok = false;
                        full(e.ty)
                    }
                    Eq | Ne | Lt | Le | Gt | Ge | And | Or => (0, 1),
                }
            }
            SsaExprKind::Select { array, index, .. } => {
                self.index(index);
                self.var(*array)
            }
            SsaExprKind::Cast(a) => {
                let r = self.range(a);
                if e.ty.is_bool() {
                    (0, 1)
                } else if r.0 >= e.ty.min_value() && r.1 <= e.ty.max_value() {
                    r
                } else {
                    full(e.ty)
                }
            }
            SsaExprKind::Ite(c, a, b) => {
                self.range(c);
                let x = self.range(a);
                let y = self.range(b);
                hull(x, y)
            }
            SsaExprKind::NoOverflow(_, a, b) => {
                self.range(a);
                self.range(b);
                (0, 1)
            }
            SsaExprKind::InBounds(a, _) => {
                self.index(a);
                (0, 1)
            }
        }
    }
}

fn certify(vc: &VerificationCondition, steps: &[&SsaStep]) -> bool {
    let mut c = Cert { ssa: &vc.ssa, vals: HashMap::new(), ok: true };
    for s in steps {
        c.range(&s.guard);
        match &s.kind {
            StepKind::Define { var, value } => {
                let r = c.range(value);
                c.vals.insert(*var, r);
            }
            StepKind::ArrayInit { var } => {
                c.vals.insert(*var, (0, 0));
            }
            StepKind::ArrayStore { out, input, index, value } => {
                c.index(index);
                let r = c.range(value);
                let prev = c.var(*input);
                c.vals.insert(*out, hull(prev, r));
            }
            StepKind::Merge { target, cond, then_v, else_v } => {
                c.range(cond);
                let r = hull(c.var(*then_v), c.var(*else_v));
                c.vals.insert(*target, r);
            }
            StepKind::Constraint { cond, .. } => {
                c.range(cond);
            }
            StepKind::Claim { prop, .. } => {
                c.range(prop);
            }
        }
    }
    for e in vc.extra.iter().chain([&vc.property]) {
        c.range(e);
    }
    c.ok
}
