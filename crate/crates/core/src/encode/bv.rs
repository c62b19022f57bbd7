use super::{sym_symbol, var_symbol, EncodeError, Theory};
use crate::frontend::ast::{BinaryOp, ScalarType, UnaryOp};
use crate::transform::ssa::*;

pub(super) struct Bv<'a> {
    pub ssa: &'a SsaProgram,
}

fn lit(v: i128, ty: ScalarType) -> String {
    if ty.is_bool() {
        if v != 0 { "true" } else { "false" }.to_string()
    } else {
        format!("(_ bv{} {})", ty.to_bits(v), ty.width())
    }
}

/// Widen or narrow `t` of type `from` to `w` bits, extending by signedness.
fn resize(t: String, from: ScalarType, w: u32) -> String {
    let fw = from.width();
    if fw == w {
        t
    } else if fw > w {
        format!("((_ extract {} 0) {t})", w - 1)
    } else if from.is_signed() {
        format!("((_ sign_extend {}) {t})", w - fw)
    } else {
        format!("((_ zero_extend {}) {t})", w - fw)
    }
}

fn binop(op: BinaryOp, signed: bool) -> &'static str {
    use BinaryOp::*;
    match (op, signed) {
        (Add, _) => "bvadd",
        (Sub, _) => "bvsub",
        (Mul, _) => "bvmul",
        (Div, false) => "bvudiv",
        (Div, true) => "bvsdiv",
        (Rem, false) => "bvurem",
        (Rem, true) => "bvsrem",
        (BitAnd, _) => "bvand",
        (BitOr, _) => "bvor",
        (BitXor, _) => "bvxor",
        (Shl, _) => "bvshl",
        (Shr, false) => "bvlshr",
        (Shr, true) => "bvashr",
        (Eq, _) => "=",
        (Ne, _) => "distinct",
        (Lt, false) => "bvult",
        (Lt, true) => "bvslt",
        (Le, false) => "bvule",
        (Le, true) => "bvsle",
        (Gt, false) => "bvugt",
        (Gt, true) => "bvsgt",
        (Ge, false) => "bvuge",
        (Ge, true) => "bvsge",
        (And, _) => "and",
        (Or, _) => "or",
    }
}

impl Theory for Bv<'_> {
    fn scalar_sort(&self, ty: ScalarType) -> String {
        if ty.is_bool() {
            "Bool".into()
        } else {
            format!("(_ BitVec {})", ty.width())
        }
    }

    fn index_sort(&self) -> &'static str {
        "(_ BitVec 32)"
    }

    fn zero(&self, ty: ScalarType) -> String {
        lit(0, ty)
    }

    fn symbol_constraints(&self, _name: &str, _ty: ScalarType) -> Option<String> {
        None
    }

    fn key(&mut self, index: &SsaExpr) -> Result<String, EncodeError> {
        let t = self.term(index)?;
        Ok(resize(t, index.ty, 32))
    }

    fn term(&mut self, e: &SsaExpr) -> Result<String, EncodeError> {
        Ok(match &e.kind {
            SsaExprKind::Const(v) => lit(*v, e.ty),
            SsaExprKind::Var(v) => var_symbol(self.ssa, *v),
            SsaExprKind::Sym(i) => sym_symbol(self.ssa, *i),
            SsaExprKind::Unary(op, a) => {
                let f = match op {
                    UnaryOp::Not => "not",
                    UnaryOp::Neg => "bvneg",
                    UnaryOp::BitNot => "bvnot",
                };
                format!("({f} {})", self.term(a)?)
            }
            SsaExprKind::Binary { op, l, r, .. } => {
                format!("({} {} {})", binop(*op, l.ty.is_signed()), self.term(l)?, self.term(r)?)
            }
            SsaExprKind::Select { array, index, .. } => {
                format!("(select {} {})", var_symbol(self.ssa, *array), self.key(index)?)
            }
            SsaExprKind::Cast(a) => {
                let t = self.term(a)?;
                match (a.ty.is_bool(), e.ty.is_bool()) {
                    (true, true) => t,
                    (true, false) => format!("(ite {t} {} {})", lit(1, e.ty), lit(0, e.ty)),
                    (false, true) => format!("(not (= {t} {}))", lit(0, a.ty)),
                    (false, false) => resize(t, a.ty, e.ty.width()),
                }
            }
            SsaExprKind::Ite(c, a, b) => format!("(ite {} {} {})", self.term(c)?, self.term(a)?, self.term(b)?),
            SsaExprKind::NoOverflow(op, ..) if !matches!(op, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul) => "true".into(),
            SsaExprKind::NoOverflow(op, a, b) => {
                // The result fits iff computing in double width agrees with
                // the sign-extended narrow result.
                let w = a.ty.width();
                let f = binop(*op, true);
                let (x, y) = (self.term(a)?, self.term(b)?);
                format!("(= ((_ sign_extend {w}) ({f} {x} {y})) ({f} ((_ sign_extend {w}) {x}) ((_ sign_extend {w}) {y})))")
            }
            SsaExprKind::InBounds(a, n) => format!("(bvult {} (_ bv{n} 32))", self.key(a)?),
        })
    }
}
