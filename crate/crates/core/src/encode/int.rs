use super::{sym_symbol, var_symbol, EncodeError, Theory};
use crate::frontend::ast::{BinaryOp, ScalarType, UnaryOp};
use crate::transform::ssa::*;

pub(super) struct Int<'a> {
    pub ssa: &'a SsaProgram,
    /// Counter for `let` binders.
    pub lets: usize,
    /// Set once a product or quotient of two non-constants is emitted.
    pub nonlinear: bool,
}

fn num(v: i128) -> String {
    if v < 0 {
        format!("(- {})", -v)
    } else {
        v.to_string()
    }
}

fn lit(v: i128, ty: ScalarType) -> String {
    if ty.is_bool() {
        if v != 0 { "true" } else { "false" }.to_string()
    } else {
        num(v)
    }
}

impl Int<'_> {
    fn binder(&mut self, p: &str) -> String {
        self.lets += 1;
        format!("?{p}{}", self.lets)
    }

    /// Truncating division or remainder; zero divisors give 0.
    fn divmod(&mut self, div: bool, l: &SsaExpr, r: &SsaExpr) -> Result<String, EncodeError> {
        let x = self.term(l)?;
        let a = self.binder("a");
        if let Some(c) = r.as_const() {
            if c == 0 {
                return Ok("0".into());
            }
            let m = c.abs();
            return Ok(if div {
                let q = format!("(ite (>= {a} 0) (div {a} {m}) (- (div (- {a}) {m})))");
                let q = if c < 0 { format!("(- {q})") } else { q };
                format!("(let (({a} {x})) {q})")
            } else {
                format!("(let (({a} {x})) (ite (< {a} 0) (- (mod (- {a}) {m})) (mod {a} {m})))")
            });
        }
        self.nonlinear = true;
        let y = self.term(r)?;
        let b = self.binder("b");
        let mag = if div { format!("(div (abs {a}) (abs {b}))") } else { format!("(mod (abs {a}) (abs {b}))") };
        let signed =
            if div { format!("(ite (= (< {a} 0) (< {b} 0)) {mag} (- {mag}))") } else { format!("(ite (< {a} 0) (- {mag}) {mag})") };
        Ok(format!("(let (({a} {x}) ({b} {y})) (ite (= {b} 0) 0 {signed}))"))
    }

    fn in_range(&self, t: &str, ty: ScalarType) -> String {
        format!("(and (<= {} {t}) (<= {t} {}))", num(ty.min_value()), num(ty.max_value()))
    }
}

impl Theory for Int<'_> {
    fn scalar_sort(&self, ty: ScalarType) -> String {
        if ty.is_bool() { "Bool" } else { "Int" }.into()
    }

    fn index_sort(&self) -> &'static str {
        "Int"
    }

    fn zero(&self, ty: ScalarType) -> String {
        lit(0, ty)
    }

    fn symbol_constraints(&self, name: &str, ty: ScalarType) -> Option<String> {
        (!ty.is_bool()).then(|| self.in_range(name, ty))
    }

    fn key(&mut self, index: &SsaExpr) -> Result<String, EncodeError> {
        self.term(index)
    }

    fn term(&mut self, e: &SsaExpr) -> Result<String, EncodeError> {
        use BinaryOp::*;
        Ok(match &e.kind {
            SsaExprKind::Const(v) => lit(*v, e.ty),
            SsaExprKind::Var(v) => var_symbol(self.ssa, *v),
            SsaExprKind::Sym(i) => sym_symbol(self.ssa, *i),
            SsaExprKind::Unary(UnaryOp::Not, a) => format!("(not {})", self.term(a)?),
            SsaExprKind::Unary(UnaryOp::Neg, a) => format!("(- {})", self.term(a)?),
            SsaExprKind::Unary(UnaryOp::BitNot, _) => return Err(EncodeError::UnsupportedOperator("~".into())),
            SsaExprKind::Binary { op, l, r, .. } => match op {
                BitAnd | BitOr | BitXor | Shl | Shr => return Err(EncodeError::UnsupportedOperator(op.symbol().into())),
                Div => self.divmod(true, l, r)?,
                Rem => self.divmod(false, l, r)?,
                _ => {
                    if *op == Mul && l.as_const().is_none() && r.as_const().is_none() {
                        self.nonlinear = true;
                    }
                    let f = match op {
                        Add => "+",
                        Sub => "-",
                        Mul => "*",
                        Eq => "=",
                        Ne => "distinct",
                        Lt => "<",
                        Le => "<=",
                        Gt => ">",
                        Ge => ">=",
                        And => "and",
                        Or => "or",
                        _ => unreachable!(),
                    };
                    format!("({f} {} {})", self.term(l)?, self.term(r)?)
                }
            },
            SsaExprKind::Select { array, index, .. } => {
                format!("(select {} {})", var_symbol(self.ssa, *array), self.key(index)?)
            }
            SsaExprKind::Cast(a) => {
                let t = self.term(a)?;
                let to = e.ty;
                match (a.ty.is_bool(), to.is_bool()) {
                    (true, true) => t,
                    (true, false) => format!("(ite {t} 1 0)"),
                    (false, true) => format!("(not (= {t} 0))"),
                    (false, false) => {
                        let m = 1i128 << to.width();
                        if to.is_signed() {
                            let h = m / 2;
                            format!("(- (mod (+ {t} {h}) {m}) {h})")
                        } else {
                            format!("(mod {t} {m})")
                        }
                    }
                }
            }
            SsaExprKind::Ite(c, a, b) => format!("(ite {} {} {})", self.term(c)?, self.term(a)?, self.term(b)?),
            SsaExprKind::NoOverflow(op, a, b) => {
                let f = match op {
                    Add => "+",
                    Sub => "-",
                    Mul => {
                        if a.as_const().is_none() && b.as_const().is_none() {
                            self.nonlinear = true;
                        }
                        "*"
                    }
                    _ => return Ok("true".into()),
                };
                let r = self.binder("r");
                let (x, y) = (self.term(a)?, self.term(b)?);
                format!("(let (({r} ({f} {x} {y}))) {})", self.in_range(&r, a.ty))
            }
            SsaExprKind::InBounds(a, n) => {
                let k = self.binder("k");
                let x = self.term(a)?;
                format!("(let (({k} {x})) (and (<= 0 {k}) (< {k} {n})))")
            }
        })
    }
}
