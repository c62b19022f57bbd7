//! Scalar operator semantics shared by the interpreters, the constant folder
//! and the enumerative solver.
//!
//! `Exact` is two's-complement machine arithmetic with SMT-LIB bit-vector
//! conventions for the otherwise-undefined cases (division by zero,
//! over-wide shifts). `Unbounded` is the mathematical-integer reading used by
//! the integer encoding: no wraparound except at explicit casts.

use crate::frontend::ast::{BinaryOp, ScalarType, UnaryOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Semantics {
    Exact,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("operator `{0}` has no unbounded-integer meaning")]
pub struct UnsupportedOp(pub &'static str);

/// Truncating division as in C; `b` must be non-zero.
fn tdiv(a: i128, b: i128) -> i128 {
    a / b
}

pub fn eval_unary(op: UnaryOp, ty: ScalarType, v: i128, sem: Semantics) -> Result<i128, UnsupportedOp> {
    Ok(match op {
        UnaryOp::Not => (v == 0) as i128,
        UnaryOp::Neg => match sem {
            Semantics::Exact => ty.wrap(-v),
            Semantics::Unbounded => -v,
        },
        UnaryOp::BitNot => match sem {
            Semantics::Exact => ty.wrap(!v),
            Semantics::Unbounded => return Err(UnsupportedOp("~")),
        },
    })
}

/// `ty` is the operand type (both operands share it).
pub fn eval_binary(op: BinaryOp, ty: ScalarType, a: i128, b: i128, sem: Semantics) -> Result<i128, UnsupportedOp> {
    use BinaryOp::*;
    let exact = sem == Semantics::Exact;
    let fin = |v: i128| if exact { ty.wrap(v) } else { v };
    Ok(match op {
        Add => fin(a + b),
        Sub => fin(a - b),
        Mul => fin(a * b),
        Div => {
            if b == 0 {
                if !exact {
                    0
                } else if ty.is_signed() {
                    if a >= 0 {
                        -1
                    } else {
                        1
                    }
                } else {
                    ty.max_value()
                }
            } else {
                fin(tdiv(a, b))
            }
        }
        Rem => {
            if b == 0 {
                if exact {
                    a
                } else {
                    0
                }
            } else {
                fin(a - b * tdiv(a, b))
            }
        }
        BitAnd | BitOr | BitXor | Shl | Shr if !exact => return Err(UnsupportedOp(op.symbol())),
        BitAnd => ty.wrap(a & b),
        BitOr => ty.wrap(a | b),
        BitXor => ty.wrap(a ^ b),
        Shl => {
            let amt = ty.to_bits(b);
            if amt >= ty.width() as u64 {
                0
            } else {
                ty.from_bits(ty.to_bits(a) << amt)
            }
        }
        Shr => {
            let amt = ty.to_bits(b);
            if ty.is_signed() {
                if amt >= ty.width() as u64 {
                    if a < 0 {
                        -1
                    } else {
                        0
                    }
                } else {
                    a >> amt
                }
            } else if amt >= ty.width() as u64 {
                0
            } else {
                a >> amt
            }
        }
        Eq => (a == b) as i128,
        Ne => (a != b) as i128,
        Lt => (a < b) as i128,
        Le => (a <= b) as i128,
        Gt => (a > b) as i128,
        Ge => (a >= b) as i128,
        And => (a != 0 && b != 0) as i128,
        Or => (a != 0 || b != 0) as i128,
    })
}

/// Conversion between scalar types. Integer targets wrap in both semantics.
pub fn eval_cast(from: ScalarType, to: ScalarType, v: i128) -> i128 {
    if to.is_bool() || from.is_bool() {
        (v != 0) as i128
    } else {
        to.wrap(v)
    }
}

/// Whether the signed result of `a op b` fits the operand type.
pub fn no_overflow(op: BinaryOp, ty: ScalarType, a: i128, b: i128) -> bool {
    let v = match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        _ => return true,
    };
    ty.contains(v)
}

/// Array index key: the index zero- or sign-extended to 32 bits and read as
/// unsigned in exact semantics, the plain integer otherwise.
pub fn index_key(ty: ScalarType, v: i128, sem: Semantics) -> i128 {
    match sem {
        Semantics::Exact => ScalarType::U32.to_bits(v) as i128,
        Semantics::Unbounded => {
            let _ = ty;
            v
        }
    }
}

/// `0 <= v < n`; used for both array bounds and shift ranges.
pub fn in_bounds(v: i128, n: u32) -> bool {
    v >= 0 && v < n as i128
}

#[cfg(test)]
mod tests {
    use super::*;
    use BinaryOp::*;
    use ScalarType::*;

    fn ex(op: BinaryOp, ty: ScalarType, a: i128, b: i128) -> i128 {
        eval_binary(op, ty, a, b, Semantics::Exact).unwrap()
    }

    #[test]
    fn wraparound() {
        assert_eq!(ex(Add, U8, 255, 1), 0);
        assert_eq!(ex(Add, I8, 127, 1), -128);
        assert_eq!(ex(Mul, I8, 16, 16), 0);
        assert_eq!(ex(Sub, U16, 0, 1), 65535);
    }

    #[test]
    fn division_follows_smtlib() {
        assert_eq!(ex(Div, U8, 7, 0), 255);
        assert_eq!(ex(Rem, U8, 7, 0), 7);
        assert_eq!(ex(Div, I8, 7, 0), -1);
        assert_eq!(ex(Div, I8, -7, 0), 1);
        assert_eq!(ex(Rem, I8, -7, 0), -7);
        assert_eq!(ex(Div, I8, -7, 2), -3);
        assert_eq!(ex(Rem, I8, -7, 2), -1);
        assert_eq!(ex(Div, I8, -128, -1), -128);
    }

    #[test]
    fn shifts() {
        assert_eq!(ex(Shl, U8, 1, 7), 128);
        assert_eq!(ex(Shl, U8, 1, 8), 0);
        assert_eq!(ex(Shl, I8, 1, 7), -128);
        assert_eq!(ex(Shr, I8, -128, 7), -1);
        assert_eq!(ex(Shr, I8, -128, 9), -1);
        assert_eq!(ex(Shr, I8, -1, -1), -1);
        assert_eq!(ex(Shr, U8, 128, 7), 1);
    }

    #[test]
    fn bitwise_signed() {
        assert_eq!(ex(BitAnd, I8, -1, 5), 5);
        assert_eq!(ex(BitXor, I8, -1, 0), -1);
        assert_eq!(eval_unary(UnaryOp::BitNot, U8, 0, Semantics::Exact).unwrap(), 255);
        assert_eq!(eval_unary(UnaryOp::BitNot, I8, 0, Semantics::Exact).unwrap(), -1);
    }

    #[test]
    fn unbounded_does_not_wrap() {
        let s = Semantics::Unbounded;
        assert_eq!(eval_binary(Add, U8, 255, 1, s).unwrap(), 256);
        assert_eq!(eval_binary(Div, I8, -7, 2, s).unwrap(), -3);
        assert!(eval_binary(Shl, U8, 1, 1, s).is_err());
        assert_eq!(eval_cast(U16, U8, 256), 0);
    }
}
