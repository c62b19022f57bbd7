use std::collections::BTreeSet;

use super::*;
use crate::frontend::{ast::UnwindingMode, parse_and_check};
use crate::vcgen::{generate_vcs, prepare, VerificationCondition};

fn vcs_with(src: &str, checks: &[PropertyKind]) -> Vec<VerificationCondition> {
    let p = parse_and_check(src).unwrap();
    let s = crate::transform::lower(&p, "main", 2, UnwindingMode::Assertion).unwrap();
    let checks: BTreeSet<_> = checks.iter().copied().collect();
    generate_vcs(&prepare(s, &checks))
}

fn vcs(src: &str) -> Vec<VerificationCondition> {
    vcs_with(src, &PropertyKind::ALL)
}

#[test]
fn bv_mapping() {
    let v =
        vcs("void main(){ u8 x = nondet_u8(); u8 y = nondet_u8(); i8 a = nondet_i8(); i8 b = nondet_i8(); assert(x + y < x || a < b); }");
    let q = encode_bv(&v[0]);
    assert!(q.text.contains("(bvadd "), "{}", q.text);
    assert!(q.text.contains("(bvult "));
    assert!(q.text.contains("(bvslt "));
    assert!(q.text.contains("(declare-const |main::nd0| (_ BitVec 8))"), "{}", q.text);
    assert_eq!(q.logic(), "QF_ABV");
    assert_eq!(q.encoding.precision, Precision::Precise);
}

#[test]
fn script_shape() {
    let v = vcs("void main(){ u8 x = nondet_u8(); assert(x != 255); }");
    let q = encode_bv(&v[0]);
    let lines: Vec<_> = q.text.lines().collect();
    assert_eq!(lines[0], "(set-option :produce-models true)");
    assert_eq!(lines[1], "(set-logic QF_ABV)");
    assert_eq!(lines[lines.len() - 2], "(check-sat)");
    assert_eq!(lines[lines.len() - 1], "(get-value (|main::nd0|))");
    assert_eq!(q.value_symbols, vec!["|main::nd0|"]);
    for l in lines {
        sexp::parse(l).unwrap();
    }
}

#[test]
fn deterministic() {
    let src = "void main(){ u16 a[4]; u8 i = nondet_u8(); if (i < 4) { a[i] = 3; } u16 s = a[1] * 2; assert(s != 6); }";
    let a = vcs(src);
    let b = vcs(src);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(encode_bv(x).text, encode_bv(y).text);
        assert_eq!(encode_int(x, false).unwrap().text, encode_int(y, false).unwrap().text);
    }
}

#[test]
fn casts_and_arrays() {
    let src = "void main(){ i8 x = nondet_i8(); u32 a[3]; a[x] = cast<u32>(x); i16 w = cast<i16>(x); u8 n = cast<u8>(w); assert(a[0] == 0 && n != 1); }";
    let v = vcs_with(src, &[]);
    let q = encode_bv(&v[0]);
    assert!(q.text.contains("((_ sign_extend 24)"), "{}", q.text);
    assert!(q.text.contains("((_ sign_extend 8)"));
    assert!(q.text.contains("((_ extract 7 0)"));
    assert!(q.text.contains("((as const (Array (_ BitVec 32) (_ BitVec 32))) (_ bv0 32))"));
    let qi = encode_int(&v[0], false).unwrap();
    assert!(qi.text.contains("(Array Int Int)"));
    assert!(qi.text.contains("(mod "));
}

#[test]
fn int_mapping_and_ranges() {
    let v = vcs_with("void main(){ u8 x = nondet_u8(); u8 y = nondet_u8(); assert(x + y != 7); }", &[]);
    let q = encode_int(&v[0], false).unwrap();
    assert!(q.text.contains("(+ |main::nd0| |main::nd1|)") || q.text.contains("(+ |main::"), "{}", q.text);
    assert!(q.text.contains("(assert (and (<= 0 |main::nd0|) (<= |main::nd0| 255)))"), "{}", q.text);
    assert_eq!(q.logic(), "QF_AUFLIA");
    assert_eq!(q.encoding.precision, Precision::Approximate);
    assert_eq!(encode_int(&v[0], true).unwrap().encoding.precision, Precision::Precise);
}

#[test]
fn int_rejects_bit_operations() {
    let v = vcs_with("void main(){ u8 x = nondet_u8(); assert((x << 1) != 3); }", &[]);
    assert_eq!(encode_int(&v[0], false), Err(EncodeError::UnsupportedOperator("<<".into())));
    let v = vcs_with("void main(){ u8 x = nondet_u8(); assert((x & 1) != 3); }", &[]);
    assert!(encode_int(&v[0], false).is_err());
}

#[test]
fn nonlinear_logic_upgrade() {
    let v = vcs_with("void main(){ u8 x = nondet_u8(); u8 y = nondet_u8(); assert(x * y != 6); }", &[]);
    assert_eq!(encode_int(&v[0], false).unwrap().logic(), "QF_AUFNIA");
    let v = vcs_with("void main(){ u8 x = nondet_u8(); assert(3 * x + 2 != 6); }", &[]);
    assert_eq!(encode_int(&v[0], false).unwrap().logic(), "QF_AUFLIA");
    let v = vcs_with("void main(){ u8 x = nondet_u8(); u8 y = nondet_u8(); assert(x / y != 6); }", &[]);
    assert_eq!(encode_int(&v[0], false).unwrap().logic(), "QF_AUFNIA");
}

#[test]
fn every_line_parses() {
    let src = "u8 g; u8 f(u8 v){ if (v > 3) { return v / 2; } return v % 3; } void main(){ u8 a[2]; i8 x = nondet_i8(); u8 y = f(cast<u8>(x)); a[y] = y; g = y >> 1; assert(a[1] != 2 && x + 1 > x); }";
    for vc in vcs(src) {
        for l in encode_bv(&vc).text.lines() {
            sexp::parse(l).unwrap_or_else(|e| panic!("{e}: {l}"));
        }
    }
    for vc in vcs_with(&src.replace(">> 1", "- 1"), &[PropertyKind::UserAssert, PropertyKind::DivByZero]) {
        for l in encode_int(&vc, false).unwrap().text.lines() {
            sexp::parse(l).unwrap_or_else(|e| panic!("{e}: {l}"));
        }
    }
}

#[test]
fn slicing_drops_unrelated_definitions() {
    let v = vcs_with("void main(){ u8 x = nondet_u8(); u8 z = x + 9; u8 y = nondet_u8(); assert(y != 1); }", &[]);
    let q = encode_bv(&v[0]);
    assert!(!q.text.contains("|main::z#"), "{}", q.text);
}

#[test]
fn model_values() {
    assert_eq!(model_value(EncodingKind::Bv, crate::frontend::ast::ScalarType::I8, 255), -1);
    assert_eq!(model_value(EncodingKind::Int, crate::frontend::ast::ScalarType::I8, -1), -1);
}
