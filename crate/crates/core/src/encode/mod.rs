//! SMT-LIB 2 encodings of verification conditions.

mod bv;
mod int;
pub mod sexp;

use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use crate::frontend::ast::{ScalarType, VarType};
use crate::transform::ssa::*;
use crate::vcgen::VerificationCondition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingKind {
    Bv,
    Int,
}

impl EncodingKind {
    pub fn name(self) -> &'static str {
        match self {
            EncodingKind::Bv => "bv",
            EncodingKind::Int => "int",
        }
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Precise,
    Approximate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Encoding {
    pub kind: EncodingKind,
    pub logic: String,
    pub precision: Precision,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmtQuery {
    pub encoding: Encoding,
    /// `declare-const` commands for the nondet symbols.
    pub declarations: Vec<String>,
    /// `define-fun` commands for SSA versions.
    pub definitions: Vec<String>,
    /// `assert` commands: constraints, prior claims, extras, negated property.
    pub assertions: Vec<String>,
    /// Mangled names queried for the model, in `symbol_indices` order.
    pub value_symbols: Vec<String>,
    /// Indices into the VC's `ssa.nondet_symbols`.
    pub symbol_indices: Vec<usize>,
    /// Keys and types of the queried symbols.
    pub symbols: Vec<Symbol>,
    pub text: String,
}

impl SmtQuery {
    pub fn logic(&self) -> &str {
        &self.encoding.logic
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("operator `{0}` is not supported by the integer encoding")]
    UnsupportedOperator(String),
}

/// `|fn::var#version|`. Names of inlined locals already carry their
/// function prefix.
pub fn var_symbol(ssa: &SsaProgram, v: VarId) -> String {
    let i = ssa.var(v);
    if i.name.contains("::") {
        format!("|{}#{}|", i.name, i.version)
    } else {
        format!("|{}::{}#{}|", ssa.entry_function, i.name, i.version)
    }
}

pub fn sym_symbol(ssa: &SsaProgram, idx: usize) -> String {
    format!("|{}::{}|", ssa.entry_function, ssa.nondet_symbols[idx].key)
}

/// Theory-specific term construction.
trait Theory {
    fn scalar_sort(&self, ty: ScalarType) -> String;
    fn index_sort(&self) -> &'static str;
    fn zero(&self, ty: ScalarType) -> String;
    fn term(&mut self, e: &SsaExpr) -> Result<String, EncodeError>;
    /// Array key of an index expression.
    fn key(&mut self, index: &SsaExpr) -> Result<String, EncodeError>;
    /// Assertions constraining a declared symbol.
    fn symbol_constraints(&self, name: &str, ty: ScalarType) -> Option<String>;
}

/// Declarations, definitions, assertions and queried symbol names.
type Parts = (Vec<String>, Vec<String>, Vec<String>, Vec<String>);

fn build(vc: &VerificationCondition, th: &mut dyn Theory) -> Result<Parts, EncodeError> {
    let ssa = &vc.ssa;
    let mut decls = Vec::new();
    let mut asserts = Vec::new();
    let mut syms = Vec::new();
    for &i in &vc.symbols {
        let name = sym_symbol(ssa, i);
        let ty = ssa.nondet_symbols[i].ty;
        decls.push(format!("(declare-const {name} {})", th.scalar_sort(ty)));
        if let Some(c) = th.symbol_constraints(&name, ty) {
            asserts.push(format!("(assert {c})"));
        }
        syms.push(name);
    }
    let mut defs = Vec::new();
    let sort_of = |th: &dyn Theory, v: VarId| match ssa.var(v).ty {
        VarType::Scalar(t) => th.scalar_sort(t),
        VarType::Array(t, _) => format!("(Array {} {})", th.index_sort(), th.scalar_sort(t)),
    };
    for s in vc.relevant_steps() {
        let guarded = |th: &mut dyn Theory, body: &SsaExpr| -> Result<String, EncodeError> {
            let b = th.term(body)?;
            Ok(if s.guard.is_true() { format!("(assert {b})") } else { format!("(assert (=> {} {b}))", th.term(&s.guard)?) })
        };
        match &s.kind {
            StepKind::Define { var, value } => {
                let t = th.term(value)?;
                defs.push(format!("(define-fun {} () {} {t})", var_symbol(ssa, *var), sort_of(th, *var)));
            }
            StepKind::ArrayInit { var } => {
                let VarType::Array(elem, _) = ssa.var(*var).ty else { unreachable!() };
                let sort = sort_of(th, *var);
                defs.push(format!("(define-fun {} () {sort} ((as const {sort}) {}))", var_symbol(ssa, *var), th.zero(elem)));
            }
            StepKind::ArrayStore { out, input, index, value } => {
                let key = th.key(index)?;
                let v = th.term(value)?;
                defs.push(format!(
                    "(define-fun {} () {} (store {} {key} {v}))",
                    var_symbol(ssa, *out),
                    sort_of(th, *out),
                    var_symbol(ssa, *input)
                ));
            }
            StepKind::Merge { target, cond, then_v, else_v } => {
                let c = th.term(cond)?;
                defs.push(format!(
                    "(define-fun {} () {} (ite {c} {} {}))",
                    var_symbol(ssa, *target),
                    sort_of(th, *target),
                    var_symbol(ssa, *then_v),
                    var_symbol(ssa, *else_v)
                ));
            }
            StepKind::Constraint { cond, .. } => asserts.push(guarded(th, cond)?),
            StepKind::Claim { prop, .. } => asserts.push(guarded(th, prop)?),
        }
    }
    for e in &vc.extra {
        asserts.push(format!("(assert {})", th.term(e)?));
    }
    asserts.push(format!("(assert (not {}))", th.term(&vc.property)?));
    Ok((decls, defs, asserts, syms))
}

fn assemble(encoding: Encoding, vc: &VerificationCondition, parts: (Vec<String>, Vec<String>, Vec<String>, Vec<String>)) -> SmtQuery {
    let (declarations, definitions, assertions, value_symbols) = parts;
    let mut text = String::new();
    text.push_str("(set-option :produce-models true)\n");
    writeln!(text, "(set-logic {})", encoding.logic).unwrap();
    for l in declarations.iter().chain(&definitions).chain(&assertions) {
        text.push_str(l);
        text.push('\n');
    }
    text.push_str("(check-sat)\n");
    if value_symbols.is_empty() {
        text.push_str("(get-value (true))\n");
    } else {
        writeln!(text, "(get-value ({}))", value_symbols.join(" ")).unwrap();
    }
    let symbols = vc.symbols.iter().map(|&i| vc.ssa.nondet_symbols[i].clone()).collect();
    SmtQuery { encoding, declarations, definitions, assertions, value_symbols, symbol_indices: vc.symbols.clone(), symbols, text }
}

/// Precise bit-vector and array encoding.
pub fn encode_bv(vc: &VerificationCondition) -> SmtQuery {
    let mut th = bv::Bv { ssa: &vc.ssa };
    let parts = build(vc, &mut th).expect("the bit-vector encoding is total");
    let encoding = Encoding { kind: EncodingKind::Bv, logic: "QF_ABV".into(), precision: Precision::Precise };
    assemble(encoding, vc, parts)
}

/// Unbounded-integer encoding. Precise only when `certified` says every
/// value provably stays in range.
pub fn encode_int(vc: &VerificationCondition, certified: bool) -> Result<SmtQuery, EncodeError> {
    let mut th = int::Int { ssa: &vc.ssa, lets: 0, nonlinear: false };
    let parts = build(vc, &mut th)?;
    let encoding = Encoding {
        kind: EncodingKind::Int,
        logic: if th.nonlinear { "QF_AUFNIA" } else { "QF_AUFLIA" }.into(),
        precision: if certified { Precision::Precise } else { Precision::Approximate },
    };
    Ok(assemble(encoding, vc, parts))
}

pub fn encode(vc: &VerificationCondition, kind: EncodingKind, certified: bool) -> Result<SmtQuery, EncodeError> {
    match kind {
        EncodingKind::Bv => Ok(encode_bv(vc)),
        EncodingKind::Int => encode_int(vc, certified),
    }
}

/// Convert a model value returned by a solver into the symbol's type.
/// Bit-vector values arrive as unsigned patterns, integers as themselves.
pub fn model_value(kind: EncodingKind, ty: ScalarType, raw: i128) -> i128 {
    match kind {
        EncodingKind::Bv => ty.from_bits(raw as u64),
        EncodingKind::Int => ty.wrap(raw),
    }
}

#[cfg(test)]
mod tests;
