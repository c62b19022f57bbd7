//! MiniC front end: lexing, parsing, type checking, fingerprints and the
//! call graph.

pub mod ast;
pub mod callgraph;
pub mod hash;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod typeck;

use std::fmt;

use serde::Serialize;

pub use ast::*;
pub use callgraph::CallGraph;
pub use hash::{canonical_form, normalized_hash, Hash256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticKind {
    Lex,
    Parse,
    Type,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub span: Span,
    pub message: String,
    /// Source unit name when parsing several files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, span: Span, message: impl Into<String>) -> Self {
        Diagnostic { kind, span, message: message.into(), file: None }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DiagnosticKind::Lex => "lex error",
            DiagnosticKind::Parse => "parse error",
            DiagnosticKind::Type => "type error",
        };
        if let Some(file) = &self.file {
            write!(f, "{file}:")?;
        }
        write!(f, "{}: {kind}: {}", self.span, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct FrontendError {
    pub diagnostics: Vec<Diagnostic>,
}

impl FrontendError {
    pub fn kind(&self) -> Option<DiagnosticKind> {
        self.diagnostics.first().map(|d| d.kind)
    }
}

impl fmt::Display for FrontendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl From<Diagnostic> for FrontendError {
    fn from(d: Diagnostic) -> Self {
        FrontendError { diagnostics: vec![d] }
    }
}

fn parse_unit(src: &str, ids: parser::IdGen) -> Result<(Program, parser::IdGen), Diagnostic> {
    let toks = lexer::lex(src)?;
    let mut p = parser::Parser::new(toks, ids);
    let prog = p.program()?;
    Ok((prog, p.ids))
}

/// Parse without type checking; literal types are placeholders.
pub fn parse(src: &str) -> Result<Program, FrontendError> {
    Ok(parse_unit(src, parser::IdGen::default())?.0)
}

pub fn parse_and_check(src: &str) -> Result<Program, FrontendError> {
    parse_units(&[("<input>".to_string(), src.to_string())]).map_err(|mut e| {
        for d in &mut e.diagnostics {
            d.file = None;
        }
        e
    })
}

/// Parse several files as one compilation unit. Ids stay unique across files.
pub fn parse_units(units: &[(String, String)]) -> Result<Program, FrontendError> {
    let mut ids = parser::IdGen::default();
    let mut prog = Program::default();
    for (name, src) in units {
        let (p, next) = parse_unit(src, ids).map_err(|mut d| {
            d.file = Some(name.clone());
            FrontendError::from(d)
        })?;
        ids = next;
        prog.functions.extend(p.functions);
        prog.globals.extend(p.globals);
    }
    typeck::check_program(&mut prog).map_err(|diagnostics| FrontendError { diagnostics })?;
    Ok(prog)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_function() {
        let p = parse_and_check("u8 f(u8 x){ return x + 1; }").unwrap();
        assert_eq!(p.functions.len(), 1);
        let f = &p.functions[0];
        let StmtKind::Return(Some(e)) = &f.body[0].kind else { panic!() };
        let ExprKind::Binary(BinaryOp::Add, l, r) = &e.kind else { panic!() };
        assert_eq!(l.kind, ExprKind::Var("x".into()));
        assert_eq!(r.kind, ExprKind::Lit(1));
        assert_eq!(r.ty, ScalarType::U8);
        assert_eq!(e.ty, ScalarType::U8);
    }

    #[test]
    fn width_mismatch_is_type_error() {
        let e = parse_and_check("u8 f(u16 x){ return x; }").unwrap_err();
        assert_eq!(e.kind(), Some(DiagnosticKind::Type));
        assert_eq!(e.diagnostics[0].span, Span::new(1, 21));
        assert!(parse_and_check("u8 f(u16 x){ return cast<u8>(x); }").is_ok());
    }

    #[test]
    fn recursion_rejected() {
        let e = parse_and_check("u8 f(u8 x){ return g(x); } u8 g(u8 x){ return f(x); }").unwrap_err();
        assert!(e.diagnostics[0].message.contains("f→g→f"), "{e}");
        assert!(parse_and_check("void f(){ f(); }").is_err());
    }

    #[test]
    fn type_errors() {
        for src in [
            "void f(){ x = 1; }",
            "void f(){ u8 x = 1; if (x) { } }",
            "void f(){ assert(1); }",
            "void f(){ u8 x = 256; }",
            "void f(){ u8 a[2]; a = 1; }",
            "u8 f(u8 x){ if (x > 1) { return 1; } }",
            "void f(){ u8 x = 1; if (true) { u8 x = 2; } }",
            "void f(){ u8 x = 1; u16 y = x + cast<u16>(x); }",
            "void f(){ g(); }",
            "u8 g(u8 a){ return a; } void f(){ u8 x = g(); }",
            "u8 x = nondet_u8();",
            "void f(){ bool b = true + true; }",
        ] {
            let e = parse_and_check(src).expect_err(src);
            assert_eq!(e.kind(), Some(DiagnosticKind::Type), "{src}: {e}");
        }
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = parse_and_check("void f() {\n  u8 x = ;\n}").unwrap_err();
        assert_eq!(e.kind(), Some(DiagnosticKind::Parse));
        assert_eq!(e.diagnostics[0].span, Span::new(2, 10));
        assert_eq!(parse_and_check("void f() { x @ }").unwrap_err().kind(), Some(DiagnosticKind::Lex));
    }

    #[test]
    fn literals_follow_context() {
        let p = parse_and_check("i8 f(){ i8 x = 0xFF; return -128; } bool g(){ return 1 == 1; }").unwrap();
        let StmtKind::Decl { init: Some(e), .. } = &p.functions[0].body[0].kind else { panic!() };
        assert_eq!(e.kind, ExprKind::Lit(-1));
        let StmtKind::Return(Some(e)) = &p.functions[1].body[0].kind else { panic!() };
        let ExprKind::Binary(_, l, _) = &e.kind else { panic!() };
        assert_eq!(l.ty, ScalarType::I32);
    }

    #[test]
    fn nondet_ids_are_unique() {
        let p = parse_and_check("void f(){ u8 a = nondet_u8(); u8 b = nondet_u8(); }").unwrap();
        let mut ids = vec![];
        p.functions[0].walk_exprs(&mut |e| {
            if let ExprKind::Nondet(i) = e.kind {
                ids.push(i)
            }
        });
        assert_eq!(ids, vec![0, 1]);
    }

    #[test]
    fn globals_and_for_loops() {
        let src = "u32 count = 3; i8 neg = -5; u8 buf[4];
            void main(){ for (u8 i = 0; i < 4; i = i + 1) { buf[i] = i; } count = count + 1; }";
        let p = parse_and_check(src).unwrap();
        assert_eq!(p.global("neg").unwrap().initial_value(), -5);
        assert_eq!(p.global("buf").unwrap().ty, VarType::Array(ScalarType::U8, 4));
    }

    #[test]
    fn pretty_roundtrip() {
        let src = "u8 g = 7; i16 arr[3];
            i16 h(i16 a, bool b){ if (b && a > 0) { return -a; } else { return a % 3; } }
            void main(){ u8 x = nondet_u8(); i16 y = h(cast<i16>(x), x != 0);
              while (x < 10) { x = x + (1 << 1); arr[cast<u8>(y) % 3] = ~y; }
              assume(!(x == 255)); assert(x >= g || true); }";
        let p = parse_and_check(src).unwrap();
        let printed = pretty::program(&p);
        let q = parse_and_check(&printed).unwrap();
        assert_eq!(p.without_spans(), q.without_spans(), "{printed}");
    }
}
