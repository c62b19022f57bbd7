//! Recursive-descent parser producing an untyped AST.
//!
//! Integer literals come out with a placeholder `u32` type and their raw
//! value, boolean literals with type `bool`; the type checker assigns real
//! types afterwards.

use super::ast::*;
use super::lexer::{Tok, Token};
use super::{Diagnostic, DiagnosticKind};

/// Id counters for nondet occurrences, call sites and loops.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdGen {
    pub nondet: u32,
    pub call: u32,
    pub loop_: u32,
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    pub ids: IdGen,
}

type PResult<T> = Result<T, Diagnostic>;

const KEYWORDS: &[&str] = &[
    "bool", "u8", "u16", "u32", "i8", "i16", "i32", "void", "if", "else", "while", "for", "assert", "assume", "return", "true", "false",
    "cast",
];

impl Parser {
    pub fn new(toks: Vec<Token>, ids: IdGen) -> Self {
        Parser { toks, pos: 0, ids }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::new(DiagnosticKind::Parse, self.span(), msg))
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.is_punct(p) {
            Ok(self.advance().span)
        } else {
            self.err(format!("expected `{p}`, found {}", self.describe()))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && !s.starts_with("nondet_") => {
                let sp = self.advance().span;
                Ok((s, sp))
            }
            _ => self.err(format!("expected identifier, found {}", self.describe())),
        }
    }

    fn expect_int(&mut self) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(v)
            }
            _ => self.err(format!("expected integer literal, found {}", self.describe())),
        }
    }

    fn peek_type(&self) -> Option<ScalarType> {
        match self.peek() {
            Tok::Ident(s) => ScalarType::from_name(s),
            _ => None,
        }
    }

    fn expect_type(&mut self) -> PResult<ScalarType> {
        match self.peek_type() {
            Some(t) => {
                self.advance();
                Ok(t)
            }
            None => self.err(format!("expected type, found {}", self.describe())),
        }
    }

    pub fn program(&mut self) -> PResult<Program> {
        let mut prog = Program::default();
        while *self.peek() != Tok::Eof {
            let span = self.span();
            let ret = if self.is_kw("void") {
                self.advance();
                None
            } else {
                Some(self.expect_type()?)
            };
            let (name, _) = self.expect_ident()?;
            if self.is_punct("(") {
                let f = self.funcdef_rest(name, ret, span)?;
                prog.functions.push(f);
            } else {
                let Some(elem) = ret else {
                    return self.err("`void` is only valid as a function return type");
                };
                let ty = self.array_suffix(elem)?;
                let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
                self.expect_punct(";")?;
                prog.globals.push(Global { name, ty, init, span });
            }
        }
        Ok(prog)
    }

    fn array_suffix(&mut self, elem: ScalarType) -> PResult<VarType> {
        if self.eat_punct("[") {
            let n = self.expect_int()?;
            self.expect_punct("]")?;
            if n == 0 || n > (1 << 16) {
                return self.err(format!("array size {n} out of range 1..=65536"));
            }
            Ok(VarType::Array(elem, n as u32))
        } else {
            Ok(VarType::Scalar(elem))
        }
    }

    fn funcdef_rest(&mut self, name: String, ret: Option<ScalarType>, span: Span) -> PResult<FunctionDef> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let ty = self.expect_type()?;
                let (pname, _) = self.expect_ident()?;
                params.push(Param { name: pname, ty });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let body = self.block()?;
        Ok(FunctionDef { name, params, ret, body, span })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.is_punct("}") {
            if *self.peek() == Tok::Eof {
                return self.err("unexpected end of input in block");
            }
            out.push(self.stmt()?);
        }
        self.advance();
        Ok(out)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        if self.peek_type().is_some() {
            let s = self.decl()?;
            self.expect_punct(";")?;
            return Ok(s);
        }
        if self.is_kw("if") {
            self.advance();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then_body = self.block()?;
            let else_body = if self.is_kw("else") {
                self.advance();
                if self.is_kw("if") {
                    vec![self.stmt()?]
                } else {
                    self.block()?
                }
            } else {
                vec![]
            };
            return Ok(Stmt::new(StmtKind::If { cond, then_body, else_body }, span));
        }
        if self.is_kw("while") {
            self.advance();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let loop_id = self.next_loop();
            let body = self.block()?;
            return Ok(Stmt::new(StmtKind::While { cond, body, loop_id }, span));
        }
        if self.is_kw("for") {
            self.advance();
            self.expect_punct("(")?;
            let init = if self.peek_type().is_some() { self.decl()? } else { self.simple()? };
            self.expect_punct(";")?;
            let cond = self.expr()?;
            self.expect_punct(";")?;
            let step = self.simple()?;
            self.eat_punct(";");
            self.expect_punct(")")?;
            let loop_id = self.next_loop();
            let body = self.block()?;
            return Ok(Stmt::new(StmtKind::For { init: Box::new(init), cond, step: Box::new(step), body, loop_id }, span));
        }
        if self.is_kw("assert") || self.is_kw("assume") {
            let is_assert = self.is_kw("assert");
            self.advance();
            self.expect_punct("(")?;
            let e = self.expr()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            let kind = if is_assert { StmtKind::Assert(e) } else { StmtKind::Assume(e) };
            return Ok(Stmt::new(kind, span));
        }
        if self.is_kw("return") {
            self.advance();
            let e = if self.is_punct(";") { None } else { Some(self.expr()?) };
            self.expect_punct(";")?;
            return Ok(Stmt::new(StmtKind::Return(e), span));
        }
        let s = self.simple()?;
        self.expect_punct(";")?;
        Ok(s)
    }

    fn next_loop(&mut self) -> u32 {
        let id = self.ids.loop_;
        self.ids.loop_ += 1;
        id
    }

    fn decl(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let elem = self.expect_type()?;
        let (name, _) = self.expect_ident()?;
        let ty = self.array_suffix(elem)?;
        let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
        Ok(Stmt::new(StmtKind::Decl { name, ty, init }, span))
    }

    /// Assignment, array store or call, without the trailing `;`.
    fn simple(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let (name, nspan) = self.expect_ident()?;
        if self.eat_punct("=") {
            let value = self.expr()?;
            return Ok(Stmt::new(StmtKind::Assign { name, value }, span));
        }
        if self.eat_punct("[") {
            let index = self.expr()?;
            self.expect_punct("]")?;
            self.expect_punct("=")?;
            let value = self.expr()?;
            return Ok(Stmt::new(StmtKind::Store { array: name, index, value }, span));
        }
        if self.is_punct("(") {
            let call = self.call_rest(name, nspan)?;
            return Ok(Stmt::new(StmtKind::Call(call), span));
        }
        self.err(format!("expected `=`, `[` or `(` after `{name}`, found {}", self.describe()))
    }

    fn call_rest(&mut self, callee: String, span: Span) -> PResult<Expr> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let site = self.ids.call;
        self.ids.call += 1;
        Ok(Expr::new(ExprKind::Call { callee, args, site }, ScalarType::U32, span))
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn peek_binop(&self) -> Option<BinaryOp> {
        use BinaryOp::*;
        let Tok::Punct(p) = self.peek() else { return None };
        Some(match *p {
            "+" => Add,
            "-" => Sub,
            "*" => Mul,
            "/" => Div,
            "%" => Rem,
            "&" => BitAnd,
            "|" => BitOr,
            "^" => BitXor,
            "<<" => Shl,
            ">>" => Shr,
            "==" => Eq,
            "!=" => Ne,
            "<" => Lt,
            "<=" => Le,
            ">" => Gt,
            ">=" => Ge,
            "&&" => And,
            "||" => Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let span = self.advance().span;
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs, ScalarType::U32, span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Punct("-") => Some(UnaryOp::Neg),
            Tok::Punct("~") => Some(UnaryOp::BitNot),
            Tok::Punct("!") => Some(UnaryOp::Not),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(e)), ScalarType::U32, span));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::lit(v as i128, ScalarType::U32, span))
            }
            Tok::Punct("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.advance();
                Ok(Expr::lit((s == "true") as i128, ScalarType::Bool, span))
            }
            Tok::Ident(s) if s == "cast" => {
                self.advance();
                self.expect_punct("<")?;
                let ty = self.expect_type()?;
                self.expect_punct(">")?;
                self.expect_punct("(")?;
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(Expr::new(ExprKind::Cast(Box::new(e)), ty, span))
            }
            Tok::Ident(s) if s.starts_with("nondet_") => {
                let Some(ty) = ScalarType::from_name(&s["nondet_".len()..]) else {
                    return self.err(format!("unknown intrinsic `{s}`"));
                };
                if !matches!(self.peek_at(1), Tok::Punct("(")) {
                    return self.err(format!("expected `(` after `{s}`"));
                }
                self.advance();
                self.expect_punct("(")?;
                self.expect_punct(")")?;
                let id = self.ids.nondet;
                self.ids.nondet += 1;
                Ok(Expr::new(ExprKind::Nondet(id), ty, span))
            }
            Tok::Ident(_) => {
                let (name, nspan) = self.expect_ident()?;
                if self.is_punct("(") {
                    return self.call_rest(name, nspan);
                }
                if self.eat_punct("[") {
                    let idx = self.expr()?;
                    self.expect_punct("]")?;
                    return Ok(Expr::new(ExprKind::Index(name, Box::new(idx)), ScalarType::U32, nspan));
                }
                Ok(Expr::var(name, ScalarType::U32, nspan))
            }
            _ => self.err(format!("expected expression, found {}", self.describe())),
        }
    }
}
