//! Alpha-renaming-invariant function fingerprints.
//!
//! The canonical form is an s-expression over the AST in which parameters and
//! locals are replaced by their declaration position (`$0`, `$1`, ...) and
//! spans, comments and formatting are gone. The fingerprint is SHA-256 of
//! that text. Globals and callees are referenced by name. The function's own
//! name and parse-order ids are not part of the form.

use std::collections::HashMap;
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ast::*;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Hash256(pub [u8; 32]);

impl Hash256 {
    pub fn of(bytes: &[u8]) -> Hash256 {
        Hash256(Sha256::digest(bytes).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash256({})", &self.to_hex()[..16])
    }
}

impl From<Hash256> for String {
    fn from(h: Hash256) -> String {
        h.to_hex()
    }
}

impl TryFrom<String> for Hash256 {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        let v = hex::decode(&s).map_err(|e| e.to_string())?;
        let arr: [u8; 32] = v.try_into().map_err(|_| "expected 32 bytes".to_string())?;
        Ok(Hash256(arr))
    }
}

pub fn normalized_hash(f: &FunctionDef) -> Hash256 {
    Hash256::of(canonical_form(f).as_bytes())
}

pub fn canonical_form(f: &FunctionDef) -> String {
    let mut c = Canon { out: String::new(), scopes: vec![HashMap::new()], next: 0 };
    c.out.push_str("(fn (");
    for p in &f.params {
        c.bind(&p.name);
        write!(c.out, " {}", p.ty).unwrap();
    }
    match f.ret {
        Some(t) => write!(c.out, ") {t}").unwrap(),
        None => c.out.push_str(") void"),
    }
    c.block(&f.body);
    c.out.push(')');
    c.out
}

struct Canon {
    out: String,
    scopes: Vec<HashMap<String, usize>>,
    next: usize,
}

impl Canon {
    fn bind(&mut self, name: &str) -> usize {
        let i = self.next;
        self.next += 1;
        self.scopes.last_mut().unwrap().insert(name.to_string(), i);
        i
    }

    fn name(&mut self, name: &str) {
        for s in self.scopes.iter().rev() {
            if let Some(i) = s.get(name) {
                write!(self.out, " ${i}").unwrap();
                return;
            }
        }
        write!(self.out, " @{name}").unwrap();
    }

    fn block(&mut self, body: &[Stmt]) {
        self.scopes.push(HashMap::new());
        self.out.push_str(" (");
        for s in body {
            self.stmt(s);
        }
        self.out.push(')');
        self.scopes.pop();
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl { name, ty, init } => {
                match ty {
                    VarType::Scalar(t) => write!(self.out, "(decl {t}").unwrap(),
                    VarType::Array(t, n) => write!(self.out, "(decl {t}[{n}]").unwrap(),
                }
                if let Some(e) = init {
                    self.expr(e);
                }
                let i = self.bind(name);
                write!(self.out, " ${i})").unwrap();
            }
            StmtKind::Assign { name, value } => {
                self.out.push_str("(set");
                self.name(name);
                self.expr(value);
                self.out.push(')');
            }
            StmtKind::Store { array, index, value } => {
                self.out.push_str("(store");
                self.name(array);
                self.expr(index);
                self.expr(value);
                self.out.push(')');
            }
            StmtKind::If { cond, then_body, else_body } => {
                self.out.push_str("(if");
                self.expr(cond);
                self.block(then_body);
                self.block(else_body);
                self.out.push(')');
            }
            StmtKind::While { cond, body, .. } => {
                self.out.push_str("(while");
                self.expr(cond);
                self.block(body);
                self.out.push(')');
            }
            StmtKind::For { init, cond, step, body, .. } => {
                self.scopes.push(HashMap::new());
                self.out.push_str("(for ");
                self.stmt(init);
                self.expr(cond);
                self.out.push(' ');
                self.stmt(step);
                self.block(body);
                self.out.push(')');
                self.scopes.pop();
            }
            StmtKind::Assert(e) => self.wrap("assert", e),
            StmtKind::Assume(e) => self.wrap("assume", e),
            StmtKind::Call(e) => self.wrap("do", e),
            StmtKind::Return(Some(e)) => self.wrap("return", e),
            StmtKind::Return(None) => self.out.push_str("(return)"),
            StmtKind::Unwind { cond, mode, .. } => {
                write!(self.out, "(unwind {mode:?}").unwrap();
                self.expr(cond);
                self.out.push(')');
            }
        }
    }

    fn wrap(&mut self, tag: &str, e: &Expr) {
        write!(self.out, "({tag}").unwrap();
        self.expr(e);
        self.out.push(')');
    }

    fn expr(&mut self, e: &Expr) {
        let ty = e.ty;
        match &e.kind {
            ExprKind::Lit(v) => write!(self.out, " {v}:{ty}").unwrap(),
            ExprKind::Var(n) => self.name(n),
            ExprKind::Unary(op, a) => {
                write!(self.out, " ({}:{ty}", op.symbol()).unwrap();
                self.expr(a);
                self.out.push(')');
            }
            ExprKind::Binary(op, l, r) => {
                write!(self.out, " ({}:{ty}", op.symbol()).unwrap();
                self.expr(l);
                self.expr(r);
                self.out.push(')');
            }
            ExprKind::Index(a, i) => {
                self.out.push_str(" (idx");
                self.name(a);
                self.expr(i);
                self.out.push(')');
            }
            ExprKind::Cast(a) => {
                write!(self.out, " (cast:{ty}").unwrap();
                self.expr(a);
                self.out.push(')');
            }
            ExprKind::Nondet(_) => write!(self.out, " (nondet:{ty})").unwrap(),
            ExprKind::Call { callee, args, .. } => {
                write!(self.out, " (call @{callee}").unwrap();
                for a in args {
                    self.expr(a);
                }
                self.out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_and_check;

    fn h(src: &str) -> Hash256 {
        normalized_hash(&parse_and_check(src).unwrap().functions[0])
    }

    #[test]
    fn alpha_invariant() {
        assert_eq!(h("u8 f(u8 x){ return x + 1; }"), h("u8 f(u8 y){ return y + 1; }"));
        assert_eq!(
            h("u8 f(u8 x){ u8 t = x; if (t > 0) { u8 a = 1; t = t + a; } return t; }"),
            h("u8 f(u8 q){ u8 r = q; if (r > 0) { u8 b = 1; r = r + b; } return r; }")
        );
    }

    #[test]
    fn literal_sensitive() {
        assert_ne!(h("u8 f(u8 x){ return x + 1; }"), h("u8 f(u8 x){ return x + 2; }"));
    }

    #[test]
    fn comments_and_whitespace_ignored() {
        assert_eq!(h("u8 f(u8 x){return x+1;}"), h("u8 f(u8 x){ /*c*/ return x + 1; // t\n}"));
    }

    #[test]
    fn sibling_scopes_get_distinct_slots() {
        let a = h("void f(){ if (true) { u8 i = 1; } if (true) { u8 i = 2; } }");
        let b = h("void f(){ if (true) { u8 i = 1; } if (true) { u8 j = 2; } }");
        assert_eq!(a, b);
    }

    #[test]
    fn globals_are_referenced_by_name() {
        assert_ne!(h("u8 f(){ return g; } u8 g = 1; u8 k = 1;"), h("u8 f(){ return k; } u8 g = 1; u8 k = 1;"));
    }

    #[test]
    fn hex_roundtrip() {
        let x = h("void f(){}");
        let s: String = x.into();
        assert_eq!(Hash256::try_from(s).unwrap(), x);
    }
}
