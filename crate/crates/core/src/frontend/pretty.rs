//! MiniC pretty-printer. Output reparses to the same AST (modulo spans).

use std::fmt::Write;

use super::ast::*;

pub fn program(p: &Program) -> String {
    let mut out = String::new();
    for g in &p.globals {
        out.push_str(&decl_text(&g.name, g.ty, g.init.as_ref()));
        out.push_str(";\n");
    }
    for f in &p.functions {
        out.push_str(&function(f));
    }
    out
}

pub fn global(g: &Global) -> String {
    format!("{};", decl_text(&g.name, g.ty, g.init.as_ref()))
}

pub fn function(f: &FunctionDef) -> String {
    let mut out = String::new();
    let ret = f.ret.map(|t| t.name()).unwrap_or("void");
    let params: Vec<String> = f.params.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
    writeln!(out, "{ret} {}({}) {{", f.name, params.join(", ")).unwrap();
    block_into(&mut out, &f.body, 1);
    out.push_str("}\n");
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn block_into(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        stmt_into(out, s, depth);
    }
}

fn decl_text(name: &str, ty: VarType, init: Option<&Expr>) -> String {
    let mut s = match ty {
        VarType::Scalar(t) => format!("{t} {name}"),
        VarType::Array(t, n) => format!("{t} {name}[{n}]"),
    };
    if let Some(e) = init {
        write!(s, " = {}", expr(e)).unwrap();
    }
    s
}

/// Statement without trailing `;` for the simple forms.
fn simple_text(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Decl { name, ty, init } => decl_text(name, *ty, init.as_ref()),
        StmtKind::Assign { name, value } => format!("{name} = {}", expr(value)),
        StmtKind::Store { array, index, value } => format!("{array}[{}] = {}", expr(index), expr(value)),
        StmtKind::Call(e) => expr(e),
        _ => header(s),
    }
}

/// One-line rendering used in traces: compound statements show their head.
pub fn header(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Decl { .. } | StmtKind::Assign { .. } | StmtKind::Store { .. } | StmtKind::Call(_) => {
            format!("{};", simple_text(s))
        }
        StmtKind::If { cond, .. } => format!("if ({})", expr(cond)),
        StmtKind::While { cond, .. } => format!("while ({})", expr(cond)),
        StmtKind::For { init, cond, step, .. } => {
            format!("for ({}; {}; {})", simple_text(init), expr(cond), simple_text(step))
        }
        StmtKind::Assert(e) => format!("assert({});", expr(e)),
        StmtKind::Assume(e) => format!("assume({});", expr(e)),
        StmtKind::Return(Some(e)) => format!("return {};", expr(e)),
        StmtKind::Return(None) => "return;".to_string(),
        StmtKind::Unwind { cond, mode, .. } => match mode {
            UnwindingMode::Assertion => format!("__unwinding_assert(!({}));", expr(cond)),
            UnwindingMode::Assumption => format!("__unwinding_assume(!({}));", expr(cond)),
        },
    }
}

pub fn stmt(s: &Stmt) -> String {
    let mut out = String::new();
    stmt_into(&mut out, s, 0);
    out
}

fn stmt_into(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::If { cond, then_body, else_body } => {
            writeln!(out, "if ({}) {{", expr(cond)).unwrap();
            block_into(out, then_body, depth + 1);
            indent(out, depth);
            if else_body.is_empty() {
                out.push_str("}\n");
            } else {
                out.push_str("} else {\n");
                block_into(out, else_body, depth + 1);
                indent(out, depth);
                out.push_str("}\n");
            }
        }
        StmtKind::While { body, .. } | StmtKind::For { body, .. } => {
            writeln!(out, "{} {{", header(s)).unwrap();
            block_into(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        _ => {
            out.push_str(&header(s));
            out.push('\n');
        }
    }
}

pub fn expr(e: &Expr) -> String {
    let mut out = String::new();
    expr_into(&mut out, e);
    out
}

fn expr_into(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Lit(v) => {
            if e.ty.is_bool() {
                out.push_str(if *v != 0 { "true" } else { "false" });
            } else {
                write!(out, "{}", e.ty.to_bits(*v)).unwrap();
            }
        }
        ExprKind::Var(n) => out.push_str(n),
        ExprKind::Unary(op, a) => {
            out.push_str(op.symbol());
            atom_into(out, a);
        }
        ExprKind::Binary(op, l, r) => {
            atom_into(out, l);
            write!(out, " {} ", op.symbol()).unwrap();
            atom_into(out, r);
        }
        ExprKind::Index(a, i) => {
            write!(out, "{a}[").unwrap();
            expr_into(out, i);
            out.push(']');
        }
        ExprKind::Cast(a) => {
            write!(out, "cast<{}>(", e.ty).unwrap();
            expr_into(out, a);
            out.push(')');
        }
        ExprKind::Nondet(_) => write!(out, "nondet_{}()", e.ty).unwrap(),
        ExprKind::Call { callee, args, .. } => {
            write!(out, "{callee}(").unwrap();
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr_into(out, a);
            }
            out.push(')');
        }
    }
}

fn atom_into(out: &mut String, e: &Expr) {
    if matches!(e.kind, ExprKind::Binary(..) | ExprKind::Unary(..)) {
        out.push('(');
        expr_into(out, e);
        out.push(')');
    } else {
        expr_into(out, e);
    }
}
