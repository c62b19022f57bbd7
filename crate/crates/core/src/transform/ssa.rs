//! Loop-free, call-free, single-assignment form.

use std::collections::BTreeSet;
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use crate::frontend::ast::{BinaryOp, Ctx, ScalarType, Span, UnaryOp, VarType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropertyKind {
    UserAssert,
    ArrayBounds,
    DivByZero,
    ModByZero,
    SignedOverflow,
    ShiftRange,
    UnwindingAssertion,
}

impl PropertyKind {
    pub const ALL: [PropertyKind; 7] = [
        PropertyKind::UserAssert,
        PropertyKind::ArrayBounds,
        PropertyKind::DivByZero,
        PropertyKind::ModByZero,
        PropertyKind::SignedOverflow,
        PropertyKind::ShiftRange,
        PropertyKind::UnwindingAssertion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropertyKind::UserAssert => "user-assert",
            PropertyKind::ArrayBounds => "array-bounds",
            PropertyKind::DivByZero => "div-by-zero",
            PropertyKind::ModByZero => "mod-by-zero",
            PropertyKind::SignedOverflow => "signed-overflow",
            PropertyKind::ShiftRange => "shift-range",
            PropertyKind::UnwindingAssertion => "unwinding-assertion",
        }
    }

    pub fn from_name(s: &str) -> Option<PropertyKind> {
        PropertyKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Kinds inserted by instrumentation rather than written in the source
    /// or produced by unrolling.
    pub fn is_implicit(self) -> bool {
        !matches!(self, PropertyKind::UserAssert | PropertyKind::UnwindingAssertion)
    }
}

impl fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Index into [`SsaProgram::vars`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub version: u32,
    pub ty: VarType,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SymBase {
    Param(String),
    Nondet(u32),
}

/// Identity of one input of the program: the entry parameter, or the
/// occurrence of a nondet intrinsic in a particular call/loop context.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymKey {
    pub base: SymBase,
    pub ctx: Ctx,
}

impl SymKey {
    pub fn param(name: &str) -> SymKey {
        SymKey { base: SymBase::Param(name.to_string()), ctx: Ctx::default() }
    }

    pub fn nondet(id: u32, ctx: Ctx) -> SymKey {
        SymKey { base: SymBase::Nondet(id), ctx }
    }
}

impl fmt::Display for SymKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.base {
            SymBase::Param(n) => write!(f, "param!{n}")?,
            SymBase::Nondet(i) => write!(f, "nd{i}")?,
        }
        if !self.ctx.is_empty() {
            write!(f, "@{}", self.ctx)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for SymKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use crate::frontend::ast::CtxItem;
        let bad = || format!("malformed symbol `{s}`");
        if let Some(name) = s.strip_prefix("param!") {
            return Ok(SymKey::param(name));
        }
        let rest = s.strip_prefix("nd").ok_or_else(bad)?;
        let (id, ctx) = match rest.split_once('@') {
            Some((id, ctx)) => (id, Some(ctx)),
            None => (rest, None),
        };
        let id: u32 = id.parse().map_err(|_| bad())?;
        let mut c = Ctx::default();
        for item in ctx.into_iter().flat_map(|c| c.split(',')) {
            let it = if let Some(n) = item.strip_prefix('c') {
                CtxItem::Call(n.parse().map_err(|_| bad())?)
            } else if let Some(lj) = item.strip_prefix('l') {
                let (l, j) = lj.split_once('.').ok_or_else(bad)?;
                CtxItem::Loop(l.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?)
            } else {
                return Err(bad());
            };
            c = c.with(it);
        }
        Ok(SymKey::nondet(id, c))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub key: SymKey,
    pub ty: ScalarType,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SsaExpr {
    pub kind: SsaExprKind,
    pub ty: ScalarType,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SsaExprKind {
    Const(i128),
    Var(VarId),
    /// Index into [`SsaProgram::nondet_symbols`].
    Sym(usize),
    Unary(UnaryOp, Box<SsaExpr>),
    Binary {
        op: BinaryOp,
        l: Box<SsaExpr>,
        r: Box<SsaExpr>,
        span: Span,
    },
    /// Read of an array version. `size` is the declared length.
    Select {
        array: VarId,
        index: Box<SsaExpr>,
        size: u32,
        span: Span,
    },
    Cast(Box<SsaExpr>),
    Ite(Box<SsaExpr>, Box<SsaExpr>, Box<SsaExpr>),
    /// True when the signed operation does not wrap.
    NoOverflow(BinaryOp, Box<SsaExpr>, Box<SsaExpr>),
    /// True when the value, read as an unsigned index, is below the bound.
    InBounds(Box<SsaExpr>, u32),
}

impl SsaExpr {
    pub fn new(kind: SsaExprKind, ty: ScalarType) -> SsaExpr {
        SsaExpr { kind, ty }
    }

    pub fn constant(v: i128, ty: ScalarType) -> SsaExpr {
        SsaExpr::new(SsaExprKind::Const(v), ty)
    }

    pub fn bool(b: bool) -> SsaExpr {
        SsaExpr::constant(b as i128, ScalarType::Bool)
    }

    pub fn var(v: VarId, ty: ScalarType) -> SsaExpr {
        SsaExpr::new(SsaExprKind::Var(v), ty)
    }

    pub fn as_const(&self) -> Option<i128> {
        match self.kind {
            SsaExprKind::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_true(&self) -> bool {
        self.as_const() == Some(1) && self.ty.is_bool()
    }

    pub fn is_false(&self) -> bool {
        self.as_const() == Some(0) && self.ty.is_bool()
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: SsaExpr) -> SsaExpr {
        match e.as_const() {
            Some(v) => SsaExpr::bool(v == 0),
            None => SsaExpr::new(SsaExprKind::Unary(UnaryOp::Not, Box::new(e)), ScalarType::Bool),
        }
    }

    pub fn and(a: SsaExpr, b: SsaExpr) -> SsaExpr {
        if a.is_true() {
            return b;
        }
        if b.is_true() {
            return a;
        }
        if a.is_false() || b.is_false() {
            return SsaExpr::bool(false);
        }
        SsaExpr::new(SsaExprKind::Binary { op: BinaryOp::And, l: Box::new(a), r: Box::new(b), span: Span::default() }, ScalarType::Bool)
    }

    pub fn implies(a: SsaExpr, b: SsaExpr) -> SsaExpr {
        if a.is_true() {
            return b;
        }
        if a.is_false() || b.is_true() {
            return SsaExpr::bool(true);
        }
        SsaExpr::new(
            SsaExprKind::Binary { op: BinaryOp::Or, l: Box::new(SsaExpr::not(a)), r: Box::new(b), span: Span::default() },
            ScalarType::Bool,
        )
    }

    pub fn children(&self) -> Vec<&SsaExpr> {
        match &self.kind {
            SsaExprKind::Const(_) | SsaExprKind::Var(_) | SsaExprKind::Sym(_) => vec![],
            SsaExprKind::Unary(_, a) | SsaExprKind::Cast(a) | SsaExprKind::InBounds(a, _) => vec![a],
            SsaExprKind::Select { index, .. } => vec![index],
            SsaExprKind::Binary { l, r, .. } | SsaExprKind::NoOverflow(_, l, r) => vec![l, r],
            SsaExprKind::Ite(c, a, b) => vec![c, a, b],
        }
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a SsaExpr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Variables read, including array versions.
    pub fn vars(&self, out: &mut BTreeSet<VarId>) {
        self.walk(&mut |e| match &e.kind {
            SsaExprKind::Var(v) => {
                out.insert(*v);
            }
            SsaExprKind::Select { array, .. } => {
                out.insert(*array);
            }
            _ => {}
        });
    }

    pub fn syms(&self, out: &mut BTreeSet<usize>) {
        self.walk(&mut |e| {
            if let SsaExprKind::Sym(s) = e.kind {
                out.insert(s);
            }
        });
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintOrigin {
    Assume,
    UnwindingAssumption,
    /// An earlier claim, assumed to hold when checking a later one.
    PriorClaim,
    /// A concrete input fixed by a test case.
    Test,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepKind {
    Define {
        var: VarId,
        value: SsaExpr,
    },
    /// Fresh all-zero array.
    ArrayInit {
        var: VarId,
    },
    ArrayStore {
        out: VarId,
        input: VarId,
        index: SsaExpr,
        value: SsaExpr,
    },
    /// `target = cond ? then_v : else_v`
    Merge {
        target: VarId,
        cond: SsaExpr,
        then_v: VarId,
        else_v: VarId,
    },
    /// Holds whenever the guard holds.
    Constraint {
        cond: SsaExpr,
        origin: ConstraintOrigin,
    },
    /// Must hold whenever the guard holds.
    Claim {
        prop: SsaExpr,
        kind: PropertyKind,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SsaStep {
    pub kind: StepKind,
    /// Path condition under which the originating statement executes.
    pub guard: SsaExpr,
    pub span: Span,
    pub ctx: Ctx,
}

impl SsaStep {
    pub fn defined(&self) -> Option<VarId> {
        match &self.kind {
            StepKind::Define { var, .. } | StepKind::ArrayInit { var } => Some(*var),
            StepKind::ArrayStore { out, .. } => Some(*out),
            StepKind::Merge { target, .. } => Some(*target),
            _ => None,
        }
    }

    /// Expressions of the step in evaluation order (guard excluded).
    pub fn exprs(&self) -> Vec<&SsaExpr> {
        match &self.kind {
            StepKind::Define { value, .. } => vec![value],
            StepKind::ArrayInit { .. } => vec![],
            StepKind::ArrayStore { index, value, .. } => vec![index, value],
            StepKind::Merge { cond, .. } => vec![cond],
            StepKind::Constraint { cond, .. } => vec![cond],
            StepKind::Claim { prop, .. } => vec![prop],
        }
    }

    pub fn exprs_mut(&mut self) -> Vec<&mut SsaExpr> {
        match &mut self.kind {
            StepKind::Define { value, .. } => vec![value],
            StepKind::ArrayInit { .. } => vec![],
            StepKind::ArrayStore { index, value, .. } => vec![index, value],
            StepKind::Merge { cond, .. } => vec![cond],
            StepKind::Constraint { cond, .. } => vec![cond],
            StepKind::Claim { prop, .. } => vec![prop],
        }
    }

    /// Variables read by the step, guard included.
    pub fn uses(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.guard.vars(&mut out);
        for e in self.exprs() {
            e.vars(&mut out);
        }
        match &self.kind {
            StepKind::ArrayStore { input, .. } => {
                out.insert(*input);
            }
            StepKind::Merge { then_v, else_v, .. } => {
                out.insert(*then_v);
                out.insert(*else_v);
            }
            _ => {}
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SsaProgram {
    pub entry_function: String,
    pub vars: Vec<VarInfo>,
    pub steps: Vec<SsaStep>,
    pub nondet_symbols: Vec<Symbol>,
    pub bound_k: u32,
    /// Final version of every global, in declaration order.
    pub globals_out: Vec<(String, VarId)>,
    /// Final version of the return value of a non-void entry.
    pub ret: Option<VarId>,
    /// Property kinds already instrumented.
    pub instrumented: BTreeSet<PropertyKind>,
}

impl SsaProgram {
    pub fn var(&self, v: VarId) -> &VarInfo {
        &self.vars[v.0 as usize]
    }

    pub fn var_name(&self, v: VarId) -> String {
        let i = self.var(v);
        format!("{}#{}", i.name, i.version)
    }

    pub fn symbol_index(&self, key: &SymKey) -> Option<usize> {
        self.nondet_symbols.iter().position(|s| &s.key == key)
    }

    pub fn claims(&self) -> impl Iterator<Item = (usize, &SsaStep)> {
        self.steps.iter().enumerate().filter(|(_, s)| matches!(s.kind, StepKind::Claim { .. }))
    }

    /// Total input bits over all nondet symbols.
    pub fn input_bits(&self) -> u32 {
        self.nondet_symbols.iter().map(|s| s.ty.width()).sum()
    }

    /// Every version is defined once and before any use.
    pub fn check_well_formed(&self) -> Result<(), String> {
        let mut defined = vec![false; self.vars.len()];
        for (i, s) in self.steps.iter().enumerate() {
            for u in s.uses() {
                if !defined.get(u.0 as usize).copied().unwrap_or(false) {
                    return Err(format!("step {i} uses {} before its definition", self.var_name(u)));
                }
            }
            if let Some(d) = s.defined() {
                let slot = defined.get_mut(d.0 as usize).ok_or_else(|| format!("step {i}: unknown var"))?;
                if *slot {
                    return Err(format!("step {i} redefines {}", self.var_name(d)));
                }
                *slot = true;
            }
            for e in s.exprs().into_iter().chain([&s.guard]) {
                let mut syms = BTreeSet::new();
                e.syms(&mut syms);
                if syms.iter().any(|&x| x >= self.nondet_symbols.len()) {
                    return Err(format!("step {i} refers to an unknown symbol"));
                }
            }
        }
        Ok(())
    }

    pub fn expr_text(&self, e: &SsaExpr) -> String {
        let mut s = String::new();
        self.write_expr(&mut s, e);
        s
    }

    fn write_expr(&self, out: &mut String, e: &SsaExpr) {
        match &e.kind {
            SsaExprKind::Const(v) => {
                if e.ty.is_bool() {
                    out.push_str(if *v != 0 { "true" } else { "false" });
                } else {
                    write!(out, "{v}").unwrap();
                }
            }
            SsaExprKind::Var(v) => out.push_str(&self.var_name(*v)),
            SsaExprKind::Sym(i) => write!(out, "{}", self.nondet_symbols[*i].key).unwrap(),
            SsaExprKind::Unary(op, a) => {
                out.push_str(op.symbol());
                self.write_atom(out, a);
            }
            SsaExprKind::Binary { op, l, r, .. } => {
                self.write_atom(out, l);
                write!(out, " {} ", op.symbol()).unwrap();
                self.write_atom(out, r);
            }
            SsaExprKind::Select { array, index, .. } => {
                write!(out, "{}[", self.var_name(*array)).unwrap();
                self.write_expr(out, index);
                out.push(']');
            }
            SsaExprKind::Cast(a) => {
                write!(out, "cast<{}>(", e.ty).unwrap();
                self.write_expr(out, a);
                out.push(')');
            }
            SsaExprKind::Ite(c, a, b) => {
                out.push_str("ite(");
                self.write_expr(out, c);
                out.push_str(", ");
                self.write_expr(out, a);
                out.push_str(", ");
                self.write_expr(out, b);
                out.push(')');
            }
            SsaExprKind::NoOverflow(op, a, b) => {
                write!(out, "no_overflow{}(", op.symbol()).unwrap();
                self.write_expr(out, a);
                out.push_str(", ");
                self.write_expr(out, b);
                out.push(')');
            }
            SsaExprKind::InBounds(a, n) => {
                out.push_str("in_bounds(");
                self.write_expr(out, a);
                write!(out, ", {n})").unwrap();
            }
        }
    }

    fn write_atom(&self, out: &mut String, e: &SsaExpr) {
        if matches!(e.kind, SsaExprKind::Binary { .. } | SsaExprKind::Unary(..)) {
            out.push('(');
            self.write_expr(out, e);
            out.push(')');
        } else {
            self.write_expr(out, e);
        }
    }

    pub fn step_text(&self, s: &SsaStep) -> String {
        let body = match &s.kind {
            StepKind::Define { var, value } => format!("{} = {}", self.var_name(*var), self.expr_text(value)),
            StepKind::ArrayInit { var } => format!("{} = zeros", self.var_name(*var)),
            StepKind::ArrayStore { out, input, index, value } => {
                format!("{} = store({}, {}, {})", self.var_name(*out), self.var_name(*input), self.expr_text(index), self.expr_text(value))
            }
            StepKind::Merge { target, cond, then_v, else_v } => format!(
                "{} = merge({}, {}, {})",
                self.var_name(*target),
                self.expr_text(cond),
                self.var_name(*then_v),
                self.var_name(*else_v)
            ),
            StepKind::Constraint { cond, origin } => format!("constraint[{origin:?}]({})", self.expr_text(cond)),
            StepKind::Claim { prop, kind } => format!("claim[{kind}]({}) @{}", self.expr_text(prop), s.span),
        };
        if s.guard.is_true() {
            body
        } else {
            format!("[{}] {body}", self.expr_text(&s.guard))
        }
    }
}

impl fmt::Display for SsaProgram {
    /// One line per step, for golden tests and `--dump-ssa` style debugging.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "; entry {} k={}", self.entry_function, self.bound_k)?;
        for s in &self.nondet_symbols {
            writeln!(f, "; input {}: {}", s.key, s.ty)?;
        }
        for s in &self.steps {
            writeln!(f, "{}", self.step_text(s))?;
        }
        Ok(())
    }
}
