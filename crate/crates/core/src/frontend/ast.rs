//! Typed AST for MiniC compilation units.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Fixed-width scalar types. Values are carried as mathematical integers
/// (`i128`) that always lie in the type's range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarType {
    Bool,
    U8,
    U16,
    U32,
    I8,
    I16,
    I32,
}

impl ScalarType {
    pub const ALL: [ScalarType; 7] =
        [ScalarType::Bool, ScalarType::U8, ScalarType::U16, ScalarType::U32, ScalarType::I8, ScalarType::I16, ScalarType::I32];

    pub fn width(self) -> u32 {
        match self {
            ScalarType::Bool => 1,
            ScalarType::U8 | ScalarType::I8 => 8,
            ScalarType::U16 | ScalarType::I16 => 16,
            ScalarType::U32 | ScalarType::I32 => 32,
        }
    }

    pub fn is_signed(self) -> bool {
        matches!(self, ScalarType::I8 | ScalarType::I16 | ScalarType::I32)
    }

    pub fn is_bool(self) -> bool {
        self == ScalarType::Bool
    }

    pub fn is_integer(self) -> bool {
        !self.is_bool()
    }

    pub fn min_value(self) -> i128 {
        if self.is_signed() {
            -(1i128 << (self.width() - 1))
        } else {
            0
        }
    }

    pub fn max_value(self) -> i128 {
        if self.is_signed() {
            (1i128 << (self.width() - 1)) - 1
        } else {
            (1i128 << self.width()) - 1
        }
    }

    pub fn contains(self, v: i128) -> bool {
        v >= self.min_value() && v <= self.max_value()
    }

    /// Reduce an arbitrary integer into range with two's-complement wraparound.
    pub fn wrap(self, v: i128) -> i128 {
        if self.is_bool() {
            return (v != 0) as i128;
        }
        let w = self.width();
        let modulus = 1i128 << w;
        let r = v.rem_euclid(modulus);
        if self.is_signed() && r >= (modulus >> 1) {
            r - modulus
        } else {
            r
        }
    }

    /// Unsigned bit pattern of an in-range value.
    pub fn to_bits(self, v: i128) -> u64 {
        let w = self.width();
        (v.rem_euclid(1i128 << w)) as u64
    }

    pub fn from_bits(self, bits: u64) -> i128 {
        self.wrap(bits as i128)
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarType::Bool => "bool",
            ScalarType::U8 => "u8",
            ScalarType::U16 => "u16",
            ScalarType::U32 => "u32",
            ScalarType::I8 => "i8",
            ScalarType::I16 => "i16",
            ScalarType::I32 => "i32",
        }
    }

    pub fn from_name(s: &str) -> Option<ScalarType> {
        ScalarType::ALL.iter().copied().find(|t| t.name() == s)
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarType {
    Scalar(ScalarType),
    Array(ScalarType, u32),
}

impl VarType {
    pub fn elem(self) -> ScalarType {
        match self {
            VarType::Scalar(t) | VarType::Array(t, _) => t,
        }
    }
}

/// Source position (1-based line and column) of a construct.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    BitNot,
    Not,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::BitNot => "~",
            UnaryOp::Not => "!",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        use BinaryOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Rem => "%",
            BitAnd => "&",
            BitOr => "|",
            BitXor => "^",
            Shl => "<<",
            Shr => ">>",
            Eq => "==",
            Ne => "!=",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            And => "&&",
            Or => "||",
        }
    }

    /// C binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        use BinaryOp::*;
        match self {
            Or => 1,
            And => 2,
            BitOr => 3,
            BitXor => 4,
            BitAnd => 5,
            Eq | Ne => 6,
            Lt | Le | Gt | Ge => 7,
            Shl | Shr => 8,
            Add | Sub => 9,
            Mul | Div | Rem => 10,
        }
    }

    pub fn is_comparison(self) -> bool {
        use BinaryOp::*;
        matches!(self, Eq | Ne | Lt | Le | Gt | Ge)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or)
    }

    pub fn is_bitwise(self) -> bool {
        matches!(self, BinaryOp::BitAnd | BinaryOp::BitOr | BinaryOp::BitXor)
    }

    pub fn is_shift(self) -> bool {
        matches!(self, BinaryOp::Shl | BinaryOp::Shr)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr {
    pub kind: ExprKind,
    pub ty: ScalarType,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    /// Value in range of the node's type.
    Lit(i128),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Index(String, Box<Expr>),
    /// Conversion to the node's type.
    Cast(Box<Expr>),
    /// `nondet_T()`; the id is unique per program occurrence.
    Nondet(u32),
    Call {
        callee: String,
        args: Vec<Expr>,
        site: u32,
    },
}

impl Expr {
    pub fn new(kind: ExprKind, ty: ScalarType, span: Span) -> Self {
        Expr { kind, ty, span }
    }

    pub fn lit(v: i128, ty: ScalarType, span: Span) -> Self {
        Expr::new(ExprKind::Lit(v), ty, span)
    }

    pub fn var(name: impl Into<String>, ty: ScalarType, span: Span) -> Self {
        Expr::new(ExprKind::Var(name.into()), ty, span)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Self {
        let span = e.span;
        Expr::new(ExprKind::Unary(UnaryOp::Not, Box::new(e)), ScalarType::Bool, span)
    }

    pub fn binary(op: BinaryOp, l: Expr, r: Expr, ty: ScalarType, span: Span) -> Self {
        Expr::new(ExprKind::Binary(op, Box::new(l), Box::new(r)), ty, span)
    }

    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Lit(_) | ExprKind::Var(_) | ExprKind::Nondet(_) => vec![],
            ExprKind::Unary(_, e) | ExprKind::Cast(e) | ExprKind::Index(_, e) => vec![e],
            ExprKind::Binary(_, l, r) => vec![l, r],
            ExprKind::Call { args, .. } => args.iter().collect(),
        }
    }

    pub fn contains_call(&self) -> bool {
        matches!(self.kind, ExprKind::Call { .. }) || self.children().iter().any(|c| c.contains_call())
    }

    /// Pre-order visit of every node.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        f(self);
        match &mut self.kind {
            ExprKind::Lit(_) | ExprKind::Var(_) | ExprKind::Nondet(_) => {}
            ExprKind::Unary(_, e) | ExprKind::Cast(e) | ExprKind::Index(_, e) => e.walk_mut(f),
            ExprKind::Binary(_, l, r) => {
                l.walk_mut(f);
                r.walk_mut(f);
            }
            ExprKind::Call { args, .. } => {
                for a in args {
                    a.walk_mut(f);
                }
            }
        }
    }
}

/// One frame of the static context of a statement: the inlined call site or
/// unrolled loop iteration it belongs to. Contexts are kept sorted, so a
/// context is a set; the static nesting makes the set determine the path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CtxItem {
    Call(u32),
    Loop(u32, u32),
}

impl fmt::Display for CtxItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CtxItem::Call(c) => write!(f, "c{c}"),
            CtxItem::Loop(l, j) => write!(f, "l{l}.{j}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Ctx(pub Vec<CtxItem>);

impl Ctx {
    pub fn with(&self, item: CtxItem) -> Ctx {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&item) {
            v.insert(pos, item);
        }
        Ctx(v)
    }

    pub fn union(&self, other: &Ctx) -> Ctx {
        let mut out = self.clone();
        for it in &other.0 {
            out = out.with(*it);
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Ctx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, it) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{it}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnwindingMode {
    #[serde(alias = "assert")]
    Assertion,
    #[serde(alias = "assume")]
    Assumption,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
    /// Always empty in parsed programs; filled by inlining and unrolling.
    pub ctx: Ctx,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StmtKind {
    Decl {
        name: String,
        ty: VarType,
        init: Option<Expr>,
    },
    Assign {
        name: String,
        value: Expr,
    },
    Store {
        array: String,
        index: Expr,
        value: Expr,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
        loop_id: u32,
    },
    For {
        init: Box<Stmt>,
        cond: Expr,
        step: Box<Stmt>,
        body: Vec<Stmt>,
        loop_id: u32,
    },
    Assert(Expr),
    Assume(Expr),
    Return(Option<Expr>),
    /// Expression statement; the expression is a call.
    Call(Expr),
    /// Check emitted after the last unrolled copy of a loop: `cond` is the
    /// loop condition, re-evaluated after k iterations.
    Unwind {
        cond: Expr,
        mode: UnwindingMode,
        loop_id: u32,
    },
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Stmt { kind, span, ctx: Ctx::default() }
    }

    pub fn with_ctx(kind: StmtKind, span: Span, ctx: Ctx) -> Self {
        Stmt { kind, span, ctx }
    }

    /// Expressions evaluated directly by this statement (not nested bodies),
    /// in evaluation order.
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Decl { init, .. } => init.iter().collect(),
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::Store { index, value, .. } => vec![index, value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::For { cond, .. } => vec![cond],
            StmtKind::Assert(e) | StmtKind::Assume(e) | StmtKind::Call(e) => vec![e],
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Unwind { cond, .. } => vec![cond],
        }
    }

    pub fn exprs_mut(&mut self) -> Vec<&mut Expr> {
        match &mut self.kind {
            StmtKind::Decl { init, .. } => init.iter_mut().collect(),
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::Store { index, value, .. } => vec![index, value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::For { cond, .. } => vec![cond],
            StmtKind::Assert(e) | StmtKind::Assume(e) | StmtKind::Call(e) => vec![e],
            StmtKind::Return(e) => e.iter_mut().collect(),
            StmtKind::Unwind { cond, .. } => vec![cond],
        }
    }

    /// Nested statement bodies, including `for` init/step.
    pub fn bodies_mut(&mut self) -> Vec<&mut Vec<Stmt>> {
        match &mut self.kind {
            StmtKind::If { then_body, else_body, .. } => vec![then_body, else_body],
            StmtKind::While { body, .. } => vec![body],
            StmtKind::For { body, .. } => vec![body],
            _ => vec![],
        }
    }

    /// Pre-order visit over this statement and everything nested in it.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::If { then_body, else_body, .. } => {
                for s in then_body.iter().chain(else_body) {
                    s.walk(f);
                }
            }
            StmtKind::While { body, .. } => {
                for s in body {
                    s.walk(f);
                }
            }
            StmtKind::For { init, step, body, .. } => {
                init.walk(f);
                for s in body {
                    s.walk(f);
                }
                step.walk(f);
            }
            _ => {}
        }
    }

    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Stmt)) {
        f(self);
        match &mut self.kind {
            StmtKind::If { then_body, else_body, .. } => {
                for s in then_body.iter_mut().chain(else_body.iter_mut()) {
                    s.walk_mut(f);
                }
            }
            StmtKind::While { body, .. } => {
                for s in body {
                    s.walk_mut(f);
                }
            }
            StmtKind::For { init, step, body, .. } => {
                init.walk_mut(f);
                for s in body {
                    s.walk_mut(f);
                }
                step.walk_mut(f);
            }
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Param {
    pub name: String,
    pub ty: ScalarType,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Option<ScalarType>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

impl FunctionDef {
    pub fn signature(&self) -> (Vec<ScalarType>, Option<ScalarType>) {
        (self.params.iter().map(|p| p.ty).collect(), self.ret)
    }

    pub fn walk_stmts<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        for s in &self.body {
            s.walk(f);
        }
    }

    pub fn walk_exprs<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        self.walk_stmts(&mut |s| {
            for e in s.exprs() {
                e.walk(f);
            }
        });
    }

    pub fn walk_exprs_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        for s in &mut self.body {
            s.walk_mut(&mut |st| {
                for e in st.exprs_mut() {
                    e.walk_mut(f);
                }
            });
        }
    }

    /// Names of functions called directly, in first-call order.
    pub fn callees(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.walk_exprs(&mut |e| {
            if let ExprKind::Call { callee, .. } = &e.kind {
                if !out.contains(callee) {
                    out.push(callee.clone());
                }
            }
        });
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Global {
    pub name: String,
    pub ty: VarType,
    pub init: Option<Expr>,
    pub span: Span,
}

impl Global {
    /// Constant initial value (zero when absent).
    pub fn initial_value(&self) -> i128 {
        match &self.init {
            Some(Expr { kind: ExprKind::Lit(v), .. }) => *v,
            _ => 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Program {
    pub functions: Vec<FunctionDef>,
    pub globals: Vec<Global>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut FunctionDef> {
        self.functions.iter_mut().find(|f| f.name == name)
    }

    pub fn global(&self, name: &str) -> Option<&Global> {
        self.globals.iter().find(|g| g.name == name)
    }

    /// Copy with every span and context reset, for structural comparison.
    pub fn without_spans(&self) -> Program {
        let mut p = self.clone();
        for g in &mut p.globals {
            g.span = Span::default();
            if let Some(e) = &mut g.init {
                e.walk_mut(&mut |n| n.span = Span::default());
            }
        }
        for f in &mut p.functions {
            f.span = Span::default();
            for s in &mut f.body {
                s.walk_mut(&mut |st| {
                    st.span = Span::default();
                    st.ctx = Ctx::default();
                    for e in st.exprs_mut() {
                        e.walk_mut(&mut |n| n.span = Span::default());
                    }
                });
            }
        }
        p
    }

    /// Largest id of each id space (nondet, call site, loop) used so far.
    pub fn max_ids(&self) -> (u32, u32, u32) {
        let (mut nd, mut cs, mut lp) = (0, 0, 0);
        for f in &self.functions {
            f.walk_stmts(&mut |s| match &s.kind {
                StmtKind::While { loop_id, .. } | StmtKind::For { loop_id, .. } | StmtKind::Unwind { loop_id, .. } => {
                    lp = lp.max(*loop_id + 1)
                }
                _ => {}
            });
            f.walk_exprs(&mut |e| match &e.kind {
                ExprKind::Nondet(id) => nd = nd.max(*id + 1),
                ExprKind::Call { site, .. } => cs = cs.max(*site + 1),
                _ => {}
            });
        }
        (nd, cs, lp)
    }
}
