//! Brute-force reference semantics for the SMT-LIB scripts the encoders
//! emit. Every declared constant is enumerated over its finite domain
//! (bit-vectors by width, booleans, integers by their range assertion) and
//! the assertions are evaluated directly from the SMT-LIB definitions.
//! Independent of the library: own reader, own operator semantics.

use std::collections::{BTreeMap, HashMap};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Sx {
    Atom(String),
    List(Vec<Sx>),
}

fn read(src: &str) -> Vec<Sx> {
    let b = src.as_bytes();
    let mut i = 0;
    let mut stack: Vec<Vec<Sx>> = vec![vec![]];
    while i < b.len() {
        match b[i] {
            b'(' => {
                stack.push(vec![]);
                i += 1;
            }
            b')' => {
                let l = stack.pop().expect("balanced");
                stack.last_mut().expect("balanced").push(Sx::List(l));
                i += 1;
            }
            b';' => {
                while i < b.len() && b[i] != b'\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_whitespace() => i += 1,
            b'|' => {
                let j = i + 1 + src[i + 1..].find('|').expect("closing bar");
                stack.last_mut().unwrap().push(Sx::Atom(src[i + 1..j].to_string()));
                i = j + 1;
            }
            b'"' => {
                let j = i + 1 + src[i + 1..].find('"').expect("closing quote");
                stack.last_mut().unwrap().push(Sx::Atom(src[i..=j].to_string()));
                i = j + 1;
            }
            _ => {
                let j = i + src[i..].find(|c: char| c.is_ascii_whitespace() || c == '(' || c == ')').unwrap_or(src.len() - i);
                stack.last_mut().unwrap().push(Sx::Atom(src[i..j].to_string()));
                i = j;
            }
        }
    }
    assert_eq!(stack.len(), 1, "unbalanced script");
    stack.pop().unwrap()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Val {
    Bool(bool),
    Bv(u32, u128),
    Int(i128),
    Arr(Box<Val>, BTreeMap<Val, Val>),
}

impl Val {
    fn b(&self) -> bool {
        match self {
            Val::Bool(b) => *b,
            v => panic!("expected Bool, got {v:?}"),
        }
    }
    fn bv(&self) -> (u32, u128) {
        match self {
            Val::Bv(w, v) => (*w, *v),
            v => panic!("expected BitVec, got {v:?}"),
        }
    }
    fn int(&self) -> i128 {
        match self {
            Val::Int(i) => *i,
            v => panic!("expected Int, got {v:?}"),
        }
    }
    /// Integer reading: signed for `Int`, unsigned for bit-vectors.
    pub fn as_i128(&self) -> i128 {
        match self {
            Val::Int(i) => *i,
            Val::Bv(_, v) => *v as i128,
            Val::Bool(b) => *b as i128,
            Val::Arr(..) => panic!("array value"),
        }
    }
}

#[derive(Clone, Debug)]
enum Sort {
    Bool,
    Bv(u32),
    Int,
    Arr(Box<Sort>, Box<Sort>),
}

fn sort(s: &Sx) -> Sort {
    match s {
        Sx::Atom(a) if a == "Bool" => Sort::Bool,
        Sx::Atom(a) if a == "Int" => Sort::Int,
        Sx::List(l) if l[0] == Sx::Atom("_".into()) => Sort::Bv(num(&l[2]) as u32),
        Sx::List(l) if l[0] == Sx::Atom("Array".into()) => Sort::Arr(Box::new(sort(&l[1])), Box::new(sort(&l[2]))),
        other => panic!("unknown sort {other:?}"),
    }
}

fn num(s: &Sx) -> u128 {
    match s {
        Sx::Atom(a) => a.parse().unwrap_or_else(|_| panic!("numeral expected, got {a}")),
        _ => panic!("numeral expected"),
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    And,
    Or,
    Not,
    Implies,
    Xor,
    Eq,
    Distinct,
    Ite,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Abs,
    Lt,
    Le,
    Gt,
    Ge,
    BvAdd,
    BvSub,
    BvMul,
    BvNeg,
    BvNot,
    BvAnd,
    BvOr,
    BvXor,
    BvShl,
    BvLshr,
    BvAshr,
    BvUdiv,
    BvUrem,
    BvSdiv,
    BvSrem,
    BvUlt,
    BvUle,
    BvUgt,
    BvUge,
    BvSlt,
    BvSle,
    BvSgt,
    BvSge,
    Concat,
    Extract(u32, u32),
    ZeroExt(u32),
    SignExt(u32),
    Select,
    Store,
    ConstArr,
}

fn op(name: &str) -> Option<Op> {
    use Op::*;
    Some(match name {
        "and" => And,
        "or" => Or,
        "not" => Not,
        "=>" => Implies,
        "xor" => Xor,
        "=" => Eq,
        "distinct" => Distinct,
        "ite" => Ite,
        "+" => Add,
        "-" => Sub,
        "*" => Mul,
        "div" => Div,
        "mod" => Mod,
        "abs" => Abs,
        "<" => Lt,
        "<=" => Le,
        ">" => Gt,
        ">=" => Ge,
        "bvadd" => BvAdd,
        "bvsub" => BvSub,
        "bvmul" => BvMul,
        "bvneg" => BvNeg,
        "bvnot" => BvNot,
        "bvand" => BvAnd,
        "bvor" => BvOr,
        "bvxor" => BvXor,
        "bvshl" => BvShl,
        "bvlshr" => BvLshr,
        "bvashr" => BvAshr,
        "bvudiv" => BvUdiv,
        "bvurem" => BvUrem,
        "bvsdiv" => BvSdiv,
        "bvsrem" => BvSrem,
        "bvult" => BvUlt,
        "bvule" => BvUle,
        "bvugt" => BvUgt,
        "bvuge" => BvUge,
        "bvslt" => BvSlt,
        "bvsle" => BvSle,
        "bvsgt" => BvSgt,
        "bvsge" => BvSge,
        "concat" => Concat,
        "select" => Select,
        "store" => Store,
        _ => return None,
    })
}

#[derive(Clone, Debug)]
enum Node {
    Const(Val),
    Slot(usize),
    App(Op, Vec<Node>),
    Let(Vec<(usize, Node)>, Box<Node>),
}

/// Compiled script.
pub struct Script {
    decls: Vec<(String, Sort)>,
    /// `define-fun` bodies in order; slot = decls.len() + index.
    defs: Vec<Node>,
    asserts: Vec<Node>,
    slots: usize,
    pub logic: String,
    pub get_value: Vec<String>,
}

struct Compiler {
    names: HashMap<String, usize>,
    scopes: Vec<(String, usize)>,
    slots: usize,
}

impl Compiler {
    fn lookup(&self, n: &str) -> Option<usize> {
        self.scopes.iter().rev().find(|(m, _)| m == n).map(|(_, s)| *s).or_else(|| self.names.get(n).copied())
    }

    fn expr(&mut self, s: &Sx) -> Node {
        match s {
            Sx::Atom(a) => {
                if a == "true" || a == "false" {
                    return Node::Const(Val::Bool(a == "true"));
                }
                if let Some(h) = a.strip_prefix("#b") {
                    return Node::Const(Val::Bv(h.len() as u32, u128::from_str_radix(h, 2).unwrap()));
                }
                if let Some(h) = a.strip_prefix("#x") {
                    return Node::Const(Val::Bv(4 * h.len() as u32, u128::from_str_radix(h, 16).unwrap()));
                }
                if a.bytes().all(|c| c.is_ascii_digit()) {
                    return Node::Const(Val::Int(a.parse().unwrap()));
                }
                Node::Slot(self.lookup(a).unwrap_or_else(|| panic!("unbound symbol {a}")))
            }
            Sx::List(l) => {
                match &l[0] {
                    Sx::Atom(h) if h == "_" => {
                        let Sx::Atom(v) = &l[1] else { panic!() };
                        let v = v.strip_prefix("bv").expect("bit-vector literal");
                        let w = num(&l[2]) as u32;
                        return Node::Const(Val::Bv(w, v.parse::<u128>().unwrap() & mask(w)));
                    }
                    Sx::Atom(h) if h == "let" => {
                        let Sx::List(binds) = &l[1] else { panic!("let bindings") };
                        // Bindings are parallel: compile all values first.
                        let mut out = Vec::new();
                        for b in binds {
                            let Sx::List(b) = b else { panic!() };
                            let slot = self.slots;
                            self.slots += 1;
                            out.push((b[0].clone(), slot, self.expr(&b[1])));
                        }
                        let depth = self.scopes.len();
                        let mut nodes = Vec::new();
                        for (name, slot, n) in out {
                            let Sx::Atom(name) = name else { panic!() };
                            self.scopes.push((name, slot));
                            nodes.push((slot, n));
                        }
                        let body = self.expr(&l[2]);
                        self.scopes.truncate(depth);
                        return Node::Let(nodes, Box::new(body));
                    }
                    Sx::List(h) if h[0] == Sx::Atom("_".into()) => {
                        let Sx::Atom(name) = &h[1] else { panic!() };
                        let o = match name.as_str() {
                            "extract" => Op::Extract(num(&h[2]) as u32, num(&h[3]) as u32),
                            "zero_extend" => Op::ZeroExt(num(&h[2]) as u32),
                            "sign_extend" => Op::SignExt(num(&h[2]) as u32),
                            other => panic!("unknown indexed op {other}"),
                        };
                        let args = l[1..].iter().map(|a| self.expr(a)).collect();
                        return Node::App(o, args);
                    }
                    Sx::List(h) if h[0] == Sx::Atom("as".into()) => {
                        return Node::App(Op::ConstArr, vec![self.expr(&l[1])]);
                    }
                    _ => {}
                }
                let Sx::Atom(h) = &l[0] else { panic!("bad head {:?}", l[0]) };
                let o = op(h).unwrap_or_else(|| panic!("unknown operator {h}"));
                Node::App(o, l[1..].iter().map(|a| self.expr(a)).collect())
            }
        }
    }
}

fn mask(w: u32) -> u128 {
    if w >= 128 {
        u128::MAX
    } else {
        (1u128 << w) - 1
    }
}

fn signed(w: u32, v: u128) -> i128 {
    if v >> (w - 1) & 1 == 1 {
        v as i128 - (1i128 << w)
    } else {
        v as i128
    }
}

fn bv(w: u32, v: u128) -> Val {
    Val::Bv(w, v & mask(w))
}

fn udiv(w: u32, a: u128, b: u128) -> u128 {
    a.checked_div(b).unwrap_or(mask(w))
}

fn urem(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        a % b
    }
}

fn neg(w: u32, a: u128) -> u128 {
    a.wrapping_neg() & mask(w)
}

/// Euclidean division; the remainder is never negative.
fn ediv(a: i128, b: i128) -> (i128, i128) {
    let r = a.rem_euclid(b);
    ((a - r) / b, r)
}

pub struct Eval {
    env: Vec<Val>,
    /// Set when an integer division by zero was evaluated. SMT-LIB leaves
    /// it unspecified, so verdicts depending on it are not meaningful.
    pub undefined: bool,
}

impl Eval {
    fn node(&mut self, n: &Node) -> Val {
        match n {
            Node::Const(v) => v.clone(),
            Node::Slot(s) => self.env[*s].clone(),
            Node::Let(binds, body) => {
                let vals: Vec<(usize, Val)> = binds.iter().map(|(s, e)| (*s, self.node(e))).collect();
                for (s, v) in vals {
                    self.env[s] = v;
                }
                self.node(body)
            }
            Node::App(o, args) => self.app(*o, args),
        }
    }

    fn app(&mut self, o: Op, a: &[Node]) -> Val {
        use Op::*;
        match o {
            And => Val::Bool(a.iter().all(|x| self.node(x).b())),
            Or => Val::Bool(a.iter().any(|x| self.node(x).b())),
            Not => Val::Bool(!self.node(&a[0]).b()),
            Implies => Val::Bool(!self.node(&a[0]).b() || self.node(&a[1]).b()),
            Ite => {
                if self.node(&a[0]).b() {
                    self.node(&a[1])
                } else {
                    self.node(&a[2])
                }
            }
            Store => {
                let Val::Arr(d, mut m) = self.node(&a[0]) else { panic!("store on non-array") };
                let (k, v) = (self.node(&a[1]), self.node(&a[2]));
                if v == *d {
                    m.remove(&k);
                } else {
                    m.insert(k, v);
                }
                Val::Arr(d, m)
            }
            Select => {
                let Val::Arr(d, m) = self.node(&a[0]) else { panic!("select on non-array") };
                let k = self.node(&a[1]);
                m.get(&k).cloned().unwrap_or(*d)
            }
            ConstArr => Val::Arr(Box::new(self.node(&a[0])), BTreeMap::new()),
            _ => {
                let v: Vec<Val> = a.iter().map(|x| self.node(x)).collect();
                self.strict(o, &v)
            }
        }
    }

    fn strict(&mut self, o: Op, v: &[Val]) -> Val {
        use Op::*;
        let chain = |f: &dyn Fn(i128, i128) -> bool| Val::Bool(v.windows(2).all(|p| f(p[0].int(), p[1].int())));
        match o {
            Xor => Val::Bool(v.iter().fold(false, |acc, x| acc ^ x.b())),
            Eq => Val::Bool(v.windows(2).all(|p| p[0] == p[1])),
            Distinct => Val::Bool((0..v.len()).all(|i| (i + 1..v.len()).all(|j| v[i] != v[j]))),
            Add => Val::Int(v.iter().map(Val::int).fold(0i128, |a, b| a.checked_add(b).expect("int overflow"))),
            Sub if v.len() == 1 => Val::Int(-v[0].int()),
            Sub => Val::Int(v[1..].iter().fold(v[0].int(), |a, b| a.checked_sub(b.int()).expect("int overflow"))),
            Mul => Val::Int(v.iter().map(Val::int).fold(1i128, |a, b| a.checked_mul(b).expect("int overflow"))),
            Div | Mod => {
                let (x, y) = (v[0].int(), v[1].int());
                if y == 0 {
                    self.undefined = true;
                    return Val::Int(0);
                }
                let (q, r) = ediv(x, y);
                Val::Int(if matches!(o, Div) { q } else { r })
            }
            Abs => Val::Int(v[0].int().abs()),
            Lt => chain(&|x, y| x < y),
            Le => chain(&|x, y| x <= y),
            Gt => chain(&|x, y| x > y),
            Ge => chain(&|x, y| x >= y),
            BvNeg => {
                let (w, x) = v[0].bv();
                bv(w, neg(w, x))
            }
            BvNot => {
                let (w, x) = v[0].bv();
                bv(w, !x)
            }
            Extract(hi, lo) => {
                let (_, x) = v[0].bv();
                bv(hi - lo + 1, x >> lo)
            }
            ZeroExt(n) => {
                let (w, x) = v[0].bv();
                bv(w + n, x)
            }
            SignExt(n) => {
                let (w, x) = v[0].bv();
                bv(w + n, signed(w, x) as u128)
            }
            Concat => {
                let ((wa, x), (wb, y)) = (v[0].bv(), v[1].bv());
                bv(wa + wb, x << wb | y)
            }
            _ => {
                let ((w, x), (w2, y)) = (v[0].bv(), v[1].bv());
                assert_eq!(w, w2, "width mismatch in {o:?}");
                let (sx, sy) = (signed(w, x), signed(w, y));
                let (nx, ny) = (x >> (w - 1) == 1, y >> (w - 1) == 1);
                match o {
                    BvAdd => bv(w, x.wrapping_add(y)),
                    BvSub => bv(w, x.wrapping_sub(y)),
                    BvMul => bv(w, x.wrapping_mul(y)),
                    BvAnd => bv(w, x & y),
                    BvOr => bv(w, x | y),
                    BvXor => bv(w, x ^ y),
                    BvShl => bv(w, if y >= w as u128 { 0 } else { x << y }),
                    BvLshr => bv(w, if y >= w as u128 { 0 } else { x >> y }),
                    BvAshr => bv(
                        w,
                        if y >= w as u128 {
                            if nx {
                                mask(w)
                            } else {
                                0
                            }
                        } else {
                            (sx >> y) as u128
                        },
                    ),
                    BvUdiv => bv(w, udiv(w, x, y)),
                    BvUrem => bv(w, urem(x, y)),
                    BvSdiv => bv(
                        w,
                        match (nx, ny) {
                            (false, false) => udiv(w, x, y),
                            (true, false) => neg(w, udiv(w, neg(w, x), y)),
                            (false, true) => neg(w, udiv(w, x, neg(w, y))),
                            (true, true) => udiv(w, neg(w, x), neg(w, y)),
                        },
                    ),
                    BvSrem => bv(
                        w,
                        match (nx, ny) {
                            (false, false) => urem(x, y),
                            (true, false) => neg(w, urem(neg(w, x), y)),
                            (false, true) => urem(x, neg(w, y)),
                            (true, true) => neg(w, urem(neg(w, x), neg(w, y))),
                        },
                    ),
                    BvUlt => Val::Bool(x < y),
                    BvUle => Val::Bool(x <= y),
                    BvUgt => Val::Bool(x > y),
                    BvUge => Val::Bool(x >= y),
                    BvSlt => Val::Bool(sx < sy),
                    BvSle => Val::Bool(sx <= sy),
                    BvSgt => Val::Bool(sx > sy),
                    BvSge => Val::Bool(sx >= sy),
                    other => unreachable!("{other:?}"),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Answer {
    /// First satisfying assignment in enumeration order, by declared name.
    Sat(BTreeMap<String, Val>),
    Unsat,
}

#[derive(Debug)]
pub struct Outcome {
    pub answer: Answer,
    /// Some satisfying or refuting evaluation hit integer division by zero.
    pub undefined: bool,
    pub assignments: u64,
}

impl Script {
    pub fn parse(src: &str) -> Script {
        let mut c = Compiler { names: HashMap::new(), scopes: vec![], slots: 0 };
        let mut decls = Vec::new();
        let mut defs_src = Vec::new();
        let mut asserts_src = Vec::new();
        let mut logic = String::new();
        let mut get_value = Vec::new();
        for cmd in read(src) {
            let Sx::List(l) = cmd else { panic!("top-level atom") };
            let Sx::Atom(h) = &l[0] else { panic!() };
            match h.as_str() {
                "set-option" | "check-sat" | "exit" => {}
                "set-logic" => logic = atom(&l[1]),
                "declare-const" => decls.push((atom(&l[1]), sort(&l[2]))),
                "declare-fun" => {
                    assert_eq!(l[2], Sx::List(vec![]), "only nullary declarations");
                    decls.push((atom(&l[1]), sort(&l[3])));
                }
                "define-fun" => {
                    assert_eq!(l[2], Sx::List(vec![]), "only nullary definitions");
                    defs_src.push((atom(&l[1]), l[4].clone()));
                }
                "assert" => asserts_src.push(l[1].clone()),
                "get-value" => {
                    if let Sx::List(v) = &l[1] {
                        get_value = v
                            .iter()
                            .map(|x| match x {
                                Sx::Atom(a) => a.clone(),
                                other => format!("{other:?}"),
                            })
                            .collect();
                    }
                }
                other => panic!("unexpected command {other}"),
            }
        }
        for (n, _) in &decls {
            c.names.insert(n.clone(), c.slots);
            c.slots += 1;
        }
        let mut def_slots = Vec::new();
        for (n, _) in &defs_src {
            c.names.insert(n.clone(), c.slots);
            def_slots.push(c.slots);
            c.slots += 1;
        }
        // Definitions may only refer to earlier names; compiling after all
        // names are bound is fine because the script order is respected at
        // evaluation time.
        let defs = defs_src.iter().map(|(_, e)| c.expr(e)).collect();
        let asserts = asserts_src.iter().map(|e| c.expr(e)).collect();
        Script { decls, defs, asserts, slots: c.slots, logic, get_value }
    }

    /// Finite domain of each declared constant.
    fn domains(&self) -> Vec<Vec<Val>> {
        self.decls
            .iter()
            .enumerate()
            .map(|(i, (name, s))| match s {
                Sort::Bool => vec![Val::Bool(false), Val::Bool(true)],
                Sort::Bv(w) => {
                    assert!(*w <= 20, "`{name}` too wide to enumerate");
                    (0..1u128 << w).map(|v| Val::Bv(*w, v)).collect()
                }
                Sort::Int => {
                    let (lo, hi) = self.int_range(i).unwrap_or_else(|| panic!("no range assertion for `{name}`"));
                    (lo..=hi).map(Val::Int).collect()
                }
                Sort::Arr(..) => panic!("array-valued input `{name}`"),
            })
            .collect()
    }

    /// Bounds from an assertion `(and (<= lo x) (<= x hi))`.
    fn int_range(&self, slot: usize) -> Option<(i128, i128)> {
        let konst = |n: &Node| -> Option<i128> {
            match n {
                Node::Const(Val::Int(v)) => Some(*v),
                Node::App(Op::Sub, a) if a.len() == 1 => match &a[0] {
                    Node::Const(Val::Int(v)) => Some(-v),
                    _ => None,
                },
                _ => None,
            }
        };
        self.asserts.iter().find_map(|a| {
            let Node::App(Op::And, p) = a else { return None };
            let [Node::App(Op::Le, l), Node::App(Op::Le, r)] = p.as_slice() else { return None };
            match (&l[1], &r[0]) {
                (Node::Slot(x), Node::Slot(y)) if *x == slot && *y == slot => Some((konst(&l[0])?, konst(&r[1])?)),
                _ => None,
            }
        })
    }

    pub fn input_bits(&self) -> f64 {
        self.domains().iter().map(|d| (d.len() as f64).log2()).sum()
    }

    /// Does this assignment satisfy every assertion?
    pub fn check(&self, inputs: &[Val]) -> (bool, bool) {
        let mut ev = Eval { env: vec![Val::Bool(false); self.slots], undefined: false };
        for (i, v) in inputs.iter().enumerate() {
            ev.env[i] = v.clone();
        }
        for (j, d) in self.defs.iter().enumerate() {
            let v = ev.node(d);
            ev.env[self.decls.len() + j] = v;
        }
        let sat = self.asserts.iter().all(|a| ev.node(a).b());
        (sat, ev.undefined)
    }

    pub fn solve(&self) -> Outcome {
        let doms = self.domains();
        let mut idx = vec![0usize; doms.len()];
        let mut undefined = false;
        let mut assignments = 0;
        if doms.iter().any(|d| d.is_empty()) {
            return Outcome { answer: Answer::Unsat, undefined, assignments };
        }
        loop {
            let inputs: Vec<Val> = idx.iter().zip(&doms).map(|(&i, d)| d[i].clone()).collect();
            assignments += 1;
            let (sat, undef) = self.check(&inputs);
            undefined |= undef;
            if sat {
                let model = self.decls.iter().zip(inputs).map(|((n, _), v)| (n.clone(), v)).collect();
                return Outcome { answer: Answer::Sat(model), undefined, assignments };
            }
            // Odometer increment, last declaration fastest.
            let mut k = doms.len();
            loop {
                if k == 0 {
                    return Outcome { answer: Answer::Unsat, undefined, assignments };
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < doms[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

fn atom(s: &Sx) -> String {
    match s {
        Sx::Atom(a) => a.clone(),
        other => panic!("atom expected, got {other:?}"),
    }
}

pub fn solve(src: &str) -> Outcome {
    Script::parse(src).solve()
}
