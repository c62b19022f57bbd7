//! Seeded random MiniC programs for differential testing.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ty {
    Bool,
    U8,
    I8,
    U16,
    I16,
}

impl Ty {
    pub fn name(self) -> &'static str {
        match self {
            Ty::Bool => "bool",
            Ty::U8 => "u8",
            Ty::I8 => "i8",
            Ty::U16 => "u16",
            Ty::I16 => "i16",
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Ty::Bool => 1,
            Ty::U8 | Ty::I8 => 8,
            Ty::U16 | Ty::I16 => 16,
        }
    }

    fn signed(self) -> bool {
        matches!(self, Ty::I8 | Ty::I16)
    }

    fn int(self) -> bool {
        self != Ty::Bool
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_bits: u32,
    pub max_loops: u32,
    /// Only `+`, `-`, multiplication by constants and comparisons over
    /// small non-negative values, so integer reasoning is exact.
    pub linear: bool,
    pub calls: bool,
    pub arrays: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_bits: 20, max_loops: 2, linear: false, calls: true, arrays: true }
    }
}

pub struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    cfg: GenConfig,
    vars: Vec<(String, Ty)>,
    /// Loop counters; readable, never assigned by random statements.
    counters: Vec<String>,
    arrays: Vec<(String, Ty, u32)>,
    helper: Option<(Ty, Ty)>,
    loops: u32,
    fresh: u32,
    out: String,
    depth: usize,
}

impl<'r> Gen<'r> {
    pub fn new(rng: &'r mut ChaCha8Rng, cfg: GenConfig) -> Self {
        Gen { rng, cfg, vars: vec![], counters: vec![], arrays: vec![], helper: None, loops: 0, fresh: 0, out: String::new(), depth: 1 }
    }

    fn name(&mut self, p: &str) -> String {
        self.fresh += 1;
        format!("{p}{}", self.fresh)
    }

    fn line(&mut self, s: &str) {
        for _ in 0..self.depth {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn int_ty(&mut self) -> Ty {
        if self.cfg.linear {
            return Ty::U8;
        }
        *[Ty::U8, Ty::U8, Ty::I8, Ty::I8, Ty::U16, Ty::I16].choose(self.rng).unwrap()
    }

    fn lit(&mut self, t: Ty) -> String {
        match t {
            Ty::Bool => if self.rng.gen() { "true" } else { "false" }.into(),
            _ if self.cfg.linear => self.rng.gen_range(0..6).to_string(),
            _ => {
                let max: i64 = if t.bits() == 8 { 255 } else { 65535 };
                let v = match self.rng.gen_range(0..4) {
                    0 => self.rng.gen_range(0..=3),
                    1 => max,
                    2 => max / 2,
                    _ => self.rng.gen_range(0..=max),
                };
                if t.signed() && self.rng.gen_bool(0.3) {
                    format!("-{}", v.min(max / 2))
                } else {
                    v.to_string()
                }
            }
        }
    }

    fn leaf(&mut self, t: Ty) -> String {
        let mut cands: Vec<String> = self.vars.iter().filter(|(_, vt)| *vt == t).map(|(n, _)| n.clone()).collect();
        if t == Ty::U8 {
            cands.extend(self.counters.iter().cloned());
        }
        if !cands.is_empty() && self.rng.gen_bool(0.75) {
            return cands.choose(self.rng).unwrap().clone();
        }
        self.lit(t)
    }

    pub fn expr(&mut self, t: Ty, d: u32) -> String {
        if t == Ty::Bool {
            return self.cond(d);
        }
        if d == 0 || self.rng.gen_bool(0.3) {
            return self.leaf(t);
        }
        if self.cfg.linear {
            let a = self.expr(t, d - 1);
            return match self.rng.gen_range(0..4) {
                0 => format!("({a} + {})", self.expr(t, d - 1)),
                1 => format!("({a} - {})", self.leaf(t)),
                2 => format!("({a} * {})", self.rng.gen_range(0..3)),
                _ => a,
            };
        }
        match self.rng.gen_range(0..14) {
            0..=2 => {
                let op = ["+", "-", "*"].choose(self.rng).unwrap();
                format!("({} {op} {})", self.expr(t, d - 1), self.expr(t, d - 1))
            }
            3 => {
                let op = ["/", "%"].choose(self.rng).unwrap();
                format!("({} {op} {})", self.expr(t, d - 1), self.expr(t, d - 1))
            }
            4 => {
                let op = ["&", "|", "^"].choose(self.rng).unwrap();
                format!("({} {op} {})", self.expr(t, d - 1), self.expr(t, d - 1))
            }
            5 => {
                let op = ["<<", ">>"].choose(self.rng).unwrap();
                let amount = if self.rng.gen_bool(0.7) { self.rng.gen_range(0..t.bits() + 2).to_string() } else { self.leaf(t) };
                format!("({} {op} {amount})", self.expr(t, d - 1))
            }
            6 => format!("(-{})", self.expr(t, d - 1)),
            7 => format!("(~{})", self.expr(t, d - 1)),
            8 => {
                let from = self.int_ty();
                format!("cast<{}>({})", t.name(), self.expr(from, d - 1))
            }
            10 if self.helper.is_some_and(|(r, _)| r == t) => {
                let (_, a) = self.helper.unwrap();
                format!("h({}, {})", self.expr(a, d - 1), self.expr(a, d - 1))
            }
            11 => {
                let arrs: Vec<(String, Ty, u32)> = self.arrays.iter().filter(|a| a.1 == t).cloned().collect();
                match arrs.choose(self.rng) {
                    Some((n, _, _)) => format!("{n}[{}]", self.index()),
                    None => self.leaf(t),
                }
            }
            _ => self.leaf(t),
        }
    }

    fn index(&mut self) -> String {
        if self.rng.gen_bool(0.6) {
            self.rng.gen_range(0..4).to_string()
        } else {
            self.expr(Ty::U8, 1)
        }
    }

    pub fn cond(&mut self, d: u32) -> String {
        let bools: Vec<String> = self.vars.iter().filter(|v| v.1 == Ty::Bool).map(|v| v.0.clone()).collect();
        match self.rng.gen_range(0..10) {
            0 if !bools.is_empty() => bools.choose(self.rng).unwrap().clone(),
            1 if d > 0 => format!("!({})", self.cond(d - 1)),
            2 if d > 0 => {
                let op = ["&&", "||"].choose(self.rng).unwrap();
                format!("({} {op} {})", self.cond(d - 1), self.cond(d - 1))
            }
            3 if !bools.is_empty() => format!("({} == {})", bools.choose(self.rng).unwrap(), self.cond(0)),
            _ => {
                let t = self.int_ty();
                let op = ["==", "!=", "<", "<=", ">", ">="].choose(self.rng).unwrap();
                format!("({} {op} {})", self.expr(t, d.min(2)), self.expr(t, d.min(2)))
            }
        }
    }

    fn assign(&mut self) {
        let roll = self.rng.gen_range(0..10);
        if roll == 0 && !self.arrays.is_empty() {
            let (n, t, _) = self.arrays.choose(self.rng).unwrap().clone();
            let (i, v) = (self.index(), self.expr(t, 2));
            self.line(&format!("{n}[{i}] = {v};"));
            return;
        }
        if let Some((n, t)) = self.vars.choose(self.rng).cloned() {
            let v = self.expr(t, 2);
            self.line(&format!("{n} = {v};"));
        }
    }

    fn stmt(&mut self, budget: u32) {
        match self.rng.gen_range(0..10) {
            0..=3 => self.assign(),
            4 => {
                let c = self.cond(2);
                self.line(&format!("assert({c});"));
            }
            5 if self.rng.gen_bool(0.4) => {
                let c = self.cond(1);
                self.line(&format!("assume({c});"));
            }
            6 if budget > 0 => {
                let c = self.cond(2);
                self.line(&format!("if ({c}) {{"));
                self.depth += 1;
                self.block(budget - 1, 2);
                self.depth -= 1;
                if self.rng.gen() {
                    self.line("} else {");
                    self.depth += 1;
                    self.block(budget - 1, 2);
                    self.depth -= 1;
                }
                self.line("}");
            }
            7..=8 if budget > 0 && self.loops < self.cfg.max_loops => {
                self.loops += 1;
                let i = self.name("k");
                let limit =
                    if self.rng.gen_bool(0.5) { self.rng.gen_range(0..5).to_string() } else { format!("({} % 5)", self.leaf(Ty::U8)) };
                let limit = if self.cfg.linear { self.rng.gen_range(0..4).to_string() } else { limit };
                if self.rng.gen() {
                    self.line(&format!("for (u8 {i} = 0; {i} < {limit}; {i} = {i} + 1) {{"));
                    self.depth += 1;
                    self.counters.push(i.clone());
                    self.block(budget - 1, 2);
                } else {
                    self.line(&format!("u8 {i} = 0;"));
                    self.line(&format!("while ({i} < {limit}) {{"));
                    self.depth += 1;
                    self.counters.push(i.clone());
                    self.block(budget - 1, 2);
                    self.line(&format!("{i} = {i} + 1;"));
                }
                self.counters.pop();
                self.depth -= 1;
                self.line("}");
            }
            _ => self.assign(),
        }
    }

    fn block(&mut self, budget: u32, n: u32) {
        let n = self.rng.gen_range(1..=n);
        for _ in 0..n {
            self.stmt(budget);
        }
    }

    /// A complete program whose entry is `main`. Nondets are read only at
    /// the top of `main`, so the input width is known up front.
    pub fn program(mut self) -> String {
        let mut src = String::new();
        if self.cfg.calls && !self.cfg.linear && self.rng.gen_bool(0.3) {
            let r = self.int_ty();
            let a = self.int_ty();
            let saved = std::mem::take(&mut self.vars);
            self.vars = vec![("p".into(), a), ("q".into(), a)];
            let body = self.expr(r, 2);
            let check = self.cond(1);
            self.vars = saved;
            src.push_str(&format!("{} h({} p, {} q) {{\n    assert({check});\n    return {body};\n}}\n", r.name(), a.name(), a.name()));
            self.helper = Some((r, a));
        }
        // Inputs.
        let mut bits = 0;
        let budget = match self.rng.gen_range(0..20) {
            0 => self.cfg.max_bits,
            1..=4 => self.cfg.max_bits.min(16),
            _ => self.cfg.max_bits.min(10),
        };
        let n_inputs = self.rng.gen_range(1..=3);
        for _ in 0..n_inputs {
            let t = if self.rng.gen_bool(0.25) { Ty::Bool } else { self.int_ty() };
            if bits + t.bits() > budget {
                continue;
            }
            bits += t.bits();
            let n = self.name("v");
            self.line(&format!("{} {n} = nondet_{}();", t.name(), t.name()));
            self.vars.push((n, t));
        }
        for _ in 0..self.rng.gen_range(0..3) {
            let t = if self.rng.gen_bool(0.2) { Ty::Bool } else { self.int_ty() };
            let init = self.expr(t, 2);
            let n = self.name("x");
            self.line(&format!("{} {n} = {init};", t.name()));
            self.vars.push((n, t));
        }
        if self.cfg.arrays && !self.cfg.linear && self.rng.gen_bool(0.3) {
            let t = self.int_ty();
            let n = self.name("a");
            self.line(&format!("{} {n}[3];", t.name()));
            self.arrays.push((n, t, 3));
        }
        for _ in 0..self.rng.gen_range(2..=5) {
            self.stmt(2);
        }
        let c = self.cond(2);
        self.line(&format!("assert({c});"));
        src.push_str("void main() {\n");
        src.push_str(&self.out);
        src.push_str("}\n");
        src
    }
}

pub fn program(rng: &mut ChaCha8Rng, cfg: GenConfig) -> String {
    Gen::new(rng, cfg).program()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}
