//! Concrete evaluation of SSA programs and verification conditions.

use std::collections::BTreeMap;
use std::rc::Rc;

use crate::frontend::ast::{BinaryOp, VarType};
use crate::semantics::{self, Semantics, UnsupportedOp};
use crate::transform::ssa::*;
use crate::vcgen::VerificationCondition;

/// Total map from index keys to values, zero by default.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ArrayValue {
    /// Keys `0..n`.
    pub elems: Vec<i128>,
    /// Keys outside the declared range.
    pub outside: BTreeMap<i128, i128>,
}

impl ArrayValue {
    pub fn zeros(n: u32) -> ArrayValue {
        ArrayValue { elems: vec![0; n as usize], outside: BTreeMap::new() }
    }

    pub fn get(&self, key: i128) -> i128 {
        if key >= 0 && (key as usize) < self.elems.len() {
            self.elems[key as usize]
        } else {
            self.outside.get(&key).copied().unwrap_or(0)
        }
    }

    pub fn set(&mut self, key: i128, v: i128) {
        if key >= 0 && (key as usize) < self.elems.len() {
            self.elems[key as usize] = v;
        } else if v == 0 {
            self.outside.remove(&key);
        } else {
            self.outside.insert(key, v);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Unset,
    Scalar(i128),
    Array(Rc<ArrayValue>),
}

impl Value {
    pub fn scalar(&self) -> i128 {
        match self {
            Value::Scalar(v) => *v,
            _ => 0,
        }
    }
}

pub struct Env<'a> {
    pub ssa: &'a SsaProgram,
    pub sem: Semantics,
    pub inputs: &'a [i128],
    pub vals: Vec<Value>,
}

impl<'a> Env<'a> {
    /// `inputs` is indexed like `ssa.nondet_symbols`.
    pub fn new(ssa: &'a SsaProgram, inputs: &'a [i128], sem: Semantics) -> Env<'a> {
        Env { ssa, sem, inputs, vals: vec![Value::Unset; ssa.vars.len()] }
    }

    fn array(&self, v: VarId) -> &ArrayValue {
        match &self.vals[v.0 as usize] {
            Value::Array(a) => a,
            _ => panic!("array version {} not defined", self.ssa.var_name(v)),
        }
    }

    pub fn eval(&self, e: &SsaExpr) -> Result<i128, UnsupportedOp> {
        Ok(match &e.kind {
            SsaExprKind::Const(v) => *v,
            SsaExprKind::Var(v) => self.vals[v.0 as usize].scalar(),
            SsaExprKind::Sym(i) => self.inputs.get(*i).copied().unwrap_or(0),
            SsaExprKind::Unary(op, a) => semantics::eval_unary(*op, a.ty, self.eval(a)?, self.sem)?,
            SsaExprKind::Binary { op, l, r, .. } => {
                let a = self.eval(l)?;
                match op {
                    BinaryOp::And if a == 0 => return Ok(0),
                    BinaryOp::Or if a != 0 => return Ok(1),
                    _ => {}
                }
                semantics::eval_binary(*op, l.ty, a, self.eval(r)?, self.sem)?
            }
            SsaExprKind::Select { array, index, .. } => {
                let key = semantics::index_key(index.ty, self.eval(index)?, self.sem);
                self.array(*array).get(key)
            }
            SsaExprKind::Cast(a) => semantics::eval_cast(a.ty, e.ty, self.eval(a)?),
            SsaExprKind::Ite(c, a, b) => {
                if self.eval(c)? != 0 {
                    self.eval(a)?
                } else {
                    self.eval(b)?
                }
            }
            SsaExprKind::NoOverflow(op, a, b) => semantics::no_overflow(*op, a.ty, self.eval(a)?, self.eval(b)?) as i128,
            SsaExprKind::InBounds(a, n) => semantics::in_bounds(semantics::index_key(a.ty, self.eval(a)?, self.sem), *n) as i128,
        })
    }

    /// Execute a value-defining step. Returns the verdict for constraint and
    /// claim steps: `Some(false)` when the guard holds and the condition fails.
    pub fn step(&mut self, s: &SsaStep) -> Result<Option<bool>, UnsupportedOp> {
        match &s.kind {
            StepKind::Define { var, value } => {
                self.vals[var.0 as usize] = Value::Scalar(self.eval(value)?);
                Ok(None)
            }
            StepKind::ArrayInit { var } => {
                let VarType::Array(_, n) = self.ssa.var(*var).ty else { unreachable!() };
                self.vals[var.0 as usize] = Value::Array(Rc::new(ArrayValue::zeros(n)));
                Ok(None)
            }
            StepKind::ArrayStore { out, input, index, value } => {
                let key = semantics::index_key(index.ty, self.eval(index)?, self.sem);
                let v = self.eval(value)?;
                let mut arr = match &self.vals[input.0 as usize] {
                    Value::Array(a) => a.clone(),
                    _ => unreachable!(),
                };
                Rc::make_mut(&mut arr).set(key, v);
                self.vals[out.0 as usize] = Value::Array(arr);
                Ok(None)
            }
            StepKind::Merge { target, cond, then_v, else_v } => {
                let pick = if self.eval(cond)? != 0 { then_v } else { else_v };
                self.vals[target.0 as usize] = self.vals[pick.0 as usize].clone();
                Ok(None)
            }
            StepKind::Constraint { cond, .. } => Ok(Some(self.eval(&s.guard)? == 0 || self.eval(cond)? != 0)),
            StepKind::Claim { prop, .. } => Ok(Some(self.eval(&s.guard)? == 0 || self.eval(prop)? != 0)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VcEval {
    /// Constraints hold and the property fails.
    Violated,
    /// Constraints hold and the property holds.
    Holds,
    /// Some constraint or earlier claim fails.
    Excluded,
}

/// Evaluate one VC on a full input vector.
pub fn eval_vc(vc: &VerificationCondition, inputs: &[i128], sem: Semantics) -> Result<VcEval, UnsupportedOp> {
    let steps: Vec<&SsaStep> = vc.steps().iter().collect();
    eval_vc_steps(vc, &steps, inputs, sem)
}

/// Like [`eval_vc`] over a subset of the VC's steps, such as
/// `vc.relevant_steps()`.
pub fn eval_vc_steps(vc: &VerificationCondition, steps: &[&SsaStep], inputs: &[i128], sem: Semantics) -> Result<VcEval, UnsupportedOp> {
    let mut env = Env::new(&vc.ssa, inputs, sem);
    for e in &vc.extra {
        if env.eval(e)? == 0 {
            return Ok(VcEval::Excluded);
        }
    }
    for s in steps.iter().copied() {
        if env.step(s)? == Some(false) {
            return Ok(VcEval::Excluded);
        }
    }
    Ok(if env.eval(&vc.property)? != 0 { VcEval::Holds } else { VcEval::Violated })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SsaRunOutcome {
    Completed,
    /// Index of the first failing claim step.
    Violated(usize),
    /// Index of the first failing constraint step.
    Blocked(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SsaRun {
    pub outcome: SsaRunOutcome,
    pub globals: Vec<(String, Value)>,
    pub ret: Option<i128>,
}

/// Run a whole SSA program; stops at the first failing claim or constraint.
pub fn run_ssa(ssa: &SsaProgram, inputs: &[i128], sem: Semantics) -> Result<SsaRun, UnsupportedOp> {
    let mut env = Env::new(ssa, inputs, sem);
    let mut outcome = SsaRunOutcome::Completed;
    for (i, s) in ssa.steps.iter().enumerate() {
        if env.step(s)? == Some(false) {
            outcome = match s.kind {
                StepKind::Claim { .. } => SsaRunOutcome::Violated(i),
                _ => SsaRunOutcome::Blocked(i),
            };
            break;
        }
    }
    let done = outcome == SsaRunOutcome::Completed;
    let globals =
        if done { ssa.globals_out.iter().map(|(n, v)| (n.clone(), env.vals[v.0 as usize].clone())).collect() } else { Vec::new() };
    let ret = if done { ssa.ret.map(|v| env.vals[v.0 as usize].scalar()) } else { None };
    Ok(SsaRun { outcome, globals, ret })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{ast::UnwindingMode, parse_and_check};
    use crate::vcgen::{generate_vcs, prepare};

    fn vcs(src: &str) -> Vec<VerificationCondition> {
        let p = parse_and_check(src).unwrap();
        let s = crate::transform::lower(&p, "main", 2, UnwindingMode::Assertion).unwrap();
        generate_vcs(&prepare(s, &PropertyKind::ALL.into_iter().collect()))
    }

    #[test]
    fn overflow_claim_violated_at_127_plus_1() {
        let v = vcs("void main(){ i8 x = nondet_i8(); i8 y = nondet_i8(); i8 z = x + y; }");
        assert_eq!(v.len(), 1);
        assert_eq!(eval_vc(&v[0], &[127, 1], Semantics::Exact).unwrap(), VcEval::Violated);
        assert_eq!(eval_vc(&v[0], &[126, 1], Semantics::Exact).unwrap(), VcEval::Holds);
    }

    #[test]
    fn prior_claims_exclude() {
        let v = vcs("void main(){ u8 x = nondet_u8(); assert(x != 5); assert(x != 5 && x != 6); }");
        assert_eq!(eval_vc(&v[1], &[5], Semantics::Exact).unwrap(), VcEval::Excluded);
        assert_eq!(eval_vc(&v[1], &[6], Semantics::Exact).unwrap(), VcEval::Violated);
    }

    #[test]
    fn unwinding_assertion_with_one_copy() {
        let p = parse_and_check("void main(){ u8 i = 0; while (i < 2) { i = i + 1; } }").unwrap();
        let s = crate::transform::lower(&p, "main", 1, UnwindingMode::Assertion).unwrap();
        let v = generate_vcs(&prepare(s, &Default::default()));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, PropertyKind::UnwindingAssertion);
        assert_eq!(eval_vc(&v[0], &[], Semantics::Exact).unwrap(), VcEval::Violated);
    }

    #[test]
    fn arrays_are_total_maps() {
        let p = parse_and_check("u8 main(){ u8 a[2]; a[5] = 3; return a[5]; }").unwrap();
        let s = crate::transform::lower(&p, "main", 1, UnwindingMode::Assertion).unwrap();
        let r = run_ssa(&s, &[], Semantics::Exact).unwrap();
        assert_eq!(r.ret, Some(3));
    }

    #[test]
    fn unbounded_semantics_does_not_wrap() {
        let p = parse_and_check("bool main(u8 x){ u8 y = x + 1; return y == 0; }").unwrap();
        let s = crate::transform::lower(&p, "main", 1, UnwindingMode::Assertion).unwrap();
        assert_eq!(run_ssa(&s, &[255], Semantics::Exact).unwrap().ret, Some(1));
        assert_eq!(run_ssa(&s, &[255], Semantics::Unbounded).unwrap().ret, Some(0));
    }
}
