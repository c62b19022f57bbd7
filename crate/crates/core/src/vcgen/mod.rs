//! Property instrumentation and verification-condition generation.

pub mod fold;
pub mod instrument;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

pub use fold::fold_program;
pub use instrument::instrument_properties;

use crate::frontend::ast::{Ctx, Span};
pub use crate::transform::ssa::PropertyKind;
use crate::transform::ssa::*;

/// Identity of a claim instance: where it comes from, what it checks and in
/// which call/loop context.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ClaimKey {
    pub span: Span,
    pub kind: PropertyKind,
    pub ctx: Ctx,
}

impl fmt::Display for ClaimKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.span, self.kind)?;
        if !self.ctx.is_empty() {
            write!(f, "@{}", self.ctx)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct VerificationCondition {
    /// `<function>:<line>:<col>:<kind>:<ordinal>`
    pub id: String,
    /// The whole program; the VC covers the steps before `claim_step`.
    pub ssa: Arc<SsaProgram>,
    pub claim_step: usize,
    /// Holds unless the claim is violated: `guard → prop`.
    pub property: SsaExpr,
    pub kind: PropertyKind,
    pub span: Span,
    pub ctx: Ctx,
    /// Indices into `ssa.nondet_symbols` that the VC depends on, ascending.
    pub symbols: Vec<usize>,
    /// Additional constraints over the inputs, e.g. from test cases.
    pub extra: Vec<SsaExpr>,
}

impl VerificationCondition {
    /// Steps before the claim. Earlier claims among them act as constraints.
    pub fn steps(&self) -> &[SsaStep] {
        &self.ssa.steps[..self.claim_step]
    }

    /// Steps of `steps()` that can influence a constraint, an earlier claim,
    /// an extra constraint or the property. Order is preserved.
    pub fn relevant_steps(&self) -> Vec<&SsaStep> {
        let steps = self.steps();
        let mut needed: BTreeSet<VarId> = BTreeSet::new();
        self.property.vars(&mut needed);
        for e in &self.extra {
            e.vars(&mut needed);
        }
        let mut keep = vec![false; steps.len()];
        for (i, s) in steps.iter().enumerate().rev() {
            let take = match s.kind {
                StepKind::Constraint { .. } | StepKind::Claim { .. } => true,
                _ => s.defined().is_some_and(|v| needed.contains(&v)),
            };
            if take {
                keep[i] = true;
                needed.extend(s.uses());
            }
        }
        steps.iter().zip(keep).filter(|(_, k)| *k).map(|(s, _)| s).collect()
    }

    pub fn claim_key(&self) -> ClaimKey {
        ClaimKey { span: self.span, kind: self.kind, ctx: self.ctx.clone() }
    }

    pub fn input_bits(&self) -> u32 {
        self.symbols.iter().map(|&i| self.ssa.nondet_symbols[i].ty.width()).sum()
    }

    /// Copy with additional input constraints.
    pub fn with_extra(&self, extra: Vec<SsaExpr>) -> VerificationCondition {
        let mut vc = self.clone();
        let mut syms: BTreeSet<usize> = vc.symbols.iter().copied().collect();
        for e in &extra {
            e.syms(&mut syms);
        }
        vc.symbols = syms.into_iter().collect();
        vc.extra.extend(extra);
        vc
    }
}

/// Fold, instrument the requested checks, fold again.
pub fn prepare(mut s: SsaProgram, checks: &BTreeSet<PropertyKind>) -> SsaProgram {
    fold_program(&mut s);
    let mut s = instrument_properties(&s, checks);
    fold_program(&mut s);
    s
}

pub fn generate_vcs(s: &SsaProgram) -> Vec<VerificationCondition> {
    let ssa = Arc::new(s.clone());
    let mut out = Vec::new();
    let mut ordinals: HashMap<(Span, PropertyKind), usize> = HashMap::new();
    let mut seen_syms: BTreeSet<usize> = BTreeSet::new();
    for (i, step) in s.steps.iter().enumerate() {
        if let StepKind::Claim { prop, kind } = &step.kind {
            let ord = ordinals.entry((step.span, *kind)).or_insert(0);
            let id = format!("{}:{}:{}:{}:{}", s.entry_function, step.span.line, step.span.col, kind, ord);
            *ord += 1;
            let property = SsaExpr::implies(step.guard.clone(), prop.clone());
            let mut syms = seen_syms.clone();
            property.syms(&mut syms);
            out.push(VerificationCondition {
                id,
                ssa: ssa.clone(),
                claim_step: i,
                property,
                kind: *kind,
                span: step.span,
                ctx: step.ctx.clone(),
                symbols: syms.into_iter().collect(),
                extra: Vec::new(),
            });
        }
        step.guard.syms(&mut seen_syms);
        for e in step.exprs() {
            e.syms(&mut seen_syms);
        }
    }
    out
}
