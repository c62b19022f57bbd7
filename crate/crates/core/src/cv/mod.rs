//! Continuous verification: diff two versions, gate on equivalence, verify
//! the impacted slice and cache verdicts.

pub mod cache;
pub mod plan;
pub mod run;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

pub use cache::{Cache, CacheEntry, CacheKey, CachedVerdict};
pub use plan::{make_plan, ChangePlan, Decision, TestCase, TestInput};
pub use run::{run_cv, run_plan, CvConfig, CvError, CvReport, CvVerdict, PlanStats};

use crate::equiv::{EquivStatus, EquivVerdict};
use crate::frontend::ast::{ExprKind, Program, StmtKind};
use crate::frontend::hash::{canonical_form, Hash256};
use crate::frontend::pretty;
use crate::frontend::CallGraph;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ChangeSet {
    pub added: BTreeSet<String>,
    pub removed: BTreeSet<String>,
    pub modified_same_signature: BTreeSet<String>,
    pub modified_signature_changed: BTreeSet<String>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty()
            && self.removed.is_empty()
            && self.modified_same_signature.is_empty()
            && self.modified_signature_changed.is_empty()
    }
}

/// Globals a function mentions by name.
fn referenced_globals(p: &Program, f: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let Some(def) = p.function(f) else { return out };
    let mut note = |n: &String| {
        if p.global(n).is_some() {
            out.insert(n.clone());
        }
    };
    def.walk_stmts(&mut |s| match &s.kind {
        StmtKind::Assign { name, .. } => note(name),
        StmtKind::Store { array, .. } => note(array),
        _ => {}
    });
    def.walk_exprs(&mut |e| match &e.kind {
        ExprKind::Var(n) | ExprKind::Index(n, _) => note(n),
        _ => {}
    });
    out
}

/// Rename-invariant hash of a function together with the declarations of
/// the globals it touches, so a changed initializer counts as a change.
pub fn fingerprint(p: &Program, f: &str) -> Option<Hash256> {
    let def = p.function(f)?;
    let mut text = canonical_form(def);
    for g in referenced_globals(p, f) {
        let g = p.global(&g).expect("referenced global");
        text.push('\n');
        text.push_str(&pretty::global(g));
    }
    Some(Hash256::of(text.as_bytes()))
}

/// Fingerprint of a function and everything it calls, keyed by name. This
/// is what a cached verdict for the function depends on.
pub fn closure_hash(p: &Program, f: &str) -> Option<Hash256> {
    let mut names: BTreeSet<String> = CallGraph::build(p).transitive_callees(f);
    names.insert(f.to_string());
    let mut text = String::new();
    for n in names {
        text.push_str(&format!("{n} {}\n", fingerprint(p, &n)?));
    }
    Some(Hash256::of(text.as_bytes()))
}

pub fn diff_versions(old: &Program, new: &Program) -> ChangeSet {
    let mut cs = ChangeSet::default();
    for f in &new.functions {
        match old.function(&f.name) {
            None => {
                cs.added.insert(f.name.clone());
            }
            Some(o) if o.signature() != f.signature() => {
                cs.modified_signature_changed.insert(f.name.clone());
            }
            Some(_) if fingerprint(old, &f.name) != fingerprint(new, &f.name) => {
                cs.modified_same_signature.insert(f.name.clone());
            }
            Some(_) => {}
        }
    }
    for f in &old.functions {
        if new.function(&f.name).is_none() {
            cs.removed.insert(f.name.clone());
        }
    }
    cs
}

/// Functions to re-verify: every change not proven equivalent, plus all of
/// their transitive callers in the new version. A missing or non-equivalent
/// verdict counts as a real change.
pub fn compute_impact(cs: &ChangeSet, equiv: &BTreeMap<String, EquivVerdict>, cg: &CallGraph) -> BTreeSet<String> {
    let mut roots: BTreeSet<String> = cs.added.union(&cs.modified_signature_changed).cloned().collect();
    for f in &cs.modified_same_signature {
        if equiv.get(f).map(|v| v.status) != Some(EquivStatus::EquivalentUpToK) {
            roots.insert(f.clone());
        }
    }
    let mut out = roots.clone();
    for r in &roots {
        out.extend(cg.transitive_callers(r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_and_check;

    fn p(src: &str) -> Program {
        parse_and_check(src).unwrap()
    }

    fn verdict(f: &str, status: EquivStatus) -> (String, EquivVerdict) {
        (f.into(), EquivVerdict { function: f.into(), status, bound: 1, witness: None, reason: None, solver_calls: 0 })
    }

    #[test]
    fn diff_classification() {
        let base = "u8 f(u8 x){ return x + 1; } u8 g(u8 y){ return f(y); } void h(){ }";
        assert!(diff_versions(&p(base), &p(base)).is_empty());
        let renamed = "u8 f(u8 z){ return z + 1; } u8 g(u8 y){ return f(y); } void h(){ }";
        assert!(diff_versions(&p(base), &p(renamed)).is_empty());
        let lit = "u8 f(u8 x){ return x + 2; } u8 g(u8 y){ return f(y); } void h(){ }";
        let cs = diff_versions(&p(base), &p(lit));
        assert_eq!(cs.modified_same_signature, BTreeSet::from(["f".to_string()]));
        assert!(cs.added.is_empty() && cs.modified_signature_changed.is_empty());
        let sig = "u8 f(u8 x, u8 w){ return x + 1; } u8 g(u8 y){ return f(y, 0); } void k(){ }";
        let cs = diff_versions(&p(base), &p(sig));
        assert_eq!(cs.modified_signature_changed, BTreeSet::from(["f".to_string()]));
        assert_eq!(cs.modified_same_signature, BTreeSet::from(["g".to_string()]));
        assert_eq!(cs.added, BTreeSet::from(["k".to_string()]));
        assert_eq!(cs.removed, BTreeSet::from(["h".to_string()]));
    }

    #[test]
    fn global_initializer_is_part_of_the_fingerprint() {
        let cs = diff_versions(&p("u8 c = 1; u8 f(){ return c; }"), &p("u8 c = 2; u8 f(){ return c; }"));
        assert_eq!(cs.modified_same_signature, BTreeSet::from(["f".to_string()]));
    }

    #[test]
    fn impact_closure_and_gating() {
        let prog = p("u8 f(u8 x){ return x; } u8 g(u8 x){ return f(x); } void main(){ u8 r = g(1); } u8 other(){ return 0; }");
        let cg = CallGraph::build(&prog);
        let cs = ChangeSet { modified_same_signature: BTreeSet::from(["f".into()]), ..Default::default() };
        let non = BTreeMap::from([verdict("f", EquivStatus::NotEquivalent)]);
        let want: BTreeSet<String> = ["f", "g", "main"].map(String::from).into();
        assert_eq!(compute_impact(&cs, &non, &cg), want);
        let unknown = BTreeMap::from([verdict("f", EquivStatus::Unknown)]);
        assert_eq!(compute_impact(&cs, &unknown, &cg), want);
        let eq = BTreeMap::from([verdict("f", EquivStatus::EquivalentUpToK)]);
        assert!(compute_impact(&cs, &eq, &cg).is_empty());
    }
}
