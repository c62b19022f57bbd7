use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::ast::Program;

/// Direct caller→callee edges of a program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CallGraph {
    callees: BTreeMap<String, BTreeSet<String>>,
    callers: BTreeMap<String, BTreeSet<String>>,
}

impl CallGraph {
    pub fn build(p: &Program) -> CallGraph {
        let mut cg = CallGraph::default();
        for f in &p.functions {
            cg.callees.entry(f.name.clone()).or_default();
            cg.callers.entry(f.name.clone()).or_default();
        }
        for f in &p.functions {
            for c in f.callees() {
                cg.callees.entry(f.name.clone()).or_default().insert(c.clone());
                cg.callers.entry(c).or_default().insert(f.name.clone());
            }
        }
        cg
    }

    pub fn callees(&self, f: &str) -> impl Iterator<Item = &String> {
        self.callees.get(f).into_iter().flatten()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&String, &String)> {
        self.callees.iter().flat_map(|(f, cs)| cs.iter().map(move |c| (f, c)))
    }

    fn closure(map: &BTreeMap<String, BTreeSet<String>>, start: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut work: VecDeque<&str> = VecDeque::from([start]);
        while let Some(n) = work.pop_front() {
            for m in map.get(n).into_iter().flatten() {
                if seen.insert(m.clone()) {
                    work.push_back(m);
                }
            }
        }
        seen
    }

    pub fn transitive_callers(&self, f: &str) -> BTreeSet<String> {
        Self::closure(&self.callers, f)
    }

    pub fn transitive_callees(&self, f: &str) -> BTreeSet<String> {
        Self::closure(&self.callees, f)
    }

    /// A call cycle as a closed path `[f, g, f]`, if one exists.
    pub fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        fn dfs(cg: &CallGraph, n: &str, marks: &mut BTreeMap<String, Mark>, stack: &mut Vec<String>) -> Option<Vec<String>> {
            marks.insert(n.to_string(), Mark::Open);
            stack.push(n.to_string());
            for c in cg.callees(n) {
                match marks.get(c) {
                    Some(Mark::Open) => {
                        let start = stack.iter().position(|s| s == c).unwrap_or(0);
                        let mut cyc = stack[start..].to_vec();
                        cyc.push(c.clone());
                        return Some(cyc);
                    }
                    Some(Mark::Done) => {}
                    None => {
                        if let Some(cyc) = dfs(cg, c, marks, stack) {
                            return Some(cyc);
                        }
                    }
                }
            }
            stack.pop();
            marks.insert(n.to_string(), Mark::Done);
            None
        }
        let mut marks = BTreeMap::new();
        for f in self.callees.keys() {
            if !marks.contains_key(f) {
                if let Some(c) = dfs(self, f, &mut marks, &mut Vec::new()) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Callees before callers.
    pub fn topo_order(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        fn visit(cg: &CallGraph, n: &str, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
            if !seen.insert(n.to_string()) {
                return;
            }
            for c in cg.callees(n) {
                visit(cg, c, seen, out);
            }
            out.push(n.to_string());
        }
        for f in self.callees.keys() {
            visit(self, f, &mut seen, &mut out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_and_check;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn chain_of_callers() {
        let p = parse_and_check("void g(){} void f(){ g(); } void main(){ f(); } void h(){}").unwrap();
        let cg = CallGraph::build(&p);
        assert_eq!(cg.transitive_callers("g"), set(&["f", "main"]));
        assert_eq!(cg.transitive_callers("h"), set(&[]));
        assert_eq!(cg.transitive_callees("main"), set(&["f", "g"]));
        let topo = cg.topo_order();
        let pos = |n: &str| topo.iter().position(|x| x == n).unwrap();
        assert!(pos("g") < pos("f") && pos("f") < pos("main"));
    }

    #[test]
    fn fan_out() {
        let p = parse_and_check("void f(){} void g(){} void main(){ f(); g(); }").unwrap();
        let cg = CallGraph::build(&p);
        assert_eq!(cg.transitive_callers("f"), set(&["main"]));
        assert_eq!(cg.edges().count(), 2);
    }
}
