//! Racing several strategies on one VC.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::thread;

use super::strategy::Strategy;
use super::{run_strategy, SolveError, SolveResult, SolveStatus};
use crate::encode::Precision;
use crate::vcgen::VerificationCondition;

#[derive(Default)]
struct Judge {
    winner: Option<SolveResult>,
    held: Option<SolveResult>,
    failed: Vec<SolveResult>,
}

impl Judge {
    /// Returns true once a winner is known.
    fn offer(&mut self, r: SolveResult) -> bool {
        match (r.status, r.precision) {
            // Approximate sat results reaching here already replayed exactly.
            (SolveStatus::Sat, _) | (SolveStatus::Unsat, Precision::Precise) => {
                self.winner.get_or_insert(r);
                true
            }
            (SolveStatus::Unsat, Precision::Approximate) => {
                self.held.get_or_insert(r);
                false
            }
            _ => {
                self.failed.push(r);
                false
            }
        }
    }

    fn verdict(self) -> Result<SolveResult, SolveError> {
        self.winner.or(self.held).ok_or(SolveError::AllFailed(self.failed))
    }
}

/// First precise answer wins and cancels the rest. An approximate unsat is
/// reported, still labelled approximate, only when nothing precise arrives.
/// With `parallel == false` strategies run in order with early exit.
pub fn solve_portfolio(vc: &VerificationCondition, strategies: &[Strategy], parallel: bool) -> Result<SolveResult, SolveError> {
    let mut judge = Judge::default();
    let cancel = AtomicBool::new(false);
    if !parallel || strategies.len() == 1 {
        for s in strategies {
            if judge.offer(run_strategy(vc, s, &cancel)) {
                break;
            }
        }
        return judge.verdict();
    }
    thread::scope(|scope| {
        let (tx, rx) = mpsc::channel();
        for s in strategies {
            let tx = tx.clone();
            let cancel = &cancel;
            scope.spawn(move || {
                let _ = tx.send(run_strategy(vc, s, cancel));
            });
        }
        drop(tx);
        for r in rx {
            if judge.winner.is_some() {
                continue;
            }
            if judge.offer(r) {
                cancel.store(true, Ordering::Relaxed);
            }
        }
    });
    judge.verdict()
}
