//! From a 1-balanced execution to a 1-constrained one over `N` copies.
//!
//! In atomic form a 1-constrained execution is a word in which no two edge
//! letters are adjacent (adjacent communications get a trivial step in
//! between). Node-disjoint copies may interleave freely, so the task is to
//! shuffle `N` copies of the atomic word of `e` with every repeated
//! reconfiguration letter of one copy preceded by a communication of
//! another. Copies are interchangeable, so the search runs over the sorted
//! vector of copy positions and memoises dead ends.

use std::collections::HashSet;

use super::{offset, Builder, TransformError};
use crate::model::execution::{Execution, Step};
use crate::model::policy::{ConstraintPolicy, Regime};
use crate::model::protocol::BroadcastProtocol;
use crate::model::validate::{atomic_word, is_repeated_comm, phase_decomposition, validate_execution, Letter};

const NODE_LIMIT: usize = 2_000_000;

struct Scheduler<'a> {
    word: &'a [Letter],
    pos: Vec<usize>,
    order: Vec<(usize, usize)>,
    dead: HashSet<(Vec<usize>, bool)>,
    nodes: usize,
}

impl Scheduler<'_> {
    fn key(&self, last_atom: bool) -> (Vec<usize>, bool) {
        let mut k = self.pos.clone();
        k.sort_unstable();
        (k, last_atom)
    }

    /// Candidate copies, one per distinct position, best first: atoms from
    /// the most advanced copy, then communications not needed by their
    /// own copy's next atom, then the rest, trailing copies first.
    fn candidates(&self, last_atom: bool) -> Vec<usize> {
        let len = self.word.len();
        let mut seen = HashSet::new();
        let mut out: Vec<(u8, isize, usize)> = Vec::new();
        for (c, &p) in self.pos.iter().enumerate() {
            if p == len || !seen.insert(p) {
                continue;
            }
            let rank = match self.word[p] {
                Letter::Atom { .. } if last_atom => continue,
                Letter::Atom { .. } => (0, -(p as isize)),
                Letter::Comm { .. } if is_repeated_comm(self.word, p) || p + 1 == len => (1, p as isize),
                Letter::Comm { .. } => (2, p as isize),
            };
            out.push((rank.0, rank.1, c));
        }
        out.sort_unstable();
        out.into_iter().map(|(_, _, c)| c).collect()
    }

    fn run(&mut self, last_atom: bool, left: usize) -> Result<bool, TransformError> {
        if left == 0 {
            return Ok(true);
        }
        let key = self.key(last_atom);
        if self.dead.contains(&key) {
            return Ok(false);
        }
        self.nodes += 1;
        if self.nodes > NODE_LIMIT {
            return Err(TransformError::ScheduleNotFound(NODE_LIMIT));
        }
        for c in self.candidates(last_atom) {
            let p = self.pos[c];
            self.pos[c] += 1;
            self.order.push((c, p));
            if self.run(!self.word[p].is_comm(), left - 1)? {
                return Ok(true);
            }
            self.order.pop();
            self.pos[c] -= 1;
        }
        self.dead.insert(key);
        Ok(false)
    }
}

/// `copies` copies of a 1-balanced `e` as a 1-constrained execution from
/// `γ_0^N` to `γ_n^N`. Requires `N ≥ κ² + κ`, `κ` the number of repeated
/// reconfiguration letters.
pub fn balanced_to_constrained_k1(proto: &BroadcastProtocol, e: &Execution, copies: usize) -> Result<Execution, TransformError> {
    let report = validate_execution(e, &ConstraintPolicy::new(Regime::KBalanced(1)));
    if let Some(fail) = report.first_failure() {
        return Err(TransformError::NotBalanced(fail.detail.clone().unwrap_or_default()));
    }
    let n0 = e.num_nodes();
    if e.is_empty() {
        return Ok(Execution::empty(e.initial().power(copies)));
    }
    let word = atomic_word(e);
    let phases = phase_decomposition(&word, 1);
    for (i, ph) in phases.phases.iter().enumerate() {
        if ph.kappa > (ph.end - ph.start) / 2 {
            return Err(TransformError::PhaseBound {
                phase: i,
                kappa: ph.kappa,
                len: ph.end - ph.start,
            });
        }
    }
    let kappa = phases.kappa;
    let needed = kappa * kappa + kappa;
    if copies < needed {
        return Err(TransformError::InsufficientCopies { copies, needed });
    }

    let mut s = Scheduler {
        word: &word,
        pos: vec![0; copies],
        order: Vec::with_capacity(copies * word.len()),
        dead: HashSet::new(),
        nodes: 0,
    };
    if !s.run(false, copies * word.len())? {
        return Err(TransformError::ScheduleNotFound(s.nodes));
    }

    let mut out = Builder::new();
    for &(c, p) in &s.order {
        let shift = offset(c, n0);
        match word[p] {
            Letter::Comm { step } => out.comm(e.steps()[step].shifted(shift)),
            Letter::Atom { edge, add, .. } => {
                let x = edge.shifted(shift);
                out.reconf(if add { Step::reconf([x], []) } else { Step::reconf([], [x]) });
            }
        }
    }
    out.finish(proto, e.initial().power(copies))
}
