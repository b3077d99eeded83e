//! Copies advancing two at a time, with padding edges toggled on by the
//! first copy of a pair and off again by the second.

use std::collections::BTreeSet;

use super::{offset, without_trailing_reconf, Builder, TransformError};
use crate::model::config::{Edge, NodeId};
use crate::model::execution::{Execution, Step};
use crate::model::policy::{ConstraintPolicy, Regime};
use crate::model::protocol::BroadcastProtocol;
use crate::model::validate::validate_execution;

fn pairs(nodes: usize) -> usize {
    nodes * nodes.saturating_sub(1) / 2
}

/// Reconfiguration before each communication; `None` stands for a trivial one.
fn units(steps: &[Step]) -> Vec<(Option<&Step>, &Step)> {
    let mut out = Vec::new();
    let mut pending = None;
    for s in steps {
        if s.is_communication() {
            out.push((pending.take(), s));
        } else {
            pending = Some(s);
        }
    }
    out
}

fn toggles(step: Option<&Step>, shift: NodeId) -> Vec<Edge> {
    match step {
        Some(Step::Reconfiguration { added, removed }) => added.iter().chain(removed).map(|e| e.shifted(shift)).collect(),
        _ => Vec::new(),
    }
}

fn apply(edges: &mut BTreeSet<Edge>, flips: &[Edge]) -> Step {
    let (mut add, mut remove) = (Vec::new(), Vec::new());
    for &x in flips {
        if edges.remove(&x) {
            remove.push(x);
        } else {
            edges.insert(x);
            add.push(x);
        }
    }
    Step::reconf(add, remove)
}

/// `m` copies of `e` (`m` even). For every reconfiguration/communication unit
/// of `e`, each pair `(a, b)` moves on: `a` reconfigures plus `k - d` padding
/// edges outside its own nodes and avoiding `b`'s edges, then communicates;
/// `b` reconfigures and undoes the padding, then communicates. Every
/// reconfiguration therefore changes exactly `k` edges.
fn paired(proto: &BroadcastProtocol, e: &Execution, k: usize, m: usize) -> Result<Execution, TransformError> {
    debug_assert!(m.is_multiple_of(2));
    let n0 = e.num_nodes();
    let initial = e.initial().power(m);
    let mut edges = initial.edges().clone();
    let mut out = Builder::new();
    let n = n0 * m;
    for (reconf, comm) in units(without_trailing_reconf(e)) {
        for p in 0..m / 2 {
            let (a, b) = (2 * p, 2 * p + 1);
            let own_a = toggles(reconf, offset(a, n0));
            let own_b = toggles(reconf, offset(b, n0));
            let skip: BTreeSet<Edge> = own_b.iter().copied().collect();
            let a_nodes = offset(a, n0)..offset(a + 1, n0);
            let pad: Vec<Edge> = (0..n as NodeId)
                .flat_map(|u| (u + 1..n as NodeId).map(move |v| (u, v)))
                .filter(|(u, v)| !a_nodes.contains(u) && !a_nodes.contains(v))
                .map(|(u, v)| Edge::new(u, v).unwrap())
                .filter(|x| !skip.contains(x))
                .take(k - own_a.len())
                .collect();
            debug_assert_eq!(pad.len() + own_a.len(), k, "padding region too small");
            let mut first = own_a;
            first.extend(&pad);
            out.reconf(apply(&mut edges, &first));
            out.comm(comm.shifted(offset(a, n0)));
            let mut second = own_b;
            second.extend(&pad);
            out.reconf(apply(&mut edges, &second));
            out.comm(comm.shifted(offset(b, n0)));
        }
    }
    out.finish(proto, initial)
}

fn require(e: &Execution, regime: Regime) -> Result<(), TransformError> {
    let report = validate_execution(e, &ConstraintPolicy::new(regime));
    if report.passed {
        Ok(())
    } else {
        Err(TransformError::NotConstrained(regime.to_string()))
    }
}

/// Number of copies used by [`lift_one_to_k`]: the smallest even `m >= k + 2`.
pub fn lift_copies(k: u32) -> usize {
    let m = k as usize + 2;
    m + m % 2
}

/// From a 1-constrained execution to one whose every reconfiguration changes
/// exactly `k` edges, over [`lift_copies`] copies.
pub fn lift_one_to_k(proto: &BroadcastProtocol, e: &Execution, k: u32) -> Result<Execution, TransformError> {
    require(e, Regime::KConstrained(1.min(k)))?;
    paired(proto, e, k as usize, lift_copies(k))
}

/// Copies used by [`weak_to_strong`]: the smallest even `m` whose `m - 1`
/// padding copies hold at least `k` edges.
pub fn strong_copies(k: u32, n0: usize) -> usize {
    if n0 == 0 {
        return 2;
    }
    (1..).map(|h| 2 * h).find(|&m| pairs((m - 1) * n0) >= k as usize).unwrap()
}

/// From a k-constrained execution to a strongly k-constrained one. Inputs that
/// already change exactly `k` edges per step are returned as they are.
pub fn weak_to_strong(proto: &BroadcastProtocol, e: &Execution, k: u32) -> Result<Execution, TransformError> {
    require(e, Regime::KConstrained(k))?;
    if validate_execution(e, &ConstraintPolicy::new(Regime::StronglyKConstrained(k))).passed {
        return Ok(e.clone());
    }
    paired(proto, e, k as usize, strong_copies(k, e.num_nodes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::fixtures::{fig1, fig2, relay, relay_run};

    fn passes(e: &Execution, r: Regime) -> bool {
        validate_execution(e, &ConstraintPolicy::new(r)).passed
    }

    #[test]
    fn copy_counts() {
        assert_eq!(lift_copies(1), 4);
        assert_eq!(lift_copies(2), 4);
        assert_eq!(lift_copies(3), 6);
        // C(3, 2) = 3 >= 2 with one spare copy of three nodes
        assert_eq!(strong_copies(2, 3), 2);
        // C(3, 2) = 3 < 4 <= C(9, 2)
        assert_eq!(strong_copies(4, 3), 4);
        assert_eq!(strong_copies(3, 1), 4);
    }

    #[test]
    fn lift_relay() {
        let p = relay();
        let e = relay_run(&p);
        assert!(passes(&e, Regime::KConstrained(1)));
        for k in 1..=3 {
            let out = lift_one_to_k(&p, &e, k).unwrap();
            assert_eq!(out.num_nodes(), lift_copies(k) * 2);
            assert!(passes(&out, Regime::KConstrained(k)));
            assert!(passes(&out, Regime::StronglyKConstrained(k)));
            assert!(out.is_initial(&p) && out.synchronizes(&p));
            assert_eq!(out.last().label_counts(), e.last().power(lift_copies(k)).label_counts());
        }
    }

    #[test]
    fn lift_rejects_wide_steps() {
        let p = fig1();
        assert!(matches!(lift_one_to_k(&p, &fig2(&p), 2), Err(TransformError::NotConstrained(_))));
    }

    #[test]
    fn strong_fig2() {
        let p = fig1();
        let e = fig2(&p);
        let out = weak_to_strong(&p, &e, 2).unwrap();
        assert!(passes(&out, Regime::StronglyKConstrained(2)));
        assert!(out.synchronizes(&p) && out.is_initial(&p));
        assert_eq!(out.num_nodes(), 6);
        let three = weak_to_strong(&p, &e, 3).unwrap();
        assert!(passes(&three, Regime::StronglyKConstrained(3)));
        assert!(matches!(weak_to_strong(&p, &e, 1), Err(TransformError::NotConstrained(_))));
    }

    #[test]
    fn strong_input_unchanged() {
        let p = relay();
        let e = relay_run(&p);
        let strong = lift_one_to_k(&p, &e, 2).unwrap();
        assert_eq!(weak_to_strong(&p, &strong, 2).unwrap(), strong);
    }
}
