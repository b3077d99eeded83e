//! One-step successors of a configuration.

use std::collections::BTreeMap;

use thiserror::Error;

use super::packed::{edge_universe, Packed, MAX_NODES};
use crate::model::config::{Configuration, Edge, NodeId};
use crate::model::execution::Step;
use crate::model::policy::{ConstraintPolicy, Regime, TopologyBounds};
use crate::model::protocol::{BroadcastProtocol, StateId};

/// Above this many nodes the full powerset of edges is not enumerated.
pub const MAX_UNCONSTRAINED_NODES: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SuccessorError {
    #[error("regime {regime} has no finite per-step budget on {nodes} nodes; use the counter abstraction")]
    BudgetUnbounded { regime: Regime, nodes: usize },
    #[error("{0} nodes exceed the explicit engine limit of {MAX_NODES}")]
    TooManyNodes(usize),
}

/// Every communication step enabled in `g`: broadcaster, then message, then
/// the transition choices of the broadcaster and each neighbour in order.
pub fn enabled_communications(proto: &BroadcastProtocol, g: &Configuration) -> Vec<Step> {
    let mut out = Vec::new();
    let p = Packed::from_config(g);
    communication_successors(proto, &p, |step, _| out.push(step));
    out
}

pub(crate) fn communication_successors(proto: &BroadcastProtocol, g: &Packed, mut emit: impl FnMut(Step, Packed)) {
    for b in 0..g.len() {
        let neighbours: Vec<usize> = g.neighbors(b).collect();
        for m in proto.messages() {
            let own = proto.broadcast_targets(g.labels[b], m);
            if own.is_empty() {
                continue;
            }
            let options: Vec<&[StateId]> = neighbours.iter().map(|&v| proto.receive_targets(g.labels[v], m)).collect();
            if options.iter().any(|o| o.is_empty()) {
                continue;
            }
            let mut choice = vec![0usize; neighbours.len()];
            for &t in own {
                choice.iter_mut().for_each(|c| *c = 0);
                loop {
                    let mut next = g.clone();
                    let mut moves = BTreeMap::new();
                    next.labels[b] = t;
                    moves.insert(b as NodeId, t);
                    for (i, &v) in neighbours.iter().enumerate() {
                        let s = options[i][choice[i]];
                        next.labels[v] = s;
                        moves.insert(v as NodeId, s);
                    }
                    emit(
                        Step::Communication {
                            broadcaster: b as NodeId,
                            message: m,
                            moves,
                        },
                        next,
                    );
                    // odometer over receiver choices, last neighbour fastest
                    let mut carried = true;
                    for i in (0..neighbours.len()).rev() {
                        choice[i] += 1;
                        if choice[i] < options[i].len() {
                            carried = false;
                            break;
                        }
                        choice[i] = 0;
                    }
                    if carried {
                        break;
                    }
                }
            }
        }
    }
}

/// Which sets of toggled edges one reconfiguration step may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToggleLimit {
    AtMost(usize),
    Exactly(usize),
    /// Each node incident to at most this many toggled edges.
    PerNode(usize),
}

impl ToggleLimit {
    pub fn for_policy(regime: Regime, n: usize) -> Result<Self, SuccessorError> {
        let full = n * n.saturating_sub(1) / 2;
        let unbounded = || {
            if n > MAX_UNCONSTRAINED_NODES {
                Err(SuccessorError::BudgetUnbounded { regime, nodes: n })
            } else {
                Ok(ToggleLimit::AtMost(full))
            }
        };
        match regime {
            Regime::Unconstrained | Regime::KBalanced(_) => unbounded(),
            Regime::KConstrained(k) => Ok(ToggleLimit::AtMost((k as usize).min(full))),
            Regime::StronglyKConstrained(k) => Ok(ToggleLimit::Exactly(k as usize)),
            Regime::KLocallyConstrained(k) => Ok(ToggleLimit::PerNode(k as usize)),
            Regime::FConstrained(f) => Ok(ToggleLimit::AtMost((f.eval(n as u64) as usize).min(full))),
        }
    }

    fn sizes(self, n: usize, universe: usize) -> (usize, usize) {
        match self {
            ToggleLimit::AtMost(k) => (0, k.min(universe)),
            ToggleLimit::Exactly(k) => (k, k),
            ToggleLimit::PerNode(k) => (0, (k * n / 2).min(universe)),
        }
    }
}

/// Lazy enumeration of the reconfiguration successors of a graph, by
/// increasing number of toggled edges, then lexicographically.
pub(crate) struct ToggleIter {
    base: Packed,
    universe: Vec<(usize, usize)>,
    limit: ToggleLimit,
    bounds: TopologyBounds,
    size: usize,
    max_size: usize,
    comb: Option<Vec<usize>>,
}

impl ToggleIter {
    pub(crate) fn new(base: Packed, limit: ToggleLimit, bounds: TopologyBounds) -> Self {
        let universe = edge_universe(base.len());
        let (lo, hi) = limit.sizes(base.len(), universe.len());
        let comb = (lo <= hi && lo <= universe.len()).then(|| (0..lo).collect());
        Self {
            base,
            universe,
            limit,
            bounds,
            size: lo,
            max_size: hi,
            comb,
        }
    }

    fn advance(&mut self) {
        let Some(c) = self.comb.as_mut() else { return };
        let m = self.universe.len();
        let s = c.len();
        let mut i = s;
        while i > 0 {
            i -= 1;
            if c[i] < m - s + i {
                c[i] += 1;
                for j in i + 1..s {
                    c[j] = c[j - 1] + 1;
                }
                return;
            }
        }
        self.size += 1;
        self.comb = (self.size <= self.max_size).then(|| (0..self.size).collect());
    }
}

impl Iterator for ToggleIter {
    type Item = (Step, Packed);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let comb = self.comb.clone()?;
            self.advance();
            if let ToggleLimit::PerNode(k) = self.limit {
                let mut count = [0usize; MAX_NODES];
                let mut ok = true;
                for &i in &comb {
                    let (u, v) = self.universe[i];
                    count[u] += 1;
                    count[v] += 1;
                    ok &= count[u] <= k && count[v] <= k;
                }
                if !ok {
                    continue;
                }
            }
            let mut next = self.base.clone();
            let (mut added, mut removed) = (Vec::new(), Vec::new());
            for &i in &comb {
                let (u, v) = self.universe[i];
                let e = Edge::new(u as NodeId, v as NodeId).unwrap();
                if next.has_edge(u, v) {
                    removed.push(e);
                } else {
                    added.push(e);
                }
                next.toggle(u, v);
            }
            if !next.satisfies(&self.bounds) {
                continue;
            }
            return Some((Step::reconf(added, removed), next));
        }
    }
}

/// Lazily enumerated reconfiguration steps allowed from a configuration.
pub struct ReconfSuccessors(ToggleIter);

impl Iterator for ReconfSuccessors {
    type Item = Step;

    fn next(&mut self) -> Option<Step> {
        self.0.next().map(|(s, _)| s)
    }
}

/// Reconfiguration steps from `g` allowed by `p`, including the trivial one
/// unless the regime demands an exact count. `KBalanced` imposes nothing per
/// step and is enumerated like the unconstrained regime.
pub fn successor_reconfigurations(g: &Configuration, p: &ConstraintPolicy) -> Result<ReconfSuccessors, SuccessorError> {
    let n = g.num_nodes();
    if n > MAX_NODES {
        return Err(SuccessorError::TooManyNodes(n));
    }
    let limit = ToggleLimit::for_policy(p.regime, n)?;
    Ok(ReconfSuccessors(ToggleIter::new(Packed::from_config(g), limit, p.topology)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_protocol;
    use crate::model::execution::apply_step;
    use std::collections::BTreeSet;

    fn fig1() -> BroadcastProtocol {
        parse_protocol(include_str!("../../assets/fig1.rbn")).unwrap()
    }

    fn q(p: &BroadcastProtocol, name: &str) -> StateId {
        p.state_by_name(name).unwrap()
    }

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn isolated_broadcasts() {
        let p = fig1();
        let g = Configuration::isolated(vec![q(&p, "q0"); 3]);
        let steps = enabled_communications(&p, &g);
        assert_eq!(steps.len(), 3);
        for s in &steps {
            let next = apply_step(&p, &g, s).unwrap();
            assert_eq!(next.labels().iter().filter(|&&l| l == q(&p, "q1")).count(), 1);
        }
    }

    #[test]
    fn center_broadcast_has_four_labelings() {
        let p = fig1();
        let g = Configuration::from_pairs(vec![q(&p, "q0"); 3], &[(0, 1), (0, 2)]).unwrap();
        let from_center: Vec<Step> = enabled_communications(&p, &g)
            .into_iter()
            .filter(|s| matches!(s, Step::Communication { broadcaster: 0, .. }))
            .collect();
        assert_eq!(from_center.len(), 4);
        let ends: BTreeSet<Vec<StateId>> =
            from_center.iter().map(|s| apply_step(&p, &g, s).unwrap().labels().to_vec()).collect();
        assert!(ends.contains(&vec![q(&p, "q1"), q(&p, "q5"), q(&p, "q7")]));
    }

    #[test]
    fn missing_reception_disables_broadcast() {
        let p = parse_protocol("states a b c\ninit a\nmsg m\na !m b\n").unwrap();
        let g = Configuration::from_pairs(vec![StateId(0), StateId(2)], &[(0, 1)]).unwrap();
        assert!(enabled_communications(&p, &g).is_empty());
    }

    #[test]
    fn reconfiguration_counts() {
        for n in 2..6 {
            let g = Configuration::from_pairs(vec![StateId(0); n], &[(0, 1)]).unwrap();
            let one = successor_reconfigurations(&g, &ConstraintPolicy::k_constrained(1)).unwrap().count();
            assert_eq!(one, 1 + binom(n, 2));
        }
        let g = Configuration::isolated(vec![StateId(0); 3]);
        let strong: Vec<Step> =
            successor_reconfigurations(&g, &ConstraintPolicy::new(Regime::StronglyKConstrained(2))).unwrap().collect();
        // brute force: 2-subsets of the three possible edges
        let mut brute = 0;
        for mask in 0u32..8 {
            if mask.count_ones() == 2 {
                brute += 1;
            }
        }
        assert_eq!(strong.len(), brute);
        assert!(strong.iter().all(|s| s.reconf_size() == 2));
        let all = successor_reconfigurations(&Configuration::isolated(vec![StateId(0); 4]), &ConstraintPolicy::unconstrained());
        assert_eq!(all.unwrap().count(), 64);
        let big = Configuration::isolated(vec![StateId(0); 7]);
        assert!(matches!(
            successor_reconfigurations(&big, &ConstraintPolicy::unconstrained()),
            Err(SuccessorError::BudgetUnbounded { .. })
        ));
    }

    #[test]
    fn degree_bound_filters() {
        let g = Configuration::from_pairs(vec![StateId(0); 3], &[(0, 1)]).unwrap();
        let policy = ConstraintPolicy::k_constrained(1).with_degree_bound(1);
        let steps: Vec<Step> = successor_reconfigurations(&g, &policy).unwrap().collect();
        // trivial, remove {0,1}; adding {0,2} or {1,2} would create degree 2
        assert_eq!(steps.len(), 2);
        let local = successor_reconfigurations(
            &Configuration::isolated(vec![StateId(0); 4]),
            &ConstraintPolicy::new(Regime::KLocallyConstrained(1)),
        )
        .unwrap()
        .count();
        // matchings of K4: empty, 6 single edges, 3 perfect matchings
        assert_eq!(local, 10);
    }

    #[test]
    fn steps_apply_cleanly() {
        let p = fig1();
        let g = Configuration::from_pairs(vec![q(&p, "q0"); 4], &[(0, 1), (2, 3)]).unwrap();
        for s in successor_reconfigurations(&g, &ConstraintPolicy::k_constrained(2)).unwrap() {
            assert!(apply_step(&p, &g, &s).is_ok());
        }
    }
}
