//! The counter abstraction: under unconstrained reconfiguration only the
//! number of nodes in each state matters, since any set of nodes can be
//! made the exact neighbourhood of a broadcaster.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::Serialize;

use super::prune::DeadStateOracle;
use super::search::{is_target, SearchOptions, SearchResult, SearchStats, Verdict};
use super::space::label_multisets;
use crate::model::config::{Configuration, Edge, NodeId};
use crate::model::execution::{Execution, Step};
use crate::model::protocol::{BroadcastProtocol, MessageId, StateId};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AbstractConfiguration {
    pub counts: Vec<u32>,
}

impl AbstractConfiguration {
    pub fn from_labels(labels: &[StateId], num_states: usize) -> Self {
        let mut counts = vec![0; num_states];
        for s in labels {
            counts[s.index()] += 1;
        }
        Self { counts }
    }

    pub fn from_config(g: &Configuration, num_states: usize) -> Self {
        Self::from_labels(g.labels(), num_states)
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn support(&self) -> Vec<StateId> {
        (0..self.counts.len())
            .filter(|&i| self.counts[i] > 0)
            .map(|i| StateId(i as u32))
            .collect()
    }
}

/// One abstract communication: the broadcaster's transition and how many
/// nodes take each receive transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractMove {
    pub from: StateId,
    pub message: MessageId,
    pub to: StateId,
    pub receivers: Vec<(StateId, StateId, u32)>,
}

fn abstract_moves(proto: &BroadcastProtocol, a: &AbstractConfiguration, mut emit: impl FnMut(AbstractMove, AbstractConfiguration)) {
    for q in a.support() {
        for m in proto.messages() {
            for &t in proto.broadcast_targets(q, m) {
                let mut rest = a.clone();
                rest.counts[q.index()] -= 1;
                // (source, target) receive slots with the source's remaining count
                let slots: Vec<(StateId, StateId)> = rest
                    .support()
                    .into_iter()
                    .flat_map(|p| proto.receive_targets(p, m).iter().map(move |&p2| (p, p2)))
                    .collect();
                let mut chosen = vec![0u32; slots.len()];
                distribute(&slots, 0, &mut rest.counts.clone(), &mut chosen, &mut |chosen| {
                    let mut next = rest.clone();
                    let mut receivers = Vec::new();
                    for (i, &(p, p2)) in slots.iter().enumerate() {
                        if chosen[i] > 0 {
                            next.counts[p.index()] -= chosen[i];
                            receivers.push((p, p2, chosen[i]));
                        }
                    }
                    for &(_, p2, c) in &receivers {
                        next.counts[p2.index()] += c;
                    }
                    next.counts[t.index()] += 1;
                    emit(
                        AbstractMove {
                            from: q,
                            message: m,
                            to: t,
                            receivers,
                        },
                        next,
                    );
                });
            }
        }
    }
}

fn distribute(
    slots: &[(StateId, StateId)],
    i: usize,
    left: &mut Vec<u32>,
    chosen: &mut Vec<u32>,
    emit: &mut dyn FnMut(&[u32]),
) {
    if i == slots.len() {
        emit(chosen);
        return;
    }
    let p = slots[i].0.index();
    for c in 0..=left[p] {
        chosen[i] = c;
        left[p] -= c;
        distribute(slots, i + 1, left, chosen, emit);
        left[p] += c;
    }
    chosen[i] = 0;
}

/// Every multiset reachable from `a` by one communication step.
pub fn abstract_step(proto: &BroadcastProtocol, a: &AbstractConfiguration) -> BTreeSet<AbstractConfiguration> {
    let mut out = BTreeSet::new();
    abstract_moves(proto, a, |_, next| {
        out.insert(next);
    });
    out
}

/// Breadth-first search over multisets of size `n`. Witnesses are concrete
/// executions that rewire the broadcaster's neighbourhood before each
/// communication.
pub(crate) fn search_abstract(proto: &BroadcastProtocol, n: usize, opts: &SearchOptions) -> SearchResult {
    let q = proto.num_states();
    let oracle = DeadStateOracle::new(proto);
    let initial: Vec<StateId> = proto.initial_states().iter().copied().collect();
    // state -> (parent index, move from the parent)
    let mut seen: IndexMap<AbstractConfiguration, Option<(usize, AbstractMove)>> = IndexMap::new();
    let mut stats = SearchStats::default();
    let mut frontier = Vec::new();
    let result = |verdict, stats| SearchResult { verdict, stats };
    for labels in label_multisets(&initial, n) {
        if opts.prune && oracle.is_dead(&labels) {
            continue;
        }
        let a = AbstractConfiguration::from_labels(&labels, q);
        if is_target(proto, &labels) {
            stats.states = seen.len() + 1;
            return result(Verdict::FoundWitness(concretize(proto, &a, &[])), stats);
        }
        let (id, _) = seen.insert_full(a, None);
        frontier.push(id);
    }
    stats.peak = frontier.len();
    while !frontier.is_empty() {
        if stats.depth >= opts.budget.max_depth {
            stats.states = seen.len();
            return result(Verdict::BudgetExceeded, stats);
        }
        stats.depth += 1;
        let mut next = Vec::new();
        for &id in &frontier {
            let a = seen.get_index(id).unwrap().0.clone();
            let mut succ = Vec::new();
            abstract_moves(proto, &a, |mv, b| succ.push((mv, b)));
            for (mv, b) in succ {
                if seen.contains_key(&b) {
                    continue;
                }
                let support = b.support();
                if opts.prune && oracle.is_dead(&support) {
                    continue;
                }
                let hit = is_target(proto, &support);
                let (bid, _) = seen.insert_full(b, Some((id, mv)));
                if hit {
                    stats.states = seen.len();
                    return result(Verdict::FoundWitness(witness(proto, &seen, bid)), stats);
                }
                next.push(bid);
                if seen.len() > opts.budget.max_states {
                    stats.states = seen.len();
                    return result(Verdict::BudgetExceeded, stats);
                }
            }
        }
        stats.peak = stats.peak.max(next.len());
        frontier = next;
    }
    stats.states = seen.len();
    result(Verdict::ExhaustedNoWitness, stats)
}

fn witness(
    proto: &BroadcastProtocol,
    seen: &IndexMap<AbstractConfiguration, Option<(usize, AbstractMove)>>,
    mut id: usize,
) -> Execution {
    let mut moves = Vec::new();
    while let Some((parent, mv)) = seen.get_index(id).unwrap().1 {
        moves.push(mv.clone());
        id = *parent;
    }
    moves.reverse();
    concretize(proto, seen.get_index(id).unwrap().0, &moves)
}

/// Turns abstract moves from `start` into an execution whose reconfigurations
/// make each broadcaster adjacent to exactly its receivers.
pub fn concretize(proto: &BroadcastProtocol, start: &AbstractConfiguration, moves: &[AbstractMove]) -> Execution {
    let mut labels: Vec<StateId> = Vec::new();
    for (i, &c) in start.counts.iter().enumerate() {
        labels.extend(std::iter::repeat_n(StateId(i as u32), c as usize));
    }
    let initial = Configuration::isolated(labels.clone());
    let mut edges: BTreeSet<Edge> = BTreeSet::new();
    let mut steps = Vec::new();
    for mv in moves {
        let b = labels.iter().position(|&s| s == mv.from).expect("broadcaster present") as NodeId;
        let mut taken: BTreeSet<NodeId> = BTreeSet::from([b]);
        let mut step_moves = BTreeMap::from([(b, mv.to)]);
        for &(p, p2, c) in &mv.receivers {
            for _ in 0..c {
                let v = (0..labels.len() as NodeId)
                    .find(|v| !taken.contains(v) && labels[*v as usize] == p)
                    .expect("receiver present");
                taken.insert(v);
                step_moves.insert(v, p2);
            }
        }
        let star: BTreeSet<Edge> = taken.iter().filter(|&&v| v != b).map(|&v| Edge::new(b, v).unwrap()).collect();
        steps.push(Step::between(&edges, &star));
        edges = star;
        for (&v, &s) in &step_moves {
            labels[v as usize] = s;
        }
        steps.push(Step::Communication {
            broadcaster: b,
            message: mv.message,
            moves: step_moves,
        });
    }
    Execution::new(proto, initial, steps).expect("abstract moves concretize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_protocol;
    use crate::model::policy::ConstraintPolicy;
    use crate::model::validate::validate_execution;
    use crate::semantics::search::search_synchronizing_execution;

    fn fig1() -> BroadcastProtocol {
        parse_protocol(include_str!("../../assets/fig1.rbn")).unwrap()
    }

    fn counts(p: &BroadcastProtocol, names: &[&str]) -> AbstractConfiguration {
        let labels: Vec<StateId> = names.iter().map(|n| p.state_by_name(n).unwrap()).collect();
        AbstractConfiguration::from_labels(&labels, p.num_states())
    }

    #[test]
    fn single_and_triple_steps() {
        let p = fig1();
        let one = abstract_step(&p, &counts(&p, &["q0"]));
        assert_eq!(one, BTreeSet::from([counts(&p, &["q1"])]));
        let three = abstract_step(&p, &counts(&p, &["q0", "q0", "q0"]));
        assert!(three.contains(&counts(&p, &["q1", "q5", "q7"])));
        let silent = parse_protocol("states a b\ninit a\nmsg m\na ?m b\n").unwrap();
        assert!(abstract_step(&silent, &counts(&silent, &["a", "a"])).is_empty());
    }

    #[test]
    fn three_copies_needed_and_sufficient() {
        let p = fig1();
        let run = |n| search_synchronizing_execution(&p, n, &ConstraintPolicy::unconstrained(), &SearchOptions::default()).unwrap();
        for n in 1..=2 {
            assert_eq!(run(n).verdict, Verdict::ExhaustedNoWitness);
        }
        let r = run(3);
        let w = r.witness().unwrap();
        assert!(validate_execution(w, &ConstraintPolicy::unconstrained()).passed);
        assert!(is_target(&p, w.last().labels()));
    }
}
