//! Petri nets simulating k-constrained executions over topologies of
//! degree at most one, and a capped marking-reachability search.
//!
//! Place `p_i` counts isolated nodes in state `i`, place `p_i_j` (`i <= j`)
//! counts linked pairs. One control token moves through `pstart`, `psimul`,
//! `preconf_1..k`, `pcheck` and `pend`.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::config::{Configuration, Edge, NodeId};
use crate::model::execution::{Execution, ReplayError, Step};
use crate::model::protocol::{Action, BroadcastProtocol, StateId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetTransition {
    pub name: String,
    /// `(place, weight)`, sorted by place, weights positive.
    pub pre: Vec<(usize, u32)>,
    pub post: Vec<(usize, u32)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PetriNet {
    pub places: Vec<String>,
    pub transitions: Vec<NetTransition>,
    pub initial: Vec<u32>,
    pub final_marking: Vec<u32>,
}

fn multiset(places: &[usize]) -> Vec<(usize, u32)> {
    let mut m: BTreeMap<usize, u32> = BTreeMap::new();
    for &p in places {
        *m.entry(p).or_default() += 1;
    }
    m.into_iter().collect()
}

impl PetriNet {
    pub fn place(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|p| p == name)
    }

    pub fn enabled(&self, t: usize, marking: &[u32]) -> bool {
        self.transitions[t].pre.iter().all(|&(p, w)| marking[p] >= w)
    }

    pub fn fire(&self, t: usize, marking: &[u32]) -> Option<Vec<u32>> {
        if !self.enabled(t, marking) {
            return None;
        }
        let mut out = marking.to_vec();
        for &(p, w) in &self.transitions[t].pre {
            out[p] -= w;
        }
        for &(p, w) in &self.transitions[t].post {
            out[p] += w;
        }
        Some(out)
    }

    /// Marking after firing `seq` from the initial marking, if every
    /// transition is enabled in turn.
    pub fn replay(&self, seq: &[usize]) -> Option<Vec<u32>> {
        seq.iter().try_fold(self.initial.clone(), |m, &t| self.fire(t, &m))
    }
}

/// Index of the pair place `p_i_j` among all places.
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // rows 0..i hold n, n-1, ... entries
    n + i * (2 * n + 1 - i) / 2 + (j - i)
}

struct Layout {
    n: usize,
    k: usize,
}

impl Layout {
    fn single(&self, i: usize) -> usize {
        i
    }
    fn pair(&self, i: usize, j: usize) -> usize {
        pair_index(self.n, i, j)
    }
    fn preconf(&self, m: usize) -> usize {
        // preconf_{k+1} is psimul
        let base = self.n + self.n * (self.n + 1) / 2;
        if m > self.k {
            self.simul()
        } else {
            base + m - 1
        }
    }
    fn start(&self) -> usize {
        self.n + self.n * (self.n + 1) / 2 + self.k
    }
    fn simul(&self) -> usize {
        self.start() + 1
    }
    fn check(&self) -> usize {
        self.start() + 2
    }
    fn end(&self) -> usize {
        self.start() + 3
    }
}

/// Places `n + n(n+1)/2 + k + 4` for `n` states.
pub fn place_count(states: usize, k: usize) -> usize {
    states + states * (states + 1) / 2 + k + 4
}

/// The three-phase net of `proto` for k-constrained, degree-one executions:
/// initialization seeds isolated nodes and linked pairs of initial states,
/// simulation alternates communications with up to `k` link changes, and
/// checking absorbs target tokens before the control token reaches `pend`.
pub fn compile_to_petri(proto: &BroadcastProtocol, k: usize) -> PetriNet {
    assert!(k >= 1, "at least one reconfiguration per step");
    let n = proto.num_states();
    let l = Layout { n, k };
    let mut places: Vec<String> = (0..n).map(|i| format!("p_{i}")).collect();
    for i in 0..n {
        for j in i..n {
            places.push(format!("p_{i}_{j}"));
        }
    }
    places.extend((1..=k).map(|m| format!("preconf_{m}")));
    places.extend(["pstart", "psimul", "pcheck", "pend"].map(String::from));
    debug_assert_eq!(places.len(), place_count(n, k));

    let mut ts: Vec<NetTransition> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut add = |name: String, pre: &[usize], post: &[usize]| {
        let (pre, post) = (multiset(pre), multiset(post));
        if seen.insert((pre.clone(), post.clone())) {
            ts.push(NetTransition { name, pre, post });
        }
    };

    let init: Vec<usize> = proto.initial_states().iter().map(|s| s.index()).collect();
    for &i in &init {
        add(format!("init_{i}"), &[l.start()], &[l.start(), l.single(i)]);
    }
    for (a, &i) in init.iter().enumerate() {
        for &j in &init[a..] {
            add(format!("init_{i}_{j}"), &[l.start()], &[l.start(), l.pair(i, j)]);
        }
    }
    // leaving initialization needs one seeded token, so populations are nonempty
    let seeded: Vec<usize> = init
        .iter()
        .map(|&i| l.single(i))
        .chain(init.iter().enumerate().flat_map(|(a, &i)| init[a..].iter().map(move |&j| pair_index(n, i, j))))
        .collect();
    for p in seeded {
        add(format!("init_simul_{p}"), &[l.start(), p], &[l.simul(), p]);
    }

    let all = proto.transitions();
    for (ti, t) in all.iter().enumerate() {
        let Action::Broadcast(msg) = t.action else { continue };
        let (i, j) = (t.source.index(), t.target.index());
        add(format!("bcast_{ti}"), &[l.simul(), l.single(i)], &[l.preconf(1), l.single(j)]);
        for (ui, u) in all.iter().enumerate() {
            if u.action != Action::Receive(msg) {
                continue;
            }
            let (m, r) = (u.source.index(), u.target.index());
            add(format!("pair_{ti}_{ui}"), &[l.simul(), l.pair(i, m)], &[l.preconf(1), l.pair(j, r)]);
        }
    }
    for m in 1..=k {
        for i in 0..n {
            for j in i..n {
                add(format!("link_{m}_{i}_{j}"), &[l.preconf(m), l.single(i), l.single(j)], &[l.preconf(m + 1), l.pair(i, j)]);
                add(format!("unlink_{m}_{i}_{j}"), &[l.preconf(m), l.pair(i, j)], &[l.preconf(m + 1), l.single(i), l.single(j)]);
            }
        }
        add(format!("end_{m}"), &[l.preconf(m)], &[l.simul()]);
    }
    add("simul_check".into(), &[l.simul()], &[l.check()]);
    let targets: Vec<usize> = (0..n).filter(|&i| proto.is_target(StateId(i as u32))).collect();
    for &i in &targets {
        add(format!("check_{i}"), &[l.check(), l.single(i)], &[l.check()]);
    }
    for (a, &i) in targets.iter().enumerate() {
        for &j in &targets[a..] {
            add(format!("check_{i}_{j}"), &[l.check(), l.pair(i, j)], &[l.check()]);
        }
    }
    add("finish".into(), &[l.check()], &[l.end()]);

    let mut initial = vec![0; places.len()];
    initial[l.start()] = 1;
    let mut final_marking = vec![0; places.len()];
    final_marking[l.end()] = 1;
    PetriNet {
        places,
        transitions: ts,
        initial,
        final_marking,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reachability {
    /// Firing sequence from the initial to the final marking.
    Reached(Vec<usize>),
    /// Every marking with at most `cap` tokens in total was explored.
    NotReachedWithinCap,
    /// More than the allowed number of markings.
    BudgetExceeded(usize),
}

impl Reachability {
    pub fn is_reached(&self) -> bool {
        matches!(self, Reachability::Reached(_))
    }
}

#[derive(Clone, Debug)]
pub struct ReachabilityReport {
    pub outcome: Reachability,
    pub explored: usize,
    /// Explored markings violating the given place invariant, if any.
    pub invariant_violations: usize,
}

pub const DEFAULT_MARKING_BUDGET: usize = 5_000_000;

/// Breadth-first search over markings holding at most `cap` tokens in
/// total. On a compiled net one token is the control token and each other
/// token an isolated node or a linked pair, so every execution on at most
/// `cap - 1` nodes stays within the cap.
pub fn bounded_marking_reachability(net: &PetriNet, cap: u32) -> Reachability {
    explore(net, cap, DEFAULT_MARKING_BUDGET, &[]).outcome
}

/// Names of the control places of a compiled net.
pub fn control_places(net: &PetriNet) -> Vec<usize> {
    (0..net.places.len())
        .filter(|&p| {
            let name = net.places[p].as_str();
            name.starts_with("preconf_") || matches!(name, "pstart" | "psimul" | "pcheck" | "pend")
        })
        .collect()
}

/// Node places of a compiled net holding a state from which no target state
/// is reachable in the transition graph; a token there is never absorbed.
pub fn dead_places(proto: &BroadcastProtocol, net: &PetriNet) -> Vec<usize> {
    let live = proto.graph_coreachable_to_target();
    (0..net.places.len())
        .filter(|&p| {
            net.places[p]
                .strip_prefix("p_")
                .is_some_and(|rest| rest.split('_').any(|q| q.parse().is_ok_and(|q: u32| !live.contains(&StateId(q)))))
        })
        .collect()
}

/// The search of [`bounded_marking_reachability`] with an explicit marking
/// budget, counting explored markings whose tokens on `invariant` do not
/// sum to one.
pub fn explore(net: &PetriNet, cap: u32, budget: usize, invariant: &[usize]) -> ReachabilityReport {
    explore_pruned(net, cap, budget, invariant, &[])
}

/// [`explore`] that discards markings with a token on any of `dead`,
/// places from which the final marking is known to be unreachable.
pub fn explore_pruned(net: &PetriNet, cap: u32, budget: usize, invariant: &[usize], dead: &[usize]) -> ReachabilityReport {
    let key = |m: &[u32]| m.iter().map(|&x| x as u8).collect::<Vec<u8>>();
    let capped = |m: &[u32]| m.iter().sum::<u32>() <= cap && dead.iter().all(|&p| m[p] == 0);
    let bad = |m: &[u32]| !invariant.is_empty() && invariant.iter().map(|&p| m[p]).sum::<u32>() != 1;
    let mut report = ReachabilityReport {
        outcome: Reachability::NotReachedWithinCap,
        explored: 0,
        invariant_violations: 0,
    };
    if !capped(&net.initial) || cap > u8::MAX as u32 {
        // markings are stored one byte per place
        return report;
    }
    // marking -> (parent index, transition)
    let mut seen: IndexMap<Vec<u8>, (usize, usize)> = IndexMap::new();
    seen.insert(key(&net.initial), (usize::MAX, usize::MAX));
    let trace = |seen: &IndexMap<Vec<u8>, (usize, usize)>, mut i: usize| {
        let mut seq = Vec::new();
        while let Some((_, &(parent, t))) = seen.get_index(i) {
            if parent == usize::MAX {
                break;
            }
            seq.push(t);
            i = parent;
        }
        seq.reverse();
        seq
    };
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let markings: Vec<Vec<u32>> = frontier
            .iter()
            .map(|&i| seen.get_index(i).unwrap().0.iter().map(|&x| x as u32).collect())
            .collect();
        for m in &markings {
            report.explored += 1;
            report.invariant_violations += usize::from(bad(m));
        }
        if let Some(pos) = markings.iter().position(|m| *m == net.final_marking) {
            report.outcome = Reachability::Reached(trace(&seen, frontier[pos]));
            return report;
        }
        let succ: Vec<Vec<(usize, Vec<u32>)>> = markings
            .par_iter()
            .map(|m| {
                (0..net.transitions.len())
                    .filter_map(|t| net.fire(t, m).filter(|n| capped(n)).map(|n| (t, n)))
                    .collect()
            })
            .collect();
        let mut next = Vec::new();
        for (&parent, list) in frontier.iter().zip(succ) {
            for (t, m) in list {
                if let indexmap::map::Entry::Vacant(v) = seen.entry(key(&m)) {
                    next.push(v.index());
                    v.insert((parent, t));
                }
            }
            if seen.len() > budget {
                report.outcome = Reachability::BudgetExceeded(budget);
                return report;
            }
        }
        frontier = next;
    }
    report
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("transition '{0}' does not belong to a compiled net")]
    Foreign(String),
    #[error("transition '{0}' fired without a matching node")]
    NoNode(String),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

fn indices(name: &str, prefix: &str) -> Option<Vec<usize>> {
    name.strip_prefix(prefix)?.split('_').map(|x| x.parse().ok()).collect()
}

/// Rebuilds a concrete execution of `proto` from a firing sequence of
/// `compile_to_petri(proto, k)`: every initialization token becomes a node
/// or a linked pair, and consecutive link changes merge into one step.
pub fn firing_to_execution(proto: &BroadcastProtocol, net: &PetriNet, seq: &[usize]) -> Result<Execution, WitnessError> {
    let mut labels: Vec<StateId> = Vec::new();
    let mut initial_labels = Vec::new();
    let mut init_edges = Vec::new();
    // partner of every node, if linked
    let mut partner: Vec<Option<NodeId>> = Vec::new();
    let mut steps: Vec<Step> = Vec::new();
    let mut toggled: BTreeMap<Edge, bool> = BTreeMap::new();
    let all = proto.transitions();

    let pick = |labels: &[StateId], partner: &[Option<NodeId>], want: usize, linked_to: Option<usize>| {
        (0..labels.len()).find(|&v| {
            labels[v].index() == want
                && match (partner[v], linked_to) {
                    (None, None) => true,
                    (Some(u), Some(s)) => labels[u as usize].index() == s,
                    _ => false,
                }
        })
    };
    let flush = |steps: &mut Vec<Step>, toggled: &mut BTreeMap<Edge, bool>| {
        let (add, rem): (Vec<_>, Vec<_>) = std::mem::take(toggled).into_iter().partition(|&(_, a)| a);
        steps.push(Step::reconf(add.into_iter().map(|x| x.0), rem.into_iter().map(|x| x.0)));
    };
    let toggle = |toggled: &mut BTreeMap<Edge, bool>, x: Edge, add: bool| {
        if toggled.remove(&x).is_none() {
            toggled.insert(x, add);
        }
    };

    for &t in seq {
        let name = net.transitions[t].name.as_str();
        let missing = || WitnessError::NoNode(name.to_string());
        if let Some(ix) = indices(name, "init_") {
            for &q in &ix {
                labels.push(StateId(q as u32));
                initial_labels.push(StateId(q as u32));
                partner.push(None);
            }
            if let [_, _] = ix[..] {
                let (u, v) = (labels.len() as NodeId - 2, labels.len() as NodeId - 1);
                partner[u as usize] = Some(v);
                partner[v as usize] = Some(u);
                init_edges.push(Edge::new(u, v).unwrap());
            }
        } else if let Some(ix) = indices(name, "bcast_") {
            let d = &all[ix[0]];
            let v = pick(&labels, &partner, d.source.index(), None).ok_or_else(missing)?;
            if steps.last().is_some_and(Step::is_communication) {
                flush(&mut steps, &mut toggled);
            }
            labels[v] = d.target;
            steps.push(Step::Communication {
                broadcaster: v as NodeId,
                message: d.action.message(),
                moves: [(v as NodeId, d.target)].into(),
            });
        } else if let Some(ix) = indices(name, "pair_") {
            let (d, r) = (&all[ix[0]], &all[ix[1]]);
            let v = pick(&labels, &partner, d.source.index(), Some(r.source.index())).ok_or_else(missing)?;
            let u = partner[v].unwrap();
            if steps.last().is_some_and(Step::is_communication) {
                flush(&mut steps, &mut toggled);
            }
            labels[v] = d.target;
            labels[u as usize] = r.target;
            steps.push(Step::Communication {
                broadcaster: v as NodeId,
                message: d.action.message(),
                moves: [(v as NodeId, d.target), (u, r.target)].into(),
            });
        } else if let Some(ix) = indices(name, "link_") {
            let u = pick(&labels, &partner, ix[1], None).ok_or_else(missing)?;
            // hide u from the second pick
            partner[u] = Some(u as NodeId);
            let v = pick(&labels, &partner, ix[2], None).ok_or_else(missing)?;
            partner[u] = Some(v as NodeId);
            partner[v] = Some(u as NodeId);
            toggle(&mut toggled, Edge::new(u as NodeId, v as NodeId).unwrap(), true);
        } else if let Some(ix) = indices(name, "unlink_") {
            let u = pick(&labels, &partner, ix[1], Some(ix[2])).ok_or_else(missing)?;
            let v = partner[u].unwrap();
            partner[u] = None;
            partner[v as usize] = None;
            toggle(&mut toggled, Edge::new(u as NodeId, v).unwrap(), false);
        } else if !(name.starts_with("end_") || name.starts_with("check_") || name.starts_with("init_simul") || matches!(name, "simul_check" | "finish")) {
            return Err(WitnessError::Foreign(name.to_string()));
        }
    }
    if !toggled.is_empty() {
        flush(&mut steps, &mut toggled);
    }
    let initial = Configuration::new(initial_labels, init_edges).map_err(ReplayError::from)?;
    Ok(Execution::new(proto, initial, steps)?)
}
