//! The explicit state space shared by the bounded searches: canonical keys,
//! successor generation and witness reconstruction.

use super::canon::canonize;
use super::packed::{edge_universe, Packed};
use super::successors::{communication_successors, ToggleIter, ToggleLimit};
use crate::model::config::{Edge, NodeId};
use crate::model::execution::{Execution, Step};
use crate::model::policy::TopologyBounds;
use crate::model::protocol::{BroadcastProtocol, StateId};

/// Kind of the step that led to a search state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Last {
    Start = 0,
    Comm = 1,
    Reconf = 2,
}

impl Last {
    fn from_byte(b: u8) -> Self {
        match b {
            0 => Last::Start,
            1 => Last::Comm,
            _ => Last::Reconf,
        }
    }
}

pub(crate) struct Space<'a> {
    pub proto: &'a BroadcastProtocol,
    pub limit: ToggleLimit,
    pub bounds: TopologyBounds,
    /// Forbid a reconfiguration as the very first step.
    pub comm_first: bool,
}

pub(crate) struct Successor {
    pub step: Step,
    pub next: Packed,
    pub last: Last,
}

impl<'a> Space<'a> {
    /// Canonical key of `(g, last)`; `g` must already be canonical.
    pub fn key(&self, g: &Packed, last: Last) -> Box<[u8]> {
        let mut out = Vec::with_capacity(4 * g.len() + 1);
        out.push(last as u8);
        for s in &g.labels {
            out.extend_from_slice(&(s.0 as u16).to_le_bytes());
        }
        for a in &g.adj {
            out.extend_from_slice(&a.to_le_bytes());
        }
        out.into_boxed_slice()
    }

    pub fn decode(&self, key: &[u8]) -> (Packed, Last) {
        let n = (key.len() - 1) / 4;
        let word = |i: usize| u16::from_le_bytes([key[1 + 2 * i], key[2 + 2 * i]]);
        let labels = (0..n).map(|i| StateId(word(i) as u32)).collect();
        let adj = (0..n).map(|i| word(n + i)).collect();
        (Packed { labels, adj }, Last::from_byte(key[0]))
    }

    /// Successors in a fixed order: communications first, then
    /// reconfigurations, as alternation allows.
    pub fn successors(&self, g: &Packed, last: Last) -> Vec<Successor> {
        let mut out = Vec::new();
        if last != Last::Comm {
            communication_successors(self.proto, g, |step, next| {
                out.push(Successor {
                    step,
                    next,
                    last: Last::Comm,
                })
            });
        }
        if last == Last::Comm || (last == Last::Start && !self.comm_first) {
            for (step, next) in ToggleIter::new(g.clone(), self.limit, self.bounds) {
                out.push(Successor {
                    step,
                    next,
                    last: Last::Reconf,
                });
            }
        }
        out
    }

    /// Replays a path of `(state, successor index)` hops from canonical
    /// representatives, undoing each canonical relabelling.
    pub fn rebuild(&self, hops: &[(Packed, Last, usize)], initial: &Packed) -> Execution {
        let n = initial.len();
        let mut sigma: Vec<NodeId> = (0..n as NodeId).collect();
        let mut steps = Vec::with_capacity(hops.len());
        for (rep, last, index) in hops {
            let mut succ = self.successors(rep, *last);
            let s = succ.swap_remove(*index);
            steps.push(rename(&s.step, &sigma));
            let (_, order) = canonize(&s.next);
            sigma = order.iter().map(|&o| sigma[o]).collect();
        }
        Execution::new(self.proto, initial.to_config(), steps).expect("search witnesses replay")
    }
}

pub(crate) fn rename(step: &Step, sigma: &[NodeId]) -> Step {
    let map_edge = |e: &Edge| Edge::new(sigma[e.low() as usize], sigma[e.high() as usize]).unwrap();
    match step {
        Step::Reconfiguration { added, removed } => Step::reconf(added.iter().map(map_edge), removed.iter().map(map_edge)),
        Step::Communication {
            broadcaster,
            message,
            moves,
        } => Step::Communication {
            broadcaster: sigma[*broadcaster as usize],
            message: *message,
            moves: moves.iter().map(|(&v, &s)| (sigma[v as usize], s)).collect(),
        },
    }
}

/// Nondecreasing sequences of length `n` over `states`.
pub(crate) fn label_multisets(states: &[StateId], n: usize) -> Vec<Vec<StateId>> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    if states.is_empty() {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| states[i]).collect());
        let Some(pos) = (0..n).rev().find(|&p| idx[p] + 1 < states.len()) else {
            return out;
        };
        idx[pos] += 1;
        for q in pos + 1..n {
            idx[q] = idx[pos];
        }
    }
}

/// All edge sets over `n` nodes as packed adjacency, in mask order.
pub(crate) fn all_graphs(n: usize) -> impl Iterator<Item = Vec<u16>> {
    let universe = edge_universe(n);
    (0u64..1 << universe.len()).map(move |mask| {
        let mut adj = vec![0u16; n];
        for (i, &(u, v)) in universe.iter().enumerate() {
            if mask >> i & 1 == 1 {
                adj[u] |= 1 << v;
                adj[v] |= 1 << u;
            }
        }
        adj
    })
}
