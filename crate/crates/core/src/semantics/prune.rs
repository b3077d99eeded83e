//! Sound dead-configuration detection.
//!
//! From labels `L`, no node can ever leave `R = forward_saturation(L)`, and
//! every move it makes uses a transition inside `R` whose message can be
//! broadcast inside `R`. A node whose state cannot reach `F` through such
//! transitions never gets there, so the configuration cannot synchronize.

use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use crate::model::protocol::{Action, BroadcastProtocol, StateId};
use crate::saturation::forward_saturation;

pub struct DeadStateOracle<'a> {
    proto: &'a BroadcastProtocol,
    all: BTreeSet<StateId>,
    cache: Mutex<HashMap<Vec<u64>, bool>>,
}

fn bitset(states: impl IntoIterator<Item = StateId>, n: usize) -> Vec<u64> {
    let mut out = vec![0u64; n.div_ceil(64)];
    for s in states {
        out[s.index() / 64] |= 1 << (s.index() % 64);
    }
    out
}

impl<'a> DeadStateOracle<'a> {
    pub fn new(proto: &'a BroadcastProtocol) -> Self {
        Self {
            proto,
            all: proto.states().collect(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// True when some node labelled from `labels` can provably never reach
    /// the target set.
    pub fn is_dead(&self, labels: &[StateId]) -> bool {
        let key = bitset(labels.iter().copied(), self.proto.num_states());
        if let Some(&dead) = self.cache.lock().unwrap().get(&key) {
            return dead;
        }
        let present: BTreeSet<StateId> = labels.iter().copied().collect();
        let dead = !present.is_subset(&self.alive_within(&present));
        self.cache.lock().unwrap().insert(key, dead);
        dead
    }

    fn alive_within(&self, present: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        let p = self.proto;
        let Some(target) = p.target_set() else {
            return BTreeSet::new();
        };
        let reach = forward_saturation(p, present, &self.all);
        let sendable: BTreeSet<_> = p
            .transitions()
            .iter()
            .filter(|t| t.action.is_broadcast() && reach.contains(&t.source) && reach.contains(&t.target))
            .map(|t| t.action.message())
            .collect();
        let mut preds: HashMap<StateId, Vec<StateId>> = HashMap::new();
        for t in p.transitions() {
            if !reach.contains(&t.source) || !reach.contains(&t.target) {
                continue;
            }
            if let Action::Receive(m) = t.action {
                if !sendable.contains(&m) {
                    continue;
                }
            }
            preds.entry(t.target).or_default().push(t.source);
        }
        let mut alive: BTreeSet<StateId> = target.intersection(&reach).copied().collect();
        let mut stack: Vec<StateId> = alive.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for &q in preds.get(&s).into_iter().flatten() {
                if alive.insert(q) {
                    stack.push(q);
                }
            }
        }
        alive
    }
}
