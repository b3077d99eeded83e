//! Polynomial-time decision procedures for the unconstrained semantics.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::model::protocol::{Action, BroadcastProtocol, StateId};

/// Least set containing `seed ∩ restrict` and closed under
/// * `q !m q'` with `q` in the set and `q' ∈ restrict` adds `q'`;
/// * `p ?m p'` with `p` in the set, `p' ∈ restrict`, adds `p'` as soon as
///   some broadcast of `m` from the set into `restrict` exists.
pub fn forward_saturation(
    proto: &BroadcastProtocol,
    seed: &BTreeSet<StateId>,
    restrict: &BTreeSet<StateId>,
) -> BTreeSet<StateId> {
    let n = proto.num_states();
    let mut out_broadcast: Vec<Vec<(usize, StateId)>> = vec![Vec::new(); n];
    let mut out_receive: Vec<Vec<(usize, StateId)>> = vec![Vec::new(); n];
    for t in proto.transitions() {
        if !restrict.contains(&t.target) {
            continue;
        }
        match t.action {
            Action::Broadcast(m) => out_broadcast[t.source.index()].push((m.index(), t.target)),
            Action::Receive(m) => out_receive[t.source.index()].push((m.index(), t.target)),
        }
    }
    let mut in_set = vec![false; n];
    let mut enabled = vec![false; proto.num_messages()];
    // receivers waiting for their message to become broadcastable
    let mut waiting: Vec<Vec<StateId>> = vec![Vec::new(); proto.num_messages()];
    let mut work: Vec<StateId> = Vec::new();
    for &s in seed.intersection(restrict) {
        in_set[s.index()] = true;
        work.push(s);
    }
    let add = |s: StateId, in_set: &mut Vec<bool>, work: &mut Vec<StateId>| {
        if !in_set[s.index()] {
            in_set[s.index()] = true;
            work.push(s);
        }
    };
    while let Some(s) = work.pop() {
        for &(m, t) in &out_broadcast[s.index()] {
            add(t, &mut in_set, &mut work);
            if !enabled[m] {
                enabled[m] = true;
                for r in std::mem::take(&mut waiting[m]) {
                    add(r, &mut in_set, &mut work);
                }
            }
        }
        for &(m, t) in &out_receive[s.index()] {
            if enabled[m] {
                add(t, &mut in_set, &mut work);
            } else {
                waiting[m].push(t);
            }
        }
    }
    (0..n).filter(|&i| in_set[i]).map(|i| StateId(i as u32)).collect()
}

/// Forward saturation of the reversed protocol.
pub fn backward_saturation(
    proto: &BroadcastProtocol,
    seed: &BTreeSet<StateId>,
    restrict: &BTreeSet<StateId>,
) -> BTreeSet<StateId> {
    forward_saturation(&proto.reversed(), seed, restrict)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SaturationRound {
    pub forward: BTreeSet<StateId>,
    pub backward: BTreeSet<StateId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SaturationCertificate {
    pub final_set: BTreeSet<StateId>,
    pub iterations: usize,
    pub history: Vec<SaturationRound>,
    pub meets_initial: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum SynchronizationVerdict {
    Yes(SaturationCertificate),
    No(SaturationCertificate),
}

impl SynchronizationVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, Self::Yes(_))
    }

    pub fn certificate(&self) -> &SaturationCertificate {
        match self {
            Self::Yes(c) | Self::No(c) => c,
        }
    }
}

/// Shrinks the state set to the states that are both reachable from its
/// initial part and co-reachable from its target part; YES iff something
/// survives. A protocol without a target set is treated as having `F = ∅`.
pub fn decide_synchronization_unconstrained(proto: &BroadcastProtocol) -> SynchronizationVerdict {
    let empty = BTreeSet::new();
    let initial = proto.initial_states();
    let target = proto.target_set().unwrap_or(&empty);
    let reversed = proto.reversed();
    let mut s: BTreeSet<StateId> = proto.states().collect();
    let mut history = Vec::new();
    loop {
        let seed_f: BTreeSet<StateId> = initial.intersection(&s).copied().collect();
        let seed_b: BTreeSet<StateId> = target.intersection(&s).copied().collect();
        let forward = forward_saturation(proto, &seed_f, &s);
        let backward = forward_saturation(&reversed, &seed_b, &s);
        let next: BTreeSet<StateId> = forward.intersection(&backward).copied().collect();
        history.push(SaturationRound { forward, backward });
        if next == s {
            break;
        }
        s = next;
    }
    let cert = SaturationCertificate {
        meets_initial: s.iter().any(|q| initial.contains(q)),
        iterations: history.len(),
        final_set: s,
        history,
    };
    if cert.final_set.is_empty() {
        SynchronizationVerdict::No(cert)
    } else {
        SynchronizationVerdict::Yes(cert)
    }
}

pub fn decide_coverability_unconstrained(proto: &BroadcastProtocol, f: StateId) -> bool {
    let all: BTreeSet<StateId> = proto.states().collect();
    forward_saturation(proto, proto.initial_states(), &all).contains(&f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_protocol;
    use proptest::prelude::*;

    const FIG1: &str = "
        states q0 q1 q2 q3 q4 q5 q6 q7 q8
        init q0
        target q4 q6 q8
        msg a b c d
        q0 !a q1
        q1 !b q2
        q2 ?c q3
        q3 ?d q4
        q0 ?a q5
        q5 !c q6
        q0 ?a q7
        q7 !d q8
    ";

    /// Naive closure: sweep every transition until nothing changes.
    fn naive_forward(p: &BroadcastProtocol, seed: &BTreeSet<StateId>, restrict: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        let mut s: BTreeSet<StateId> = seed.intersection(restrict).copied().collect();
        loop {
            let before = s.len();
            for t in p.transitions() {
                if !s.contains(&t.source) || !restrict.contains(&t.target) {
                    continue;
                }
                let fires = match t.action {
                    Action::Broadcast(_) => true,
                    Action::Receive(m) => p.transitions().iter().any(|u| {
                        u.action == Action::Broadcast(m) && s.contains(&u.source) && restrict.contains(&u.target)
                    }),
                };
                if fires {
                    s.insert(t.target);
                }
            }
            if s.len() == before {
                return s;
            }
        }
    }

    fn ids(p: &BroadcastProtocol, names: &[&str]) -> BTreeSet<StateId> {
        names.iter().map(|n| p.state_by_name(n).unwrap()).collect()
    }

    #[test]
    fn fig1_forward_and_backward() {
        let p = parse_protocol(FIG1).unwrap();
        let all: BTreeSet<StateId> = p.states().collect();
        let fwd = forward_saturation(&p, &ids(&p, &["q0"]), &all);
        assert_eq!(fwd, naive_forward(&p, &ids(&p, &["q0"]), &all));
        assert_eq!(fwd, all);
        let bwd = backward_saturation(&p, p.target_set().unwrap(), &all);
        assert_eq!(bwd, naive_forward(&p.reversed(), p.target_set().unwrap(), &all));
        assert!(bwd.contains(&ids(&p, &["q0"]).into_iter().next().unwrap()));
    }

    #[test]
    fn trivial_seeds() {
        let p = parse_protocol(FIG1).unwrap();
        let all: BTreeSet<StateId> = p.states().collect();
        assert!(forward_saturation(&p, &BTreeSet::new(), &all).is_empty());
        assert!(backward_saturation(&p, &BTreeSet::new(), &all).is_empty());
        let some = ids(&p, &["q0", "q1"]);
        assert_eq!(backward_saturation(&p, &all, &some), some);
        let recv_only = parse_protocol("states a b\ninit a\ntarget b\nmsg m\na ?m b\n").unwrap();
        let everything: BTreeSet<StateId> = recv_only.states().collect();
        assert_eq!(
            forward_saturation(&recv_only, recv_only.initial_states(), &everything),
            ids(&recv_only, &["a"])
        );
    }

    #[test]
    fn synchronization_decisions() {
        let p = parse_protocol(FIG1).unwrap();
        let v = decide_synchronization_unconstrained(&p);
        assert!(v.is_yes());
        assert!(v.certificate().meets_initial);
        let single = parse_protocol("states q0\ninit q0\ntarget q0\nmsg m\n").unwrap();
        assert!(decide_synchronization_unconstrained(&single).is_yes());
        let apart = parse_protocol("states a b c\ninit a\ntarget c\nmsg m\na !m b\nc !m c\n").unwrap();
        let v = decide_synchronization_unconstrained(&apart);
        assert!(!v.is_yes());
        assert!(v.certificate().final_set.is_empty());
    }

    #[test]
    fn coverability() {
        let p = parse_protocol(FIG1).unwrap();
        assert!(decide_coverability_unconstrained(&p, p.state_by_name("q8").unwrap()));
        assert!(decide_coverability_unconstrained(&p, p.state_by_name("q0").unwrap()));
        let island = parse_protocol("states a b c\ninit a\nmsg m\na !m b\nc !m a\n").unwrap();
        assert!(!decide_coverability_unconstrained(&island, island.state_by_name("c").unwrap()));
    }

    fn random_protocol() -> impl Strategy<Value = BroadcastProtocol> {
        let t = (0u32..5, any::<bool>(), 0u32..3, 0u32..5);
        (proptest::collection::vec(t, 0..14), 1u32..5, proptest::collection::btree_set(0u32..5, 0..4)).prop_map(
            |(ts, ninit, target)| {
                let mut b = crate::model::protocol::ProtocolBuilder::new();
                for i in 0..5 {
                    b.state(&format!("s{i}"));
                }
                for m in 0..3 {
                    b.message(&format!("m{m}"));
                }
                for i in 0..ninit {
                    b.initial(&format!("s{i}"));
                }
                b.declare_target();
                for t in target {
                    b.target(&format!("s{t}"));
                }
                for (s, bc, m, d) in ts {
                    let (s, m, d) = (format!("s{s}"), format!("m{m}"), format!("s{d}"));
                    if bc {
                        b.broadcast(&s, &m, &d);
                    } else {
                        b.receive(&s, &m, &d);
                    }
                }
                b.build().unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn worklist_matches_naive_closure(p in random_protocol(), seed in proptest::collection::btree_set(0u32..5, 0..5),
                                          restrict in proptest::collection::btree_set(0u32..5, 0..6)) {
            let seed: BTreeSet<StateId> = seed.into_iter().map(StateId).collect();
            let restrict: BTreeSet<StateId> = restrict.into_iter().map(StateId).collect();
            let f = forward_saturation(&p, &seed, &restrict);
            prop_assert_eq!(&f, &naive_forward(&p, &seed, &restrict));
            prop_assert!(f.is_subset(&restrict));
            // idempotent
            prop_assert_eq!(&forward_saturation(&p, &f, &restrict), &f);
            // monotone in the seed
            let bigger: BTreeSet<StateId> = seed.iter().copied().chain([StateId(0)]).collect();
            prop_assert!(f.is_subset(&forward_saturation(&p, &bigger, &restrict)));
        }

        #[test]
        fn fixpoint_sequence_shrinks(p in random_protocol()) {
            let v = decide_synchronization_unconstrained(&p);
            let c = v.certificate();
            prop_assert!(c.iterations <= p.num_states() + 1);
            let mut prev: Option<BTreeSet<StateId>> = None;
            for r in &c.history {
                let s: BTreeSet<StateId> = r.forward.intersection(&r.backward).copied().collect();
                if let Some(p) = &prev { prop_assert!(s.is_subset(p)); }
                prev = Some(s);
            }
            // every surviving state is reachable and co-reachable inside the final set
            let fin = &c.final_set;
            let init: BTreeSet<StateId> = p.initial_states().intersection(fin).copied().collect();
            let tgt: BTreeSet<StateId> = p.target_set().unwrap().intersection(fin).copied().collect();
            prop_assert_eq!(&forward_saturation(&p, &init, fin), fin);
            prop_assert_eq!(&backward_saturation(&p, &tgt, fin), fin);
            prop_assert_eq!(v.is_yes(), c.meets_initial);
        }
    }
}
