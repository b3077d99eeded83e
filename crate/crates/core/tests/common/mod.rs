#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rbnet::model::config::{Configuration, Edge, NodeId};
use rbnet::model::execution::{apply_step, Execution, Step};
use rbnet::model::protocol::{BroadcastProtocol, ProtocolBuilder};
use rbnet::semantics::enabled_communications;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Random protocol on `states` states and `msgs` messages: one or two initial
/// states, one to three targets, and each (state, action) pair present with
/// probability `density`.
pub fn random_protocol(r: &mut ChaCha8Rng, states: usize, msgs: usize, density: f64) -> BroadcastProtocol {
    let mut b = ProtocolBuilder::new();
    let names: Vec<String> = (0..states).map(|i| format!("s{i}")).collect();
    for n in &names {
        b.state(n);
    }
    let ms: Vec<String> = (0..msgs).map(|i| format!("m{i}")).collect();
    for m in &ms {
        b.message(m);
    }
    b.initial(&names[0]);
    if states > 2 && r.gen_bool(0.3) {
        b.initial(&names[1]);
    }
    b.declare_target();
    let targets = r.gen_range(1..=3.min(states));
    for n in names.choose_multiple(r, targets) {
        b.target(n);
    }
    for from in &names {
        for m in &ms {
            for bcast in [true, false] {
                if r.gen_bool(density) {
                    let to = names.choose(r).unwrap();
                    if bcast {
                        b.broadcast(from, m, to);
                    } else {
                        b.receive(from, m, to);
                    }
                }
            }
        }
    }
    b.build().expect("generated protocols are well formed")
}

/// Random initial configuration on `n` nodes.
pub fn random_initial(r: &mut ChaCha8Rng, p: &BroadcastProtocol, n: usize, edge_prob: f64) -> Configuration {
    let init: Vec<_> = p.initial_states().iter().copied().collect();
    let labels = (0..n).map(|_| *init.choose(r).unwrap()).collect();
    let edges: Vec<Edge> = (0..n as NodeId)
        .flat_map(|u| (u + 1..n as NodeId).map(move |v| Edge::new(u, v).unwrap()))
        .filter(|_| r.gen_bool(edge_prob))
        .collect();
    Configuration::new(labels, edges).unwrap()
}

/// Random walk of up to `comms` communications, each preceded by a
/// reconfiguration toggling up to `width` random edges (possibly none).
/// Stops early when nothing is enabled.
pub fn random_walk(r: &mut ChaCha8Rng, p: &BroadcastProtocol, g0: Configuration, comms: usize, width: usize) -> Execution {
    random_walk_by(r, p, g0, comms, |r, _, _| r.gen_range(0..=width))
}

/// Random walk in which every reconfiguration keeps the total number of
/// changed edges within `k` times the communications before it, so the
/// walk is k-balanced.
pub fn random_balanced_walk(r: &mut ChaCha8Rng, p: &BroadcastProtocol, g0: Configuration, comms: usize, k: usize) -> Execution {
    random_walk_by(r, p, g0, comms, |r, b, done| {
        let credit = (k * b).saturating_sub(done);
        r.gen_range(0..=credit.min(2 * k))
    })
}

/// `width(rng, communications so far, edges changed so far)` picks how many
/// random toggles the next reconfiguration attempts.
pub fn random_walk_by(
    r: &mut ChaCha8Rng,
    p: &BroadcastProtocol,
    g0: Configuration,
    comms: usize,
    mut width: impl FnMut(&mut ChaCha8Rng, usize, usize) -> usize,
) -> Execution {
    let n = g0.num_nodes();
    let mut done = 0;
    let mut g = g0.clone();
    let mut steps: Vec<Step> = Vec::new();
    for _ in 0..comms {
        if !steps.is_empty() {
            let mut flips: Vec<Edge> = Vec::new();
            if n > 1 {
                for _ in 0..width(r, steps.len().div_ceil(2), done) {
                    let u = r.gen_range(0..n as NodeId);
                    let v = r.gen_range(0..n as NodeId);
                    if let Some(e) = Edge::new(u, v) {
                        if !flips.contains(&e) {
                            flips.push(e);
                        }
                    }
                }
            }
            let (add, remove): (Vec<Edge>, Vec<Edge>) = flips.iter().partition(|e| !g.has_edge(**e));
            done += flips.len();
            let s = Step::reconf(add, remove);
            g = apply_step(p, &g, &s).unwrap();
            steps.push(s);
        }
        let options = enabled_communications(p, &g);
        let Some(c) = options.choose(r) else {
            steps.pop();
            break;
        };
        g = apply_step(p, &g, c).unwrap();
        steps.push(c.clone());
    }
    Execution::new(p, g0, steps).unwrap()
}

/// Draws from `gen` until no initial state is a target, so the instance is
/// not settled by the empty execution.
pub fn nontrivial(r: &mut ChaCha8Rng, mut gen: impl FnMut(&mut ChaCha8Rng) -> BroadcastProtocol) -> BroadcastProtocol {
    loop {
        let p = gen(r);
        if p.initial_states().iter().all(|&s| !p.is_target(s)) {
            return p;
        }
    }
}
