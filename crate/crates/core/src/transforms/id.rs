//! Rewiring only the broadcaster before each communication, and running
//! enough copies for a diverging bound to cover it.

use std::collections::BTreeSet;

use super::{offset, Builder, TransformError};
use crate::model::config::Edge;
use crate::model::execution::{Execution, Step};
use crate::model::policy::BoundingFunction;
use crate::model::protocol::BroadcastProtocol;

/// Replays the communications of `e`, each preceded by one reconfiguration
/// that makes the broadcaster's neighbourhood what it was in `e`. Only edges
/// at the broadcaster change, so each step touches at most `n - 1` edges.
pub fn to_id_constrained(proto: &BroadcastProtocol, e: &Execution) -> Result<Execution, TransformError> {
    let mut edges: BTreeSet<Edge> = e.initial().edges().clone();
    let mut out = Builder::new();
    for (i, step) in e.steps().iter().enumerate() {
        let Step::Communication { broadcaster: v, .. } = step else {
            continue;
        };
        let before = &e.configs()[i];
        let mut want: BTreeSet<Edge> = edges.iter().filter(|x| !x.touches(*v)).copied().collect();
        want.extend(before.neighbors(*v).map(|u| Edge::new(*v, u).unwrap()));
        out.reconf(Step::between(&edges, &want));
        edges = want;
        out.comm(step.clone());
    }
    out.finish(proto, e.initial().clone())
}

/// Smallest `k` with `f(k * n0) >= n0`.
pub fn copies_for(f: BoundingFunction, n0: usize) -> Result<usize, TransformError> {
    if !f.is_diverging() {
        return Err(TransformError::NotDiverging(f));
    }
    Ok((1..)
        .find(|&k| f.eval((k * n0) as u64) >= n0 as u64)
        .expect("diverging functions reach every value"))
}

/// `k` copies of [`to_id_constrained`] run one after the other, with `k`
/// from [`copies_for`].
pub fn to_f_constrained(proto: &BroadcastProtocol, e: &Execution, f: BoundingFunction) -> Result<Execution, TransformError> {
    let n0 = e.num_nodes();
    let k = copies_for(f, n0)?;
    let once = to_id_constrained(proto, e)?;
    if k == 1 {
        return Ok(once);
    }
    let mut out = Builder::new();
    for c in 0..k {
        for s in once.steps() {
            if s.is_communication() {
                out.comm(s.shifted(offset(c, n0)));
            } else {
                out.reconf(s.shifted(offset(c, n0)));
            }
        }
    }
    out.finish(proto, e.initial().power(k))
}
