//! Staggered copies with reconfigurations split into single edges.

use std::collections::VecDeque;

use super::{offset, without_trailing_reconf, Builder, TransformError};
use crate::model::config::Edge;
use crate::model::execution::{Execution, Step};
use crate::model::protocol::BroadcastProtocol;

/// Runs `r` copies of `e`, `r` the largest reconfiguration of `e`. Copy `i`
/// makes its `j`-th communication at global slot `i + j*r` and spends the
/// following `r` reconfiguration steps on its pending edges, one per step.
/// Copies are node-disjoint, so each node sees at most one change per step.
pub fn to_one_locally_constrained(proto: &BroadcastProtocol, e: &Execution) -> Result<Execution, TransformError> {
    let steps = without_trailing_reconf(e);
    let steps = match steps.first() {
        Some(s) if !s.is_communication() && s.reconf_size() > 0 => return Err(TransformError::LeadingReconfiguration),
        Some(s) if !s.is_communication() => &steps[1..],
        _ => steps,
    };
    let n0 = e.num_nodes();
    let r = steps.iter().map(Step::reconf_size).max().unwrap_or(0).max(1);
    let comms: Vec<&Step> = steps.iter().filter(|s| s.is_communication()).collect();
    // atoms[j]: single-edge changes between communications j and j+1
    let mut atoms: Vec<Vec<(Edge, bool)>> = vec![Vec::new(); comms.len()];
    let mut j = 0;
    for s in steps {
        match s {
            Step::Communication { .. } => j += 1,
            Step::Reconfiguration { added, removed } => {
                atoms[j - 1].extend(removed.iter().map(|&x| (x, false)));
                atoms[j - 1].extend(added.iter().map(|&x| (x, true)));
            }
        }
    }

    let mut pending: Vec<VecDeque<(Edge, bool)>> = vec![VecDeque::new(); r];
    let mut out = Builder::new();
    for t in 0..r * comms.len() {
        let (i, j) = (t % r, t / r);
        if t > 0 {
            let (mut add, mut remove) = (Vec::new(), Vec::new());
            for (c, q) in pending.iter_mut().enumerate() {
                if let Some((x, is_add)) = q.pop_front() {
                    let x = x.shifted(offset(c, n0));
                    if is_add {
                        add.push(x);
                    } else {
                        remove.push(x);
                    }
                }
            }
            out.reconf(Step::reconf(add, remove));
        }
        debug_assert!(pending[i].is_empty());
        out.comm(comms[j].shifted(offset(i, n0)));
        pending[i].extend(atoms[j].iter().copied());
    }
    out.finish(proto, e.initial().power(r))
}
