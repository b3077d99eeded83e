//! Canonical labelling of configurations, for deduplication up to
//! isomorphism.
//!
//! Colour refinement (labels first, then neighbour colour multisets) runs to
//! a stable partition; remaining ties are broken by individualising each
//! vertex of the first non-trivial cell, skipping twins. The smallest leaf
//! encoding wins. After [`LEAF_LIMIT`] leaves the best one so far is taken,
//! which can only cost reduction, never merge non-isomorphic graphs.

use super::packed::Packed;
use crate::model::config::{Configuration, NodeId};

pub const LEAF_LIMIT: usize = 256;

fn refine(g: &Packed, mut col: Vec<u32>) -> Vec<u32> {
    let n = g.len();
    let mut classes = usize::MAX;
    loop {
        let sigs: Vec<(u32, Vec<u32>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<u32> = g.neighbors(v).map(|w| col[w]).collect();
                nb.sort_unstable();
                (col[v], nb)
            })
            .collect();
        let mut sorted = sigs.clone();
        sorted.sort();
        sorted.dedup();
        col = sigs.iter().map(|s| sorted.binary_search(s).unwrap() as u32).collect();
        if sorted.len() == classes {
            return col;
        }
        classes = sorted.len();
    }
}

fn permuted(g: &Packed, order: &[usize]) -> Packed {
    let n = g.len();
    let mut inv = vec![0usize; n];
    for (new, &old) in order.iter().enumerate() {
        inv[old] = new;
    }
    let mut adj = vec![0u16; n];
    for (new, &old) in order.iter().enumerate() {
        for w in g.neighbors(old) {
            adj[new] |= 1 << inv[w];
        }
    }
    Packed {
        labels: order.iter().map(|&v| g.labels[v]).collect(),
        adj,
    }
}

fn twins(g: &Packed, u: usize, w: usize) -> bool {
    g.adj[u] & !(1 << w) == g.adj[w] & !(1 << u)
}

struct Best {
    form: Option<(Packed, Vec<usize>)>,
    leaves: usize,
}

fn explore(g: &Packed, col: Vec<u32>, best: &mut Best) {
    let n = g.len();
    let mut count = vec![0usize; n];
    for &c in &col {
        count[c as usize] += 1;
    }
    let Some(cell_colour) = (0..n).find(|&c| count[c] > 1) else {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| col[v]);
        let candidate = permuted(g, &order);
        best.leaves += 1;
        if best.form.as_ref().is_none_or(|(f, _)| candidate < *f) {
            best.form = Some((candidate, order));
        }
        return;
    };
    let cell: Vec<usize> = (0..n).filter(|&v| col[v] as usize == cell_colour).collect();
    let mut tried: Vec<usize> = Vec::new();
    for &v in &cell {
        if tried.iter().any(|&u| twins(g, u, v)) {
            continue;
        }
        tried.push(v);
        let mut split: Vec<u32> = col.iter().map(|&c| 2 * c + 1).collect();
        split[v] -= 1;
        explore(g, refine(g, split), best);
        if best.leaves >= LEAF_LIMIT {
            return;
        }
    }
}

/// Returns the canonical form and `order`, where node `i` of the form is
/// node `order[i]` of the input.
pub(crate) fn canonize(g: &Packed) -> (Packed, Vec<usize>) {
    if g.len() <= 1 {
        return (g.clone(), (0..g.len()).collect());
    }
    let col = refine(g, g.labels.iter().map(|s| s.0).collect());
    let mut best = Best { form: None, leaves: 0 };
    explore(g, col, &mut best);
    best.form.expect("at least one leaf")
}

pub fn canonical_form(g: &Configuration) -> (Configuration, Vec<NodeId>) {
    let (form, order) = canonize(&Packed::from_config(g));
    (form.to_config(), order.into_iter().map(|v| v as NodeId).collect())
}
