//! Bitset adjacency used inside the search loops.

use std::collections::BTreeSet;

use crate::model::config::{Configuration, Edge, NodeId};
use crate::model::policy::TopologyBounds;
use crate::model::protocol::StateId;

/// Largest node count the explicit engine handles.
pub const MAX_NODES: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Packed {
    pub labels: Vec<StateId>,
    pub adj: Vec<u16>,
}

impl Packed {
    pub fn from_config(g: &Configuration) -> Self {
        assert!(g.num_nodes() <= MAX_NODES, "at most {MAX_NODES} nodes");
        let mut adj = vec![0u16; g.num_nodes()];
        for e in g.edges() {
            adj[e.low() as usize] |= 1 << e.high();
            adj[e.high() as usize] |= 1 << e.low();
        }
        Self {
            labels: g.labels().to_vec(),
            adj,
        }
    }

    pub fn to_config(&self) -> Configuration {
        Configuration::new(self.labels.clone(), self.edge_set()).expect("packed graphs are well formed")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u] >> v & 1 == 1
    }

    pub fn toggle(&mut self, u: usize, v: usize) {
        self.adj[u] ^= 1 << v;
        self.adj[v] ^= 1 << u;
    }

    pub fn edge_set(&self) -> BTreeSet<Edge> {
        let mut out = BTreeSet::new();
        for u in 0..self.len() {
            let mut hi = self.adj[u] >> (u + 1);
            let mut v = u + 1;
            while hi != 0 {
                if hi & 1 == 1 {
                    out.insert(Edge::new(u as NodeId, v as NodeId).unwrap());
                }
                hi >>= 1;
                v += 1;
            }
        }
        out
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> {
        let bits = self.adj[v];
        (0..MAX_NODES).filter(move |&w| bits >> w & 1 == 1)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|a| a.count_ones() as usize).max().unwrap_or(0)
    }

    /// Whether some simple path has more than `limit` edges.
    pub fn has_path_longer_than(&self, limit: usize) -> bool {
        fn dfs(adj: &[u16], v: usize, visited: u16, len: usize, limit: usize) -> bool {
            if len > limit {
                return true;
            }
            let mut next = adj[v] & !visited;
            while next != 0 {
                let w = next.trailing_zeros() as usize;
                next &= next - 1;
                if dfs(adj, w, visited | 1 << w, len + 1, limit) {
                    return true;
                }
            }
            false
        }
        (0..self.len()).any(|s| self.adj[s] != 0 && dfs(&self.adj, s, 1 << s, 0, limit))
    }

    pub fn satisfies(&self, bounds: &TopologyBounds) -> bool {
        bounds.max_degree.is_none_or(|d| self.max_degree() <= d)
            && bounds.max_path.is_none_or(|k| !self.has_path_longer_than(k))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.count_ones() as usize).sum::<usize>() / 2
    }
}

/// All pairs `(u, v)` with `u < v < n`, in lexicographic order.
pub fn edge_universe(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::topology;

    #[test]
    fn round_trip_and_measures_match_reference() {
        let g = Configuration::from_pairs(vec![StateId(0); 5], &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let p = Packed::from_config(&g);
        assert_eq!(p.to_config(), g);
        assert_eq!(p.max_degree(), topology::max_degree(&g));
        let longest = topology::longest_simple_path(&g);
        assert!(p.has_path_longer_than(longest - 1));
        assert!(!p.has_path_longer_than(longest));
        assert_eq!(p.edge_count(), 5);
        assert_eq!(edge_universe(4).len(), 6);
    }
}
