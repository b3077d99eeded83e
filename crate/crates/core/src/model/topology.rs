//! Degree and path measurements on configurations.

use std::collections::VecDeque;

use serde::Serialize;

use super::config::Configuration;
use super::policy::TopologyBounds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TopologyReport {
    pub max_degree: usize,
    /// Number of edges on the longest simple path.
    pub longest_simple_path: usize,
    /// Largest finite shortest-path distance; disconnected pairs are ignored.
    pub diameter: usize,
    pub degree_ok: bool,
    pub path_ok: bool,
}

impl TopologyReport {
    pub fn passes(&self) -> bool {
        self.degree_ok && self.path_ok
    }
}

pub fn max_degree(g: &Configuration) -> usize {
    g.adjacency().iter().map(Vec::len).max().unwrap_or(0)
}

/// Exact longest simple path by exhaustive DFS. Exponential; meant for
/// graphs with a dozen nodes or so.
pub fn longest_simple_path(g: &Configuration) -> usize {
    longest_path_at_most(g, usize::MAX)
}

/// Longest simple path, stopping early once one longer than `limit` is seen.
fn longest_path_at_most(g: &Configuration, limit: usize) -> usize {
    let adj = g.adjacency();
    let n = adj.len();
    let mut best = 0;
    let mut visited = vec![false; n];
    fn dfs(v: usize, len: usize, adj: &[Vec<u32>], visited: &mut [bool], best: &mut usize, limit: usize) {
        if len > *best {
            *best = len;
        }
        if *best > limit {
            return;
        }
        for &w in &adj[v] {
            let w = w as usize;
            if !visited[w] {
                visited[w] = true;
                dfs(w, len + 1, adj, visited, best, limit);
                visited[w] = false;
                if *best > limit {
                    return;
                }
            }
        }
    }
    for s in 0..n {
        if adj[s].is_empty() {
            continue;
        }
        visited[s] = true;
        dfs(s, 0, &adj, &mut visited, &mut best, limit);
        visited[s] = false;
        if best > limit {
            break;
        }
    }
    best
}

pub fn diameter(g: &Configuration) -> usize {
    let adj = g.adjacency();
    let n = adj.len();
    let mut best = 0;
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            best = best.max(dist[v]);
            for &w in &adj[v] {
                let w = w as usize;
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    best
}

pub fn check_topology(g: &Configuration, max_degree_bound: Option<usize>, path_bound: Option<usize>) -> TopologyReport {
    let deg = max_degree(g);
    let path = longest_simple_path(g);
    TopologyReport {
        max_degree: deg,
        longest_simple_path: path,
        diameter: diameter(g),
        degree_ok: max_degree_bound.is_none_or(|d| deg <= d),
        path_ok: path_bound.is_none_or(|k| path <= k),
    }
}

/// Cheap yes/no test used on every successor during search.
pub fn satisfies(g: &Configuration, bounds: &TopologyBounds) -> bool {
    if let Some(d) = bounds.max_degree {
        if max_degree(g) > d {
            return false;
        }
    }
    if let Some(k) = bounds.max_path {
        if longest_path_at_most(g, k) > k {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::protocol::StateId;

    fn graph(n: usize, edges: &[(u32, u32)]) -> Configuration {
        Configuration::from_pairs(vec![StateId(0); n], edges).unwrap()
    }

    #[test]
    fn line_graph() {
        let r = check_topology(&graph(3, &[(0, 1), (1, 2)]), None, None);
        assert_eq!((r.max_degree, r.longest_simple_path, r.diameter), (2, 2, 2));
    }

    #[test]
    fn matching_has_degree_one() {
        let r = check_topology(&graph(4, &[(0, 1), (2, 3)]), Some(1), Some(1));
        assert_eq!(r.max_degree, 1);
        assert!(r.passes());
    }

    #[test]
    fn star_is_two_bounded_path() {
        let g = graph(3, &[(0, 1), (0, 2)]);
        let r = check_topology(&g, Some(2), Some(2));
        assert_eq!((r.max_degree, r.longest_simple_path), (2, 2));
        assert!(r.passes());
        assert!(!check_topology(&g, Some(1), None).passes());
    }

    #[test]
    fn cycle_longest_path_exceeds_diameter() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let r = check_topology(&g, None, None);
        assert_eq!(r.longest_simple_path, 4);
        assert_eq!(r.diameter, 2);
        assert!(!satisfies(&g, &TopologyBounds { max_degree: None, max_path: Some(3) }));
        assert!(satisfies(&g, &TopologyBounds { max_degree: Some(2), max_path: Some(4) }));
    }

    #[test]
    fn empty_graph() {
        let r = check_topology(&Configuration::empty(), Some(0), Some(0));
        assert!(r.passes());
        assert_eq!(r.longest_simple_path, 0);
    }
}
