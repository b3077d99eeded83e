//! Configurations: undirected state-labelled graphs over dense node indices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::protocol::{BroadcastProtocol, StateId};

pub type NodeId = u32;

/// An unordered pair of distinct nodes, stored with the smaller endpoint first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(NodeId, NodeId);

impl Edge {
    /// Returns `None` for self-loops.
    pub fn new(u: NodeId, v: NodeId) -> Option<Self> {
        match u.cmp(&v) {
            std::cmp::Ordering::Less => Some(Edge(u, v)),
            std::cmp::Ordering::Greater => Some(Edge(v, u)),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn low(self) -> NodeId {
        self.0
    }

    pub fn high(self) -> NodeId {
        self.1
    }

    pub fn touches(self, n: NodeId) -> bool {
        self.0 == n || self.1 == n
    }

    pub fn other(self, n: NodeId) -> NodeId {
        if self.0 == n {
            self.1
        } else {
            self.0
        }
    }

    pub fn shifted(self, offset: NodeId) -> Self {
        Edge(self.0 + offset, self.1 + offset)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("edge endpoint {0} is not a node")]
    UnknownNode(NodeId),
    #[error("label of node {node} is not a protocol state ({state})")]
    UnknownState { node: NodeId, state: u32 },
}

/// Nodes are `0..labels.len()`; `labels[v]` is the state of node `v`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    labels: Vec<StateId>,
    edges: BTreeSet<Edge>,
}

impl Configuration {
    pub fn new(labels: Vec<StateId>, edges: impl IntoIterator<Item = Edge>) -> Result<Self, ConfigError> {
        let n = labels.len() as NodeId;
        let edges: BTreeSet<Edge> = edges.into_iter().collect();
        for e in &edges {
            if e.high() >= n {
                return Err(ConfigError::UnknownNode(e.high()));
            }
        }
        Ok(Self { labels, edges })
    }

    /// Builds from raw pairs, rejecting self-loops.
    pub fn from_pairs(labels: Vec<StateId>, pairs: &[(NodeId, NodeId)]) -> Result<Self, ConfigError> {
        let mut edges = Vec::with_capacity(pairs.len());
        for &(u, v) in pairs {
            edges.push(Edge::new(u, v).ok_or(ConfigError::SelfLoop(u))?);
        }
        Self::new(labels, edges)
    }

    pub fn isolated(labels: Vec<StateId>) -> Self {
        Self {
            labels,
            edges: BTreeSet::new(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        0..self.labels.len() as NodeId
    }

    pub fn labels(&self) -> &[StateId] {
        &self.labels
    }

    pub fn label(&self, v: NodeId) -> StateId {
        self.labels[v as usize]
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        self.edges.contains(&e)
    }

    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.edges.iter().filter(move |e| e.touches(v)).map(move |e| e.other(v))
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.edges.iter().filter(|e| e.touches(v)).count()
    }

    pub fn adjacency(&self) -> Vec<Vec<NodeId>> {
        let mut adj = vec![Vec::new(); self.labels.len()];
        for e in &self.edges {
            adj[e.low() as usize].push(e.high());
            adj[e.high() as usize].push(e.low());
        }
        adj
    }

    /// Number of nodes carrying each state.
    pub fn label_counts(&self) -> BTreeMap<StateId, usize> {
        let mut counts = BTreeMap::new();
        for &l in &self.labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
    }

    pub fn label_set(&self) -> BTreeSet<StateId> {
        self.labels.iter().copied().collect()
    }

    pub fn is_initial(&self, proto: &BroadcastProtocol) -> bool {
        self.labels.iter().all(|&l| proto.is_initial(l))
    }

    /// All labels lie in the protocol's target set (vacuous for no nodes).
    pub fn is_synchronized(&self, proto: &BroadcastProtocol) -> bool {
        self.labels.iter().all(|&l| proto.is_target(l))
    }

    pub fn check_against(&self, proto: &BroadcastProtocol) -> Result<(), ConfigError> {
        for (v, l) in self.labels.iter().enumerate() {
            if l.index() >= proto.num_states() {
                return Err(ConfigError::UnknownState {
                    node: v as NodeId,
                    state: l.0,
                });
            }
        }
        Ok(())
    }

    pub(crate) fn set_label(&mut self, v: NodeId, s: StateId) {
        self.labels[v as usize] = s;
    }

    pub(crate) fn edges_mut(&mut self) -> &mut BTreeSet<Edge> {
        &mut self.edges
    }

    /// Disjoint union; the nodes of `other` are shifted past those of `self`.
    pub fn juxtapose(&self, other: &Configuration) -> Configuration {
        let offset = self.labels.len() as NodeId;
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|e| e.shifted(offset)));
        Configuration { labels, edges }
    }

    /// `copies` disjoint copies; copy `c` owns nodes `c*n .. (c+1)*n`.
    pub fn power(&self, copies: usize) -> Configuration {
        let mut out = Configuration::empty();
        for _ in 0..copies {
            out = out.juxtapose(self);
        }
        out
    }

    /// Restriction to a contiguous node range, re-indexed from zero.
    pub fn restrict(&self, range: std::ops::Range<NodeId>) -> Configuration {
        let labels = self.labels[range.start as usize..range.end as usize].to_vec();
        let edges = self
            .edges
            .iter()
            .filter(|e| range.contains(&e.low()) && range.contains(&e.high()))
            .map(|e| Edge(e.low() - range.start, e.high() - range.start))
            .collect();
        Configuration { labels, edges }
    }

    /// Graphviz rendering with state names as node labels.
    pub fn to_dot(&self, proto: &BroadcastProtocol) -> String {
        let mut out = String::from("graph configuration {\n");
        for v in self.nodes() {
            let _ = writeln!(out, "  n{v} [label=\"{v}: {}\"];", proto.state_name(self.label(v)));
        }
        for e in &self.edges {
            let _ = writeln!(out, "  n{} -- n{};", e.low(), e.high());
        }
        out.push_str("}\n");
        out
    }
}
