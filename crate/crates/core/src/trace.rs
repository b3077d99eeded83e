//! JSON execution traces.
//!
//! ```json
//! { "protocol_ref": "fig1.rbn",
//!   "initial": { "nodes": 2, "labels": ["q0", "q0"], "edges": [[0, 1]] },
//!   "steps": [ { "comm": { "from": 0, "msg": "a", "next": { "0": "q1", "1": "q5" } } },
//!              { "reconf": { "add": [], "remove": [[0, 1]] } } ] }
//! ```
//!
//! `next` gives the new state of the broadcaster and of each neighbour. It may
//! be omitted when the step has a single possible outcome.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::config::{ConfigError, Configuration, Edge, NodeId};
use crate::model::execution::{apply_step, Execution, ReplayError, Step};
use crate::model::protocol::{BroadcastProtocol, StateId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub nodes: usize,
    pub labels: Vec<String>,
    #[serde(default)]
    pub edges: Vec<[NodeId; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceStep {
    Reconf {
        #[serde(default)]
        add: Vec<[NodeId; 2]>,
        #[serde(default)]
        remove: Vec<[NodeId; 2]>,
    },
    Comm {
        from: NodeId,
        msg: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        next: Option<BTreeMap<NodeId, String>>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_ref: Option<String>,
    pub initial: TraceConfig,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("malformed trace: {0}")]
    Json(#[from] serde_json::Error),
    #[error("'nodes' is {nodes} but {labels} labels are given")]
    NodeCount { nodes: usize, labels: usize },
    #[error("unknown state '{0}'")]
    UnknownState(String),
    #[error("step {index}: unknown message '{name}'")]
    UnknownMessage { index: usize, name: String },
    #[error("step {index}: self-loop {{{node},{node}}}")]
    SelfLoop { index: usize, node: NodeId },
    #[error("step {index}: {count} possible outcomes, 'next' is required")]
    Ambiguous { index: usize, count: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

fn edge_list(edges: &std::collections::BTreeSet<Edge>) -> Vec<[NodeId; 2]> {
    edges.iter().map(|e| [e.low(), e.high()]).collect()
}

impl TraceConfig {
    pub fn from_config(proto: &BroadcastProtocol, g: &Configuration) -> Self {
        Self {
            nodes: g.num_nodes(),
            labels: g.labels().iter().map(|&s| proto.state_name(s).to_string()).collect(),
            edges: edge_list(g.edges()),
        }
    }

    pub fn to_config(&self, proto: &BroadcastProtocol) -> Result<Configuration, TraceError> {
        if self.nodes != self.labels.len() {
            return Err(TraceError::NodeCount {
                nodes: self.nodes,
                labels: self.labels.len(),
            });
        }
        let labels = self
            .labels
            .iter()
            .map(|l| proto.state_by_name(l).ok_or_else(|| TraceError::UnknownState(l.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let pairs: Vec<(NodeId, NodeId)> = self.edges.iter().map(|&[u, v]| (u, v)).collect();
        Ok(Configuration::from_pairs(labels, &pairs)?)
    }
}

impl TraceFile {
    pub fn from_execution(proto: &BroadcastProtocol, e: &Execution, protocol_ref: Option<String>) -> Self {
        let steps = e
            .steps()
            .iter()
            .map(|s| match s {
                Step::Reconfiguration { added, removed } => TraceStep::Reconf {
                    add: edge_list(added),
                    remove: edge_list(removed),
                },
                Step::Communication {
                    broadcaster,
                    message,
                    moves,
                } => TraceStep::Comm {
                    from: *broadcaster,
                    msg: proto.message_name(*message).to_string(),
                    next: Some(moves.iter().map(|(&v, &s)| (v, proto.state_name(s).to_string())).collect()),
                },
            })
            .collect();
        Self {
            protocol_ref,
            initial: TraceConfig::from_config(proto, e.initial()),
            steps,
        }
    }

    pub fn parse(text: &str) -> Result<Self, TraceError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("traces always serialize")
    }

    /// Replays the trace, resolving omitted `next` maps when the outcome is
    /// unique.
    pub fn to_execution(&self, proto: &BroadcastProtocol) -> Result<Execution, TraceError> {
        let initial = self.initial.to_config(proto)?;
        let mut current = initial.clone();
        let mut steps = Vec::with_capacity(self.steps.len());
        for (index, raw) in self.steps.iter().enumerate() {
            if index > 0 && matches!(raw, TraceStep::Comm { .. }) == matches!(self.steps[index - 1], TraceStep::Comm { .. }) {
                let kind = if matches!(raw, TraceStep::Comm { .. }) { "communication" } else { "reconfiguration" };
                return Err(ReplayError::Alternation { index, kind }.into());
            }
            let step = match raw {
                TraceStep::Reconf { add, remove } => {
                    let conv = |pairs: &[[NodeId; 2]]| {
                        pairs
                            .iter()
                            .map(|&[u, v]| Edge::new(u, v).ok_or(TraceError::SelfLoop { index, node: u }))
                            .collect::<Result<Vec<_>, _>>()
                    };
                    Step::reconf(conv(add)?, conv(remove)?)
                }
                TraceStep::Comm { from, msg, next } => {
                    let message = proto.message_by_name(msg).ok_or_else(|| TraceError::UnknownMessage {
                        index,
                        name: msg.clone(),
                    })?;
                    let moves = match next {
                        Some(map) => map
                            .iter()
                            .map(|(&v, name)| {
                                proto
                                    .state_by_name(name)
                                    .map(|s| (v, s))
                                    .ok_or_else(|| TraceError::UnknownState(name.clone()))
                            })
                            .collect::<Result<BTreeMap<_, _>, _>>()?,
                        None => unique_outcome(proto, &current, *from, message, index)?,
                    };
                    Step::Communication {
                        broadcaster: *from,
                        message,
                        moves,
                    }
                }
            };
            current = apply_step(proto, &current, &step).map_err(|reason| ReplayError::DisabledStep { index, reason })?;
            steps.push(step);
        }
        Ok(Execution::new(proto, initial, steps)?)
    }
}

fn unique_outcome(
    proto: &BroadcastProtocol,
    g: &Configuration,
    from: NodeId,
    message: crate::model::protocol::MessageId,
    index: usize,
) -> Result<BTreeMap<NodeId, StateId>, TraceError> {
    if from as usize >= g.num_nodes() {
        return Err(ReplayError::DisabledStep {
            index,
            reason: format!("broadcaster {from} is not a node"),
        }
        .into());
    }
    let mut moves = BTreeMap::new();
    let mut count = 1usize;
    let own = proto.broadcast_targets(g.label(from), message);
    count *= own.len();
    if let Some(&t) = own.first() {
        moves.insert(from, t);
    }
    for v in g.neighbors(from) {
        let options = proto.receive_targets(g.label(v), message);
        count = count.saturating_mul(options.len());
        if let Some(&t) = options.first() {
            moves.insert(v, t);
        }
    }
    match count {
        0 => Err(ReplayError::DisabledStep {
            index,
            reason: format!(
                "node {from} cannot broadcast {} to its neighbours",
                proto.message_name(message)
            ),
        }
        .into()),
        1 => Ok(moves),
        count => Err(TraceError::Ambiguous { index, count }),
    }
}
