//! Steps and executions, with replay that checks enabledness and strict
//! alternation of communication and reconfiguration steps.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::config::{ConfigError, Configuration, Edge, NodeId};
use super::protocol::{Action, BroadcastProtocol, MessageId, StateId, Transition};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    /// Edge changes; nodes and labels stay fixed. Both sets empty is the
    /// trivial reconfiguration.
    Reconfiguration {
        added: BTreeSet<Edge>,
        removed: BTreeSet<Edge>,
    },
    /// `broadcaster` sends `message`; `moves` gives the new state of the
    /// broadcaster and of each of its neighbours (and of no other node).
    Communication {
        broadcaster: NodeId,
        message: MessageId,
        moves: BTreeMap<NodeId, StateId>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Communication,
    Reconfiguration,
}

impl Step {
    pub fn trivial() -> Self {
        Step::Reconfiguration {
            added: BTreeSet::new(),
            removed: BTreeSet::new(),
        }
    }

    pub fn reconf(added: impl IntoIterator<Item = Edge>, removed: impl IntoIterator<Item = Edge>) -> Self {
        Step::Reconfiguration {
            added: added.into_iter().collect(),
            removed: removed.into_iter().collect(),
        }
    }

    /// The reconfiguration turning edge set `from` into `to`.
    pub fn between(from: &BTreeSet<Edge>, to: &BTreeSet<Edge>) -> Self {
        Step::Reconfiguration {
            added: to.difference(from).copied().collect(),
            removed: from.difference(to).copied().collect(),
        }
    }

    pub fn kind(&self) -> StepKind {
        match self {
            Step::Reconfiguration { .. } => StepKind::Reconfiguration,
            Step::Communication { .. } => StepKind::Communication,
        }
    }

    pub fn is_communication(&self) -> bool {
        matches!(self, Step::Communication { .. })
    }

    /// Number of toggled edges; zero for communications.
    pub fn reconf_size(&self) -> usize {
        match self {
            Step::Reconfiguration { added, removed } => added.len() + removed.len(),
            Step::Communication { .. } => 0,
        }
    }

    /// Node indices shifted by `offset`.
    pub fn shifted(&self, offset: NodeId) -> Step {
        match self {
            Step::Reconfiguration { added, removed } => Step::Reconfiguration {
                added: added.iter().map(|e| e.shifted(offset)).collect(),
                removed: removed.iter().map(|e| e.shifted(offset)).collect(),
            },
            Step::Communication {
                broadcaster,
                message,
                moves,
            } => Step::Communication {
                broadcaster: broadcaster + offset,
                message: *message,
                moves: moves.iter().map(|(&v, &s)| (v + offset, s)).collect(),
            },
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("step {index} is disabled: {reason}")]
    DisabledStep { index: usize, reason: String },
    #[error("step {index} breaks alternation: two consecutive {kind} steps")]
    Alternation { index: usize, kind: &'static str },
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
}

/// Applies one step to `g`, checking that it is enabled.
pub fn apply_step(proto: &BroadcastProtocol, g: &Configuration, step: &Step) -> Result<Configuration, String> {
    let n = g.num_nodes() as NodeId;
    match step {
        Step::Reconfiguration { added, removed } => {
            let mut next = g.clone();
            for e in added {
                if e.high() >= n {
                    return Err(format!("edge {{{},{}}} names an unknown node", e.low(), e.high()));
                }
                if removed.contains(e) {
                    return Err(format!("edge {{{},{}}} both added and removed", e.low(), e.high()));
                }
                if g.has_edge(*e) {
                    return Err(format!("added edge {{{},{}}} already present", e.low(), e.high()));
                }
                next.edges_mut().insert(*e);
            }
            for e in removed {
                if !g.has_edge(*e) {
                    return Err(format!("removed edge {{{},{}}} not present", e.low(), e.high()));
                }
                next.edges_mut().remove(e);
            }
            Ok(next)
        }
        Step::Communication {
            broadcaster,
            message,
            moves,
        } => {
            let b = *broadcaster;
            if b >= n {
                return Err(format!("broadcaster {b} is not a node"));
            }
            if message.index() >= proto.num_messages() {
                return Err(format!("message index {} unknown", message.0));
            }
            let neighbours: BTreeSet<NodeId> = g.neighbors(b).collect();
            let expected: BTreeSet<NodeId> = neighbours.iter().copied().chain([b]).collect();
            let given: BTreeSet<NodeId> = moves.keys().copied().collect();
            if expected != given {
                return Err(format!(
                    "moves must cover exactly the broadcaster and its neighbours {:?}, got {:?}",
                    expected, given
                ));
            }
            let mut next = g.clone();
            for (&v, &to) in moves {
                let action = if v == b {
                    Action::Broadcast(*message)
                } else {
                    Action::Receive(*message)
                };
                let t = Transition {
                    source: g.label(v),
                    action,
                    target: to,
                };
                if !proto.has_transition(&t) {
                    return Err(format!("node {v}: no transition {}", proto.display_transition(&t)));
                }
                next.set_label(v, to);
            }
            Ok(next)
        }
    }
}

/// A replayed execution: the initial configuration, its steps, and every
/// intermediate configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Execution {
    steps: Vec<Step>,
    configs: Vec<Configuration>,
}

impl Execution {
    pub fn new(proto: &BroadcastProtocol, initial: Configuration, steps: Vec<Step>) -> Result<Self, ReplayError> {
        let configs = replay(proto, &initial, &steps)?;
        Ok(Self { steps, configs })
    }

    pub fn empty(initial: Configuration) -> Self {
        Self {
            steps: Vec::new(),
            configs: vec![initial],
        }
    }

    pub fn initial(&self) -> &Configuration {
        &self.configs[0]
    }

    pub fn last(&self) -> &Configuration {
        self.configs.last().expect("at least the initial configuration")
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.initial().num_nodes()
    }

    /// Number of communication steps.
    pub fn num_communications(&self) -> usize {
        self.steps.iter().filter(|s| s.is_communication()).count()
    }

    /// Total number of edge reconfigurations.
    pub fn total_reconfigured(&self) -> usize {
        self.steps.iter().map(Step::reconf_size).sum()
    }

    pub fn max_reconf_size(&self) -> usize {
        self.steps.iter().map(Step::reconf_size).max().unwrap_or(0)
    }

    /// Starts and ends with a communication step.
    pub fn is_comm_bounded(&self) -> bool {
        matches!(
            (self.steps.first(), self.steps.last()),
            (Some(a), Some(b)) if a.is_communication() && b.is_communication()
        )
    }

    pub fn is_initial(&self, proto: &BroadcastProtocol) -> bool {
        self.initial().is_initial(proto)
    }

    pub fn synchronizes(&self, proto: &BroadcastProtocol) -> bool {
        self.last().is_synchronized(proto)
    }

    /// Drops a leading reconfiguration (the reconfigured graph is still an
    /// initial configuration) and a trailing one (labels are unchanged).
    pub fn trimmed_to_communications(&self) -> Execution {
        let mut lo = 0;
        let mut hi = self.steps.len();
        if hi > 0 && !self.steps[0].is_communication() {
            lo = 1;
        }
        if hi > lo && !self.steps[hi - 1].is_communication() {
            hi -= 1;
        }
        Execution {
            steps: self.steps[lo..hi].to_vec(),
            configs: self.configs[lo..=hi].to_vec(),
        }
    }
}

/// Replays `steps` from `initial`, returning every configuration visited.
pub fn replay(proto: &BroadcastProtocol, initial: &Configuration, steps: &[Step]) -> Result<Vec<Configuration>, ReplayError> {
    initial.check_against(proto)?;
    let mut configs = Vec::with_capacity(steps.len() + 1);
    configs.push(initial.clone());
    for (index, step) in steps.iter().enumerate() {
        if index > 0 && steps[index - 1].kind() == step.kind() {
            let kind = match step.kind() {
                StepKind::Communication => "communication",
                StepKind::Reconfiguration => "reconfiguration",
            };
            return Err(ReplayError::Alternation { index, kind });
        }
        let next = apply_step(proto, &configs[index], step).map_err(|reason| ReplayError::DisabledStep { index, reason })?;
        configs.push(next);
    }
    Ok(configs)
}
