//! Broadcast protocols: finite automata whose transitions broadcast or
//! receive messages.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a control state inside a [`BroadcastProtocol`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateId(pub u32);

/// Index of a message inside a [`BroadcastProtocol`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl MessageId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    Broadcast(MessageId),
    Receive(MessageId),
}

impl Action {
    pub fn message(self) -> MessageId {
        match self {
            Action::Broadcast(m) | Action::Receive(m) => m,
        }
    }

    pub fn is_broadcast(self) -> bool {
        matches!(self, Action::Broadcast(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub source: StateId,
    pub action: Action,
    pub target: StateId,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("protocol has no states")]
    NoStates,
    #[error("protocol has no messages")]
    NoMessages,
    #[error("duplicate state name '{0}'")]
    DuplicateState(String),
    #[error("duplicate message name '{0}'")]
    DuplicateMessage(String),
    #[error("unknown state '{0}'")]
    UnknownState(String),
    #[error("unknown message '{0}'")]
    UnknownMessage(String),
    #[error("state index {0} out of range")]
    StateOutOfRange(u32),
    #[error("message index {0} out of range")]
    MessageOutOfRange(u32),
}

/// A broadcast protocol with an optional synchronization target.
///
/// Transitions are kept sorted and duplicate-free, and per-state indices are
/// precomputed so that successor generation does not scan the whole relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BroadcastProtocol {
    state_names: Vec<String>,
    message_names: Vec<String>,
    initial: BTreeSet<StateId>,
    target: Option<BTreeSet<StateId>>,
    transitions: Vec<Transition>,
    // (state, message) -> targets
    broadcasts: Vec<Vec<Vec<StateId>>>,
    receives: Vec<Vec<Vec<StateId>>>,
}

impl BroadcastProtocol {
    pub fn new(
        state_names: Vec<String>,
        message_names: Vec<String>,
        initial: BTreeSet<StateId>,
        target: Option<BTreeSet<StateId>>,
        transitions: impl IntoIterator<Item = Transition>,
    ) -> Result<Self, ProtocolError> {
        if state_names.is_empty() {
            return Err(ProtocolError::NoStates);
        }
        if message_names.is_empty() {
            return Err(ProtocolError::NoMessages);
        }
        let mut seen = BTreeSet::new();
        for s in &state_names {
            if !seen.insert(s.as_str()) {
                return Err(ProtocolError::DuplicateState(s.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for m in &message_names {
            if !seen.insert(m.as_str()) {
                return Err(ProtocolError::DuplicateMessage(m.clone()));
            }
        }
        let ns = state_names.len() as u32;
        let nm = message_names.len() as u32;
        let check_state = |s: StateId| {
            if s.0 < ns {
                Ok(())
            } else {
                Err(ProtocolError::StateOutOfRange(s.0))
            }
        };
        for &s in initial.iter().chain(target.iter().flatten()) {
            check_state(s)?;
        }
        let transitions: BTreeSet<Transition> = transitions.into_iter().collect();
        let mut broadcasts = vec![vec![Vec::new(); nm as usize]; ns as usize];
        let mut receives = vec![vec![Vec::new(); nm as usize]; ns as usize];
        for t in &transitions {
            check_state(t.source)?;
            check_state(t.target)?;
            let m = t.action.message();
            if m.0 >= nm {
                return Err(ProtocolError::MessageOutOfRange(m.0));
            }
            let slot = match t.action {
                Action::Broadcast(_) => &mut broadcasts[t.source.index()][m.index()],
                Action::Receive(_) => &mut receives[t.source.index()][m.index()],
            };
            slot.push(t.target);
        }
        Ok(Self {
            state_names,
            message_names,
            initial,
            target,
            transitions: transitions.into_iter().collect(),
            broadcasts,
            receives,
        })
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn num_messages(&self) -> usize {
        self.message_names.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.state_names.len() as u32).map(StateId)
    }

    pub fn messages(&self) -> impl Iterator<Item = MessageId> + '_ {
        (0..self.message_names.len() as u32).map(MessageId)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.state_names[s.index()]
    }

    pub fn message_name(&self, m: MessageId) -> &str {
        &self.message_names[m.index()]
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn message_names(&self) -> &[String] {
        &self.message_names
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.state_names
            .iter()
            .position(|s| s == name)
            .map(|i| StateId(i as u32))
    }

    pub fn message_by_name(&self, name: &str) -> Option<MessageId> {
        self.message_names
            .iter()
            .position(|s| s == name)
            .map(|i| MessageId(i as u32))
    }

    pub fn initial_states(&self) -> &BTreeSet<StateId> {
        &self.initial
    }

    pub fn is_initial(&self, s: StateId) -> bool {
        self.initial.contains(&s)
    }

    pub fn target_set(&self) -> Option<&BTreeSet<StateId>> {
        self.target.as_ref()
    }

    pub fn is_target(&self, s: StateId) -> bool {
        self.target.as_ref().is_some_and(|t| t.contains(&s))
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Targets of `(s, !!m, _)` transitions.
    pub fn broadcast_targets(&self, s: StateId, m: MessageId) -> &[StateId] {
        &self.broadcasts[s.index()][m.index()]
    }

    /// Targets of `(s, ??m, _)` transitions.
    pub fn receive_targets(&self, s: StateId, m: MessageId) -> &[StateId] {
        &self.receives[s.index()][m.index()]
    }

    pub fn has_transition(&self, t: &Transition) -> bool {
        self.transitions.binary_search(t).is_ok()
    }

    /// Same protocol with a different target set.
    pub fn with_target(&self, target: Option<BTreeSet<StateId>>) -> Result<Self, ProtocolError> {
        Self::new(
            self.state_names.clone(),
            self.message_names.clone(),
            self.initial.clone(),
            target,
            self.transitions.iter().copied(),
        )
    }

    /// Every transition `(q, a, q')` replaced by `(q', a, q)`.
    pub fn reversed(&self) -> Self {
        Self::new(
            self.state_names.clone(),
            self.message_names.clone(),
            self.initial.clone(),
            self.target.clone(),
            self.transitions.iter().map(|t| Transition {
                source: t.target,
                action: t.action,
                target: t.source,
            }),
        )
        .expect("reversal preserves well-formedness")
    }

    /// Adds a sink state that every unspecified reception leads to.
    ///
    /// The sink receives every message with a self-loop so it never blocks a
    /// broadcasting neighbour. States listed in `absorbing` get self-loops on
    /// every message they do not already receive instead of sink edges.
    pub fn complete_with_sink(
        &self,
        sink_name: &str,
        absorbing: &BTreeSet<StateId>,
    ) -> Result<Self, ProtocolError> {
        if self.state_by_name(sink_name).is_some() {
            return Err(ProtocolError::DuplicateState(sink_name.to_string()));
        }
        let sink = StateId(self.state_names.len() as u32);
        let mut names = self.state_names.clone();
        names.push(sink_name.to_string());
        let mut transitions: Vec<Transition> = self.transitions.clone();
        for s in self.states() {
            for m in self.messages() {
                if self.receive_targets(s, m).is_empty() {
                    let target = if absorbing.contains(&s) { s } else { sink };
                    transitions.push(Transition {
                        source: s,
                        action: Action::Receive(m),
                        target,
                    });
                }
            }
        }
        for m in self.messages() {
            transitions.push(Transition {
                source: sink,
                action: Action::Receive(m),
                target: sink,
            });
        }
        Self::new(
            names,
            self.message_names.clone(),
            self.initial.clone(),
            self.target.clone(),
            transitions,
        )
    }

    /// States from which some target state is reachable in the transition
    /// graph, ignoring message synchronization.
    pub fn graph_coreachable_to_target(&self) -> BTreeSet<StateId> {
        let Some(target) = &self.target else {
            return BTreeSet::new();
        };
        let mut preds: BTreeMap<StateId, Vec<StateId>> = BTreeMap::new();
        for t in &self.transitions {
            preds.entry(t.target).or_default().push(t.source);
        }
        let mut seen: BTreeSet<StateId> = target.clone();
        let mut stack: Vec<StateId> = target.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for &p in preds.get(&s).into_iter().flatten() {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }

    pub fn display_transition(&self, t: &Transition) -> String {
        let (sigil, m) = match t.action {
            Action::Broadcast(m) => ("!", m),
            Action::Receive(m) => ("?", m),
        };
        format!(
            "{} {}{} {}",
            self.state_name(t.source),
            sigil,
            self.message_name(m),
            self.state_name(t.target)
        )
    }
}

impl fmt::Display for BroadcastProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::dsl::print_protocol(self))
    }
}

/// Incremental construction by name, used by parsers and generators.
#[derive(Clone, Debug, Default)]
pub struct ProtocolBuilder {
    states: Vec<String>,
    state_index: BTreeMap<String, StateId>,
    messages: Vec<String>,
    message_index: BTreeMap<String, MessageId>,
    initial: BTreeSet<StateId>,
    target: Option<BTreeSet<StateId>>,
    transitions: Vec<Transition>,
}

impl ProtocolBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `name`, declaring it if needed.
    pub fn state(&mut self, name: &str) -> StateId {
        if let Some(&id) = self.state_index.get(name) {
            return id;
        }
        let id = StateId(self.states.len() as u32);
        self.states.push(name.to_string());
        self.state_index.insert(name.to_string(), id);
        id
    }

    pub fn message(&mut self, name: &str) -> MessageId {
        if let Some(&id) = self.message_index.get(name) {
            return id;
        }
        let id = MessageId(self.messages.len() as u32);
        self.messages.push(name.to_string());
        self.message_index.insert(name.to_string(), id);
        id
    }

    pub fn lookup_state(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    pub fn lookup_message(&self, name: &str) -> Option<MessageId> {
        self.message_index.get(name).copied()
    }

    pub fn initial(&mut self, name: &str) -> &mut Self {
        let s = self.state(name);
        self.initial.insert(s);
        self
    }

    pub fn target(&mut self, name: &str) -> &mut Self {
        let s = self.state(name);
        self.target.get_or_insert_with(BTreeSet::new).insert(s);
        self
    }

    /// Marks the target set as declared even if it stays empty.
    pub fn declare_target(&mut self) -> &mut Self {
        self.target.get_or_insert_with(BTreeSet::new);
        self
    }

    pub fn broadcast(&mut self, from: &str, msg: &str, to: &str) -> &mut Self {
        let (s, m, t) = (self.state(from), self.message(msg), self.state(to));
        self.transitions.push(Transition {
            source: s,
            action: Action::Broadcast(m),
            target: t,
        });
        self
    }

    pub fn receive(&mut self, from: &str, msg: &str, to: &str) -> &mut Self {
        let (s, m, t) = (self.state(from), self.message(msg), self.state(to));
        self.transitions.push(Transition {
            source: s,
            action: Action::Receive(m),
            target: t,
        });
        self
    }

    pub fn push_transition(&mut self, t: Transition) -> &mut Self {
        self.transitions.push(t);
        self
    }

    pub fn build(&self) -> Result<BroadcastProtocol, ProtocolError> {
        BroadcastProtocol::new(
            self.states.clone(),
            self.messages.clone(),
            self.initial.clone(),
            self.target.clone(),
            self.transitions.iter().copied(),
        )
    }
}
