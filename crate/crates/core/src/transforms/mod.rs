//! Constructive rewritings of executions between reconfiguration regimes.
//! Every output is rebuilt through [`Execution::new`], so it replays.

mod balanced;
mod id;
mod local;
mod paired;

pub use balanced::balanced_to_constrained_k1;
pub use id::{copies_for, to_f_constrained, to_id_constrained};
pub use local::to_one_locally_constrained;
pub use paired::{lift_copies, lift_one_to_k, strong_copies, weak_to_strong};

use thiserror::Error;

use crate::model::config::{Configuration, NodeId};
use crate::model::execution::{Execution, ReplayError, Step};
use crate::model::policy::BoundingFunction;
use crate::model::protocol::BroadcastProtocol;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("bounding function {0} does not diverge")]
    NotDiverging(BoundingFunction),
    #[error("{copies} copies given, at least {needed} needed")]
    InsufficientCopies { copies: usize, needed: usize },
    #[error("input is not 1-balanced: {0}")]
    NotBalanced(String),
    #[error("input is not {0}")]
    NotConstrained(String),
    #[error("input starts with a non-trivial reconfiguration")]
    LeadingReconfiguration,
    #[error("phase {phase} has {kappa} repeated reconfigurations, more than half its length {len}")]
    PhaseBound { phase: usize, kappa: usize, len: usize },
    #[error("no schedule found within {0} search nodes")]
    ScheduleNotFound(usize),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// Steps of `e` without trailing reconfigurations, which leave labels unchanged.
pub(crate) fn without_trailing_reconf(e: &Execution) -> &[Step] {
    let s = e.steps();
    let end = s.iter().rposition(Step::is_communication).map_or(0, |i| i + 1);
    &s[..end]
}

/// Accumulates steps while keeping strict alternation: adjacent
/// communications get a trivial reconfiguration in between.
pub(crate) struct Builder {
    steps: Vec<Step>,
}

impl Builder {
    pub fn new() -> Self {
        Self { steps: Vec::new() }
    }

    pub fn comm(&mut self, step: Step) {
        if self.steps.last().is_some_and(Step::is_communication) {
            self.steps.push(Step::trivial());
        }
        self.steps.push(step);
    }

    /// Panics on two reconfigurations in a row; callers schedule around it.
    pub fn reconf(&mut self, step: Step) {
        assert!(
            !self.steps.last().is_some_and(|s| !s.is_communication()),
            "consecutive reconfigurations"
        );
        self.steps.push(step);
    }

    pub fn finish(self, proto: &BroadcastProtocol, initial: Configuration) -> Result<Execution, TransformError> {
        Ok(Execution::new(proto, initial, self.steps)?)
    }
}

pub(crate) fn offset(copy: usize, n0: usize) -> NodeId {
    (copy * n0) as NodeId
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::dsl::parse_protocol;
    use crate::model::execution::Execution;
    use crate::model::protocol::BroadcastProtocol;
    use crate::trace::TraceFile;

    pub fn fig1() -> BroadcastProtocol {
        parse_protocol(include_str!("../../assets/fig1.rbn")).unwrap()
    }

    pub fn fig2(p: &BroadcastProtocol) -> Execution {
        TraceFile::parse(include_str!("../../assets/fig2.trace.json"))
            .unwrap()
            .to_execution(p)
            .unwrap()
    }

    /// Two nodes; the edge must go while `b` is sent and come back for `c`.
    pub fn relay() -> BroadcastProtocol {
        parse_protocol(
            "states q0 q1 q2 q4 q5 q6\ninit q0\ntarget q4 q6\nmsg a b c\n\
             q0 !a q1\nq0 ?a q5\nq1 !b q2\nq2 ?c q4\nq5 !c q6\nsink err\n",
        )
        .unwrap()
    }

    pub fn relay_run(p: &BroadcastProtocol) -> Execution {
        let trace = r#"{ "initial": { "nodes": 2, "labels": ["q0", "q0"], "edges": [[0, 1]] },
          "steps": [
            { "comm": { "from": 0, "msg": "a" } },
            { "reconf": { "remove": [[0, 1]] } },
            { "comm": { "from": 0, "msg": "b" } },
            { "reconf": { "add": [[0, 1]] } },
            { "comm": { "from": 1, "msg": "c" } } ] }"#;
        TraceFile::parse(trace).unwrap().to_execution(p).unwrap()
    }
}
