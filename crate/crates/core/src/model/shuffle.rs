//! Interleaving two executions over the juxtaposition of their initial
//! configurations.

use thiserror::Error;

use super::config::NodeId;
use super::execution::{Execution, ReplayError, Step};
use super::protocol::BroadcastProtocol;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShuffleMove {
    /// Next step of the left execution.
    Left,
    /// Next step of the right execution.
    Right,
    /// Next step of both, which must be reconfigurations; they become one step.
    Merged,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShuffleSchedule {
    pub moves: Vec<ShuffleMove>,
    /// Insert trivial reconfigurations between adjacent communications and
    /// merge adjacent reconfigurations instead of failing.
    pub repair: bool,
}

impl ShuffleSchedule {
    pub fn new(moves: Vec<ShuffleMove>) -> Self {
        Self { moves, repair: false }
    }

    pub fn repaired(mut self) -> Self {
        self.repair = true;
        self
    }

    /// All of the left execution, then all of the right one.
    pub fn sequential(left: &Execution, right: &Execution) -> Self {
        let mut moves = vec![ShuffleMove::Left; left.len()];
        moves.extend(std::iter::repeat_n(ShuffleMove::Right, right.len()));
        Self { moves, repair: true }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShuffleError {
    #[error("invalid schedule at move {index}: {reason}")]
    InvalidSchedule { index: usize, reason: String },
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

fn merge(a: &Step, b: &Step) -> Option<Step> {
    match (a, b) {
        (
            Step::Reconfiguration { added, removed },
            Step::Reconfiguration {
                added: added2,
                removed: removed2,
            },
        ) => Some(Step::reconf(
            added.iter().chain(added2).copied(),
            removed.iter().chain(removed2).copied(),
        )),
        _ => None,
    }
}

/// One member of the shuffle of `left` and `right`; nodes of `right` are
/// shifted past those of `left`.
pub fn shuffle(
    proto: &BroadcastProtocol,
    left: &Execution,
    right: &Execution,
    schedule: &ShuffleSchedule,
) -> Result<Execution, ShuffleError> {
    let offset = left.num_nodes() as NodeId;
    let (mut i, mut j) = (0, 0);
    let mut out: Vec<Step> = Vec::new();
    for (index, mv) in schedule.moves.iter().enumerate() {
        let invalid = |reason: &str| ShuffleError::InvalidSchedule {
            index,
            reason: reason.to_string(),
        };
        let step = match mv {
            ShuffleMove::Left => {
                let s = left.steps().get(i).ok_or_else(|| invalid("left execution exhausted"))?;
                i += 1;
                s.clone()
            }
            ShuffleMove::Right => {
                let s = right.steps().get(j).ok_or_else(|| invalid("right execution exhausted"))?;
                j += 1;
                s.shifted(offset)
            }
            ShuffleMove::Merged => {
                let a = left.steps().get(i).ok_or_else(|| invalid("left execution exhausted"))?;
                let b = right.steps().get(j).ok_or_else(|| invalid("right execution exhausted"))?;
                i += 1;
                j += 1;
                merge(a, &b.shifted(offset)).ok_or_else(|| invalid("merged steps must both be reconfigurations"))?
            }
        };
        match out.last() {
            Some(prev) if prev.kind() == step.kind() => {
                if !schedule.repair {
                    return Err(invalid("breaks alternation"));
                }
                if step.is_communication() {
                    out.push(Step::trivial());
                    out.push(step);
                } else {
                    let merged = merge(prev, &step).expect("both reconfigurations");
                    *out.last_mut().unwrap() = merged;
                }
            }
            _ => out.push(step),
        }
    }
    if i != left.len() || j != right.len() {
        return Err(ShuffleError::InvalidSchedule {
            index: schedule.moves.len(),
            reason: "schedule ends before both executions are consumed".into(),
        });
    }
    Ok(Execution::new(proto, left.initial().juxtapose(right.initial()), out)?)
}
