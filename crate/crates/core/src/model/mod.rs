//! Protocols, configurations, executions and the constraints on them.

pub mod config;
pub mod distance;
pub mod execution;
pub mod policy;
pub mod protocol;
pub mod shuffle;
pub mod topology;
pub mod validate;

pub use config::{ConfigError, Configuration, Edge, NodeId};
pub use distance::{distance, distance_strict, node_distance, DistanceError};
pub use execution::{apply_step, replay, Execution, ReplayError, Step, StepKind};
pub use policy::{BoundingFunction, ConstraintPolicy, PolicyParseError, Regime, TopologyBounds};
pub use protocol::{Action, BroadcastProtocol, MessageId, ProtocolBuilder, ProtocolError, StateId, Transition};
pub use shuffle::{shuffle, ShuffleError, ShuffleMove, ShuffleSchedule};
pub use topology::{check_topology, TopologyReport};
pub use validate::{
    potential_sequence, validate_execution, ConstraintCheck, Phase, PhaseDecomposition, PhaseSign, PotentialError,
    PotentialProfile, ValidationReport,
};
