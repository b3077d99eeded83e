//! Successor enumeration, the counter abstraction and bounded search.

pub mod abstraction;
mod balanced;
pub mod canon;
pub mod packed;
pub mod prune;
pub mod search;
pub(crate) mod space;
pub mod successors;

pub use abstraction::{abstract_step, AbstractConfiguration, AbstractMove};
pub use canon::canonical_form;
pub use prune::DeadStateOracle;
pub use search::{
    search_synchronizing_execution, InitialEdges, SearchBudget, SearchError, SearchOptions, SearchResult, SearchStats,
    Verdict,
};
pub use successors::{enabled_communications, successor_reconfigurations, ReconfSuccessors, SuccessorError, ToggleLimit};
