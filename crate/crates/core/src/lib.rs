//! Verification toolkit for reconfigurable broadcast networks.

pub mod cli;
pub mod dsl;
pub mod model;
pub mod reductions;
pub mod saturation;
pub mod semantics;
pub mod trace;
pub mod transforms;

pub use model::*;
