//! Encodings between broadcast protocols, counter machines and Petri nets.

pub mod minsky;
pub mod netio;
pub mod petri;

pub use minsky::{encode_minsky, parse_machine, Instruction, MinskyEncoding, MinskyError, MinskyMachine};
pub use netio::{export_net, import_net, NetFormat, NetIoError};
pub use petri::{bounded_marking_reachability, compile_to_petri, NetTransition, PetriNet, Reachability};
