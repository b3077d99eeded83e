//! Encodes a one-instruction counter machine and searches for a halting
//! witness on six nodes with 1-constrained reconfiguration and paths of at
//! most two edges, starting from edgeless configurations.

use std::time::Instant;

use rbnet::reductions::{encode_minsky, parse_machine};
use rbnet::semantics::{search_synchronizing_execution, InitialEdges, SearchOptions};
use rbnet::ConstraintPolicy;

fn main() {
    let machine = parse_machine(include_str!("../assets/incmachine.mm")).expect("bundled machine parses");
    let enc = encode_minsky(&machine).expect("machine encodes");
    let p = &enc.protocol;
    println!("{} states, {} messages", p.num_states(), p.num_messages());
    let policy = ConstraintPolicy::k_constrained(1).with_path_bound(2);
    let opts = SearchOptions::default().with_initial_edges(InitialEdges::EmptyOnly);
    for n in 1..=6 {
        let t = Instant::now();
        let r = search_synchronizing_execution(p, n, &policy, &opts).expect("valid search input");
        println!("n={n} {:<22} states={:<9} {:.2?}", r.verdict_name(), r.stats.states, t.elapsed());
        if let Some(w) = r.witness() {
            for s in w.steps().iter().filter(|s| s.is_communication()) {
                if let rbnet::model::execution::Step::Communication { message, .. } = s {
                    print!("{} ", p.message_name(*message));
                }
            }
            println!("\n{} steps", w.len());
        }
    }
}
