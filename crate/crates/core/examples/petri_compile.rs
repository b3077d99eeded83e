//! Compiles a relay protocol to a Petri net, searches the capped marking
//! graph, and turns the firing sequence back into a checked execution.

use rbnet::dsl::parse_protocol;
use rbnet::model::validate::validate_execution;
use rbnet::reductions::petri::{control_places, dead_places, explore_pruned, firing_to_execution, DEFAULT_MARKING_BUDGET};
use rbnet::reductions::{compile_to_petri, Reachability};
use rbnet::ConstraintPolicy;

fn main() {
    let p = parse_protocol("states q0 q1 q2 q4 q5 q6\ninit q0\ntarget q4 q6\nmsg a b c\nq0 !a q1\nq0 ?a q5\nq1 !b q2\nq2 ?c q4\nq5 !c q6\nsink err\n")
        .expect("relay parses");
    for k in 1..=2 {
        let net = compile_to_petri(&p, k);
        let dead = dead_places(&p, &net);
        let report = explore_pruned(&net, 4, DEFAULT_MARKING_BUDGET, &control_places(&net), &dead);
        println!(
            "k={k}: {} places ({} pruned), {} transitions, {} markings explored",
            net.places.len(),
            dead.len(),
            net.transitions.len(),
            report.explored
        );
        match report.outcome {
            Reachability::Reached(seq) => {
                let names: Vec<&str> = seq.iter().map(|&t| net.transitions[t].name.as_str()).collect();
                println!("  firing: {}", names.join(" "));
                let e = firing_to_execution(&p, &net, &seq).expect("firing sequences are certificates");
                let policy = ConstraintPolicy::k_constrained(k as u32).with_degree_bound(1);
                println!("  execution on {} nodes, {} steps, validates: {}", e.num_nodes(), e.len(), validate_execution(&e, &policy).passed);
            }
            other => println!("  {other:?}"),
        }
    }
}
