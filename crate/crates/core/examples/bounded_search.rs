//! Bounded search on the three-branch protocol: the minimal node count under
//! unconstrained reconfiguration, and the 1- versus 2-constrained contrast.

use std::time::Instant;

use rbnet::dsl::parse_protocol;
use rbnet::semantics::{search_synchronizing_execution, SearchOptions};
use rbnet::ConstraintPolicy;

fn main() {
    let proto = parse_protocol(include_str!("../assets/fig1.rbn")).expect("bundled protocol parses");
    let opts = SearchOptions::default();
    for (policy, sizes) in [
        (ConstraintPolicy::unconstrained(), 1..=3),
        (ConstraintPolicy::k_constrained(1), 1..=4),
        (ConstraintPolicy::k_constrained(2), 3..=3),
    ] {
        for n in sizes {
            let t = Instant::now();
            let r = search_synchronizing_execution(&proto, n, &policy, &opts).expect("valid search input");
            println!(
                "{:<14} n={n}  {:<22} states={:<8} steps={:<4} {:.2?}",
                policy.to_string(),
                r.verdict_name(),
                r.stats.states,
                r.witness().map_or("-".to_string(), |w| w.len().to_string()),
                t.elapsed()
            );
        }
    }
}
