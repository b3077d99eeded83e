//! Replays the bundled star trace and checks it against several regimes.

use rbnet::dsl::parse_protocol;
use rbnet::model::validate::validate_execution;
use rbnet::trace::TraceFile;
use rbnet::ConstraintPolicy;

fn main() {
    let p = parse_protocol(include_str!("../assets/fig1.rbn")).expect("bundled protocol parses");
    let trace = TraceFile::parse(include_str!("../assets/fig2.trace.json")).expect("bundled trace parses");
    let e = trace.to_execution(&p).expect("trace replays");
    println!("{} nodes, {} steps, synchronizes: {}", e.num_nodes(), e.len(), e.synchronizes(&p));
    for spec in ["unconstrained", "k=1", "k=2", "balanced=1", "balanced=2", "local=1", "strong=2"] {
        let policy = ConstraintPolicy::new(spec.parse().expect("known regime"));
        let report = validate_execution(&e, &policy);
        let why = report.first_failure().map(|c| format!(" ({} at {:?})", c.constraint, c.first_violation)).unwrap_or_default();
        println!("{spec:<14} {}{why}", if report.passed { "pass" } else { "fail" });
    }
    println!("{}", e.last().to_dot(&p));
}
