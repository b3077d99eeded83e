//! Every execution transformation applied to the star trace or to a relay
//! witness, each result checked against the regime it promises.

use rbnet::dsl::parse_protocol;
use rbnet::model::execution::Execution;
use rbnet::model::policy::{BoundingFunction, Regime};
use rbnet::model::validate::validate_execution;
use rbnet::semantics::{search_synchronizing_execution, SearchOptions};
use rbnet::trace::TraceFile;
use rbnet::transforms::*;
use rbnet::ConstraintPolicy;

fn report(name: &str, out: Result<Execution, TransformError>, regime: Regime) {
    match out {
        Ok(e) => {
            let ok = validate_execution(&e, &ConstraintPolicy::new(regime)).passed;
            println!("{name:<10} {:>3} nodes {:>4} steps  {regime}: {}", e.num_nodes(), e.len(), if ok { "pass" } else { "FAIL" });
        }
        Err(err) => println!("{name:<10} rejected: {err}"),
    }
}

fn main() {
    let p = parse_protocol(include_str!("../assets/fig1.rbn")).expect("bundled protocol parses");
    let e = TraceFile::parse(include_str!("../assets/fig2.trace.json")).and_then(|t| t.to_execution(&p)).expect("trace replays");
    report("id", to_id_constrained(&p, &e), Regime::FConstrained(BoundingFunction::Identity));
    report("sqrt", to_f_constrained(&p, &e, BoundingFunction::FloorSqrt), Regime::FConstrained(BoundingFunction::FloorSqrt));
    report("1loc", to_one_locally_constrained(&p, &e), Regime::KLocallyConstrained(1));
    report("strong", weak_to_strong(&p, &e, 2), Regime::StronglyKConstrained(2));
    report("lift", lift_one_to_k(&p, &e, 2), Regime::StronglyKConstrained(2));

    // a relay needs one edge change between its broadcasts, so it is 1-constrained
    let relay = parse_protocol("states q0 q1 q2 q4 q5 q6\ninit q0\ntarget q4 q6\nmsg a b c\nq0 !a q1\nq0 ?a q5\nq1 !b q2\nq2 ?c q4\nq5 !c q6\nsink err\n")
        .expect("relay parses");
    let r = search_synchronizing_execution(&relay, 2, &ConstraintPolicy::k_constrained(1), &SearchOptions::default()).expect("valid search");
    let w = r.witness().expect("relay synchronizes on two nodes").trimmed_to_communications();
    report("lift(w)", lift_one_to_k(&relay, &w, 3), Regime::StronglyKConstrained(3));
    report("balanced", balanced_to_constrained_k1(&relay, &w, 1), Regime::KConstrained(1));
    println!("lift copies for k=1..4: {:?}", (1..=4).map(lift_copies).collect::<Vec<_>>());
}
