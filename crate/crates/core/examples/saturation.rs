//! Unconstrained decision by saturation, round by round.

use rbnet::dsl::parse_protocol;
use rbnet::saturation::decide_synchronization_unconstrained;

fn main() {
    let p = parse_protocol(include_str!("../assets/fig1.rbn")).expect("bundled protocol parses");
    let verdict = decide_synchronization_unconstrained(&p);
    let cert = verdict.certificate();
    let names = |set: &std::collections::BTreeSet<_>| set.iter().map(|&s| p.state_name(s)).collect::<Vec<_>>().join(" ");
    for (i, round) in cert.history.iter().enumerate() {
        println!("round {i}: forward {{{}}} backward {{{}}}", names(&round.forward), names(&round.backward));
    }
    println!(
        "{} after {} iterations, final set {{{}}}",
        if verdict.is_yes() { "YES" } else { "NO" },
        cert.iterations,
        names(&cert.final_set)
    );
    // without the last broadcast the first branch never reaches a target
    let cut = parse_protocol(&include_str!("../assets/fig1.rbn").replace("q3 ?d q4\n", "")).expect("still parses");
    println!("without `q3 ?d q4`: {}", if decide_synchronization_unconstrained(&cut).is_yes() { "YES" } else { "NO" });
}
