//! Acceptance gate: one line per criterion, with its measured runtime against
//! a pinned limit. Run with `--nocapture` to see the table.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;

use common::{nontrivial, random_protocol, rng};
use rbnet::dsl::parse_protocol;
use rbnet::model::execution::{Execution, Step};
use rbnet::model::policy::{BoundingFunction, ConstraintPolicy, Regime};
use rbnet::model::protocol::BroadcastProtocol;
use rbnet::model::validate::{atomic_word, phase_decomposition, validate_execution};
use rbnet::reductions::petri::{control_places, explore, firing_to_execution, place_count, Reachability, DEFAULT_MARKING_BUDGET};
use rbnet::reductions::{compile_to_petri, encode_minsky, parse_machine};
use rbnet::saturation::decide_synchronization_unconstrained;
use rbnet::semantics::{search_synchronizing_execution, InitialEdges, SearchOptions, SearchResult, Verdict};
use rbnet::trace::TraceFile;
use rbnet::transforms::*;

/// Minimum agreement of saturation with the bounded oracle (criterion 4).
const AGREEMENT: f64 = 0.95;
/// Largest node count tried when resolving a disagreement by raising `n`.
const RAISE_UP_TO: usize = 12;
/// Token cap for the marking search (criterion 7).
const PETRI_CAP: u32 = 6;

struct Outcome {
    id: u8,
    pass: bool,
    detail: String,
    elapsed: Duration,
    limit: Duration,
}

fn criterion(id: u8, limit_secs: u64, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (pass, detail) = f();
    let elapsed = t.elapsed();
    let limit = Duration::from_secs(limit_secs);
    Outcome {
        id,
        pass: pass && elapsed < limit,
        detail,
        elapsed,
        limit,
    }
}

fn fig1() -> BroadcastProtocol {
    parse_protocol(include_str!("../assets/fig1.rbn")).unwrap()
}

fn search(p: &BroadcastProtocol, n: usize, policy: &ConstraintPolicy) -> SearchResult {
    search_synchronizing_execution(p, n, policy, &SearchOptions::default()).unwrap()
}

/// Smallest `n` in `range` with a witness, `Ok(None)` if all are exhausted,
/// `Err(())` if some budget ran out first.
fn first_witness(p: &BroadcastProtocol, range: std::ops::RangeInclusive<usize>, policy: &ConstraintPolicy) -> Result<Option<(usize, Execution)>, ()> {
    for n in range {
        let r = search(p, n, policy);
        match r.verdict {
            Verdict::FoundWitness(e) => return Ok(Some((n, e))),
            Verdict::BudgetExceeded => return Err(()),
            Verdict::ExhaustedNoWitness => {}
        }
    }
    Ok(None)
}

fn passes(e: &Execution, r: Regime) -> bool {
    validate_execution(e, &ConstraintPolicy::new(r)).passed
}

fn c1() -> (bool, String) {
    let p = fig1();
    let yes = decide_synchronization_unconstrained(&p).is_yes();
    let found: Vec<bool> = (1..=3).map(|n| search(&p, n, &ConstraintPolicy::unconstrained()).is_found()).collect();
    (yes && found == [false, false, true], format!("saturation {}, witness for n=1,2,3: {found:?}", if yes { "YES" } else { "NO" }))
}

fn c2() -> (bool, String) {
    let p = fig1();
    let verdicts: Vec<&str> = (1..=4).map(|n| search(&p, n, &ConstraintPolicy::k_constrained(1)).verdict_name()).collect();
    let ok = verdicts.iter().all(|v| *v == "exhausted_no_witness");
    (ok, format!("k=1, all initial graphs, n=1..4: {verdicts:?}"))
}

fn c3() -> (bool, String) {
    let p = fig1();
    let policy = ConstraintPolicy::k_constrained(2);
    let r = search(&p, 3, &policy);
    let Some(w) = r.witness() else { return (false, r.verdict_name().to_string()) };
    // replay from JSON the way an external checker would
    let back = TraceFile::parse(&TraceFile::from_execution(&p, w, None).to_json()).unwrap().to_execution(&p).unwrap();
    let ok = w.num_communications() == 4 && validate_execution(&back, &policy).passed && back.synchronizes(&p) && back.is_initial(&p);
    (ok, format!("n=3, k=2: {} communications, {} steps, validates: {ok}", w.num_communications(), w.len()))
}

/// Random protocol for the saturation comparison: `|Q| <= 6`, `|Σ| <= 3`,
/// half of them completed with a sink state.
fn saturation_instance(seed: u64) -> BroadcastProtocol {
    nontrivial(&mut rng(seed), |r| {
        let sink = r.gen_bool(0.5);
        let states = r.gen_range(2..=if sink { 5 } else { 6 });
        let msgs = r.gen_range(1..=3);
        let density = r.gen_range(0.25..0.6);
        let p = random_protocol(r, states, msgs, density);
        if sink {
            p.complete_with_sink("err", &Default::default()).unwrap()
        } else {
            p
        }
    })
}

fn c4() -> (bool, String) {
    let unconstrained = ConstraintPolicy::unconstrained();
    let (mut conclusive, mut agree, mut violations, mut resolved, mut unresolved) = (0, 0, 0, 0, 0);
    const PROTOCOLS: u64 = 500;
    let mut first_n = [0usize; 6];
    for seed in 0..PROTOCOLS {
        let p = saturation_instance(seed);
        assert!(p.num_states() <= 6 && p.num_messages() <= 3);
        let yes = decide_synchronization_unconstrained(&p).is_yes();
        let Ok(found) = first_witness(&p, 1..=5, &unconstrained) else { continue };
        conclusive += 1;
        if let Some((n, _)) = &found {
            first_n[*n] += 1;
        }
        match (yes, found) {
            (false, Some((n, _))) => {
                violations += 1;
                println!("  c4 seed {seed}: witness on {n} nodes but saturation says NO");
            }
            (true, None) => match first_witness(&p, 6..=RAISE_UP_TO, &unconstrained) {
                Ok(Some((n, _))) => {
                    resolved += 1;
                    println!("  c4 seed {seed}: saturation YES, first witness at n={n}");
                }
                _ => {
                    unresolved += 1;
                    println!("  c4 seed {seed}: saturation YES, no witness up to n={RAISE_UP_TO}");
                }
            },
            _ => agree += 1,
        }
    }
    let rate = agree as f64 / conclusive.max(1) as f64;
    let ok = conclusive > 0 && violations == 0 && rate >= AGREEMENT && unresolved == 0;
    (
        ok,
        format!(
            "{conclusive}/{PROTOCOLS} conclusive, agreement {:.1}% (>= {:.0}%), soundness violations {violations}, disagreements resolved by raising n {resolved}, unresolved {unresolved}; smallest witness n=1..5: {:?}",
            100.0 * rate,
            100.0 * AGREEMENT,
            &first_n[1..]
        ),
    )
}

/// Synchronizing traces: the hand-written one plus search witnesses on
/// sink-completed random protocols under a rotation of regimes.
fn trace_corpus(size: usize) -> Vec<(BroadcastProtocol, Execution)> {
    let p = fig1();
    let fig2 = TraceFile::parse(include_str!("../assets/fig2.trace.json")).unwrap().to_execution(&p).unwrap();
    let mut corpus = vec![(p, fig2)];
    let regimes = [Regime::KConstrained(1), Regime::KConstrained(2), Regime::KBalanced(1), Regime::Unconstrained];
    let mut seed = 0u64;
    while corpus.len() < size {
        let mut r = rng(10_000 + seed);
        let states = r.gen_range(3..=5);
        let p = random_protocol(&mut r, states, 2, 0.45).complete_with_sink("err", &Default::default()).unwrap();
        let policy = ConstraintPolicy::new(regimes[seed as usize % regimes.len()]);
        seed += 1;
        if let Ok(Some((_, w))) = first_witness(&p, 2..=4, &policy) {
            let w = w.trimmed_to_communications();
            if w.num_communications() > 0 {
                corpus.push((p, w));
            }
        }
    }
    corpus
}

/// Replays, keeps synchrony and initial-ness, and scales the endpoints.
fn faithful(p: &BroadcastProtocol, e: &Execution, out: &Execution) -> bool {
    let copies = out.num_nodes() / e.num_nodes();
    out.num_nodes() == copies * e.num_nodes()
        && out.initial() == &e.initial().power(copies)
        && out.last().label_counts() == e.last().power(copies).label_counts()
        && out.synchronizes(p) == e.synchronizes(p)
        && out.is_initial(p) == e.is_initial(p)
}

fn c5() -> (bool, String) {
    const CORPUS: usize = 50;
    let corpus = trace_corpus(CORPUS);
    let names = ["id", "f", "1loc", "strong", "lift-k", "balanced"];
    let mut applied = [0usize; 6];
    let mut failed = [0usize; 6];
    for (i, (p, e)) in corpus.iter().enumerate() {
        let k = e.max_reconf_size().max(1) as u32;
        let word = atomic_word(e);
        let mut runs: Vec<(usize, Result<Execution, TransformError>, Regime)> = vec![
            (0, to_id_constrained(p, e), Regime::FConstrained(BoundingFunction::Identity)),
            (1, to_f_constrained(p, e, BoundingFunction::FloorSqrt), Regime::FConstrained(BoundingFunction::FloorSqrt)),
            (2, to_one_locally_constrained(p, e), Regime::KLocallyConstrained(1)),
            (3, weak_to_strong(p, e, k), Regime::StronglyKConstrained(k)),
        ];
        if passes(e, Regime::KConstrained(1)) {
            runs.push((4, lift_one_to_k(p, e, 2), Regime::StronglyKConstrained(2)));
        }
        if passes(e, Regime::KBalanced(1)) {
            let kappa = phase_decomposition(&word, 1).kappa;
            runs.push((5, balanced_to_constrained_k1(p, e, (kappa * kappa + kappa).max(1)), Regime::KConstrained(1)));
        }
        for (t, out, regime) in runs {
            applied[t] += 1;
            let ok = match &out {
                Ok(out) => passes(out, regime) && faithful(p, e, out) && out.synchronizes(p),
                Err(_) => false,
            };
            if !ok {
                failed[t] += 1;
                println!("  c5 trace {i}: {} failed ({:?})", names[t], out.err());
            }
        }
    }
    let total_failed: usize = failed.iter().sum();
    let counts: Vec<String> = names.iter().zip(applied).zip(failed).map(|((n, a), f)| format!("{n} {}/{a}", a - f)).collect();
    (
        corpus.len() == CORPUS && total_failed == 0 && applied.iter().all(|&a| a > 0),
        format!("{} traces; valid/applied per transform: {}", corpus.len(), counts.join(", ")),
    )
}

fn c6() -> (bool, String) {
    const PROTOCOLS: u64 = 100;
    let (mut agree, mut both, mut inconclusive, mut violations, mut resolved, mut unresolved) = (0, 0, 0, 0, 0, 0);
    for seed in 0..PROTOCOLS {
        let mut r = rng(20_000 + seed);
        let k = 1 + (seed % 2) as u32;
        let p = nontrivial(&mut r, |r| {
            let states = r.gen_range(3..=4);
            random_protocol(r, states, 2, 0.45).complete_with_sink("err", &Default::default()).unwrap()
        });
        assert!(p.num_states() <= 5);
        let constrained = ConstraintPolicy::k_constrained(k);
        let balanced = ConstraintPolicy::new(Regime::KBalanced(k));
        let (Ok(c), Ok(b)) = (first_witness(&p, 1..=4, &constrained), first_witness(&p, 1..=4, &balanced)) else {
            inconclusive += 1;
            continue;
        };
        match (c, b) {
            (Some(_), None) => {
                violations += 1;
                println!("  c6 seed {seed} k={k}: constrained witness but no balanced one");
            }
            (None, Some((n, w))) => {
                let fixed = if k == 1 {
                    let kappa = phase_decomposition(&atomic_word(&w), 1).kappa;
                    balanced_to_constrained_k1(&p, &w, (kappa * kappa + kappa).max(1))
                        .is_ok_and(|out| passes(&out, Regime::KConstrained(1)) && out.synchronizes(&p) && out.is_initial(&p))
                } else {
                    matches!(first_witness(&p, 5..=RAISE_UP_TO, &constrained), Ok(Some(_)))
                };
                if fixed {
                    resolved += 1;
                    println!("  c6 seed {seed} k={k}: balanced witness on {n} nodes, constrained one found beyond n=4");
                } else {
                    unresolved += 1;
                    println!("  c6 seed {seed} k={k}: balanced witness on {n} nodes, disagreement unresolved");
                }
            }
            (Some(_), Some(_)) => {
                agree += 1;
                both += 1;
            }
            (None, None) => agree += 1,
        }
    }
    (
        violations == 0 && unresolved == 0,
        format!("{PROTOCOLS} protocols: {agree} agree ({both} with witnesses), {resolved} resolved, {unresolved} unresolved, {violations} violations, {inconclusive} inconclusive")
    )
}

fn c7() -> (bool, String) {
    const PROTOCOLS: u64 = 25;
    let (mut reached, mut unreached, mut budget, mut bad) = (0, 0, 0, 0);
    for seed in 0..PROTOCOLS {
        let mut r = rng(30_000 + seed);
        let k = 1 + (seed % 2) as usize;
        let p = nontrivial(&mut r, |r| {
            let states = r.gen_range(2..=3);
            random_protocol(r, states, 2, 0.5).complete_with_sink("err", &Default::default()).unwrap()
        });
        assert!(p.num_states() <= 4);
        let net = compile_to_petri(&p, k);
        let policy = ConstraintPolicy::k_constrained(k as u32).with_degree_bound(1);
        let layout = net.places.len() == place_count(p.num_states(), k);
        let report = explore(&net, PETRI_CAP, DEFAULT_MARKING_BUDGET, &control_places(&net));
        let engine = first_witness(&p, 1..=PETRI_CAP as usize - 1, &policy);
        let ok = layout
            && report.invariant_violations == 0
            && match (&report.outcome, &engine) {
                (Reachability::Reached(seq), _) => {
                    reached += 1;
                    firing_to_execution(&p, &net, seq).is_ok_and(|e| {
                        validate_execution(&e, &policy).passed
                            && e.is_initial(&p)
                            && e.synchronizes(&p)
                            && search(&p, e.num_nodes(), &policy).is_found()
                    })
                }
                (Reachability::NotReachedWithinCap, Ok(None)) => {
                    unreached += 1;
                    true
                }
                (Reachability::NotReachedWithinCap, _) => false,
                (Reachability::BudgetExceeded(_), _) => {
                    budget += 1;
                    true
                }
            };
        if !ok {
            bad += 1;
            println!("  c7 seed {seed} k={k}: net {:?} against engine {:?}", report.outcome, engine.map(|w| w.map(|(n, _)| n)));
        }
    }
    (
        bad == 0 && budget == 0,
        format!("{PROTOCOLS} nets at total cap {PETRI_CAP}: {reached} reached with validated certificates, {unreached} unreached matching the engine on <= {} nodes, {budget} over budget, {bad} mismatches", PETRI_CAP - 1)
    )
}

fn comm_messages(p: &BroadcastProtocol, steps: &[Step]) -> Vec<String> {
    steps
        .iter()
        .filter_map(|s| match s {
            Step::Communication { message, .. } => Some(p.message_name(*message).to_string()),
            _ => None,
        })
        .collect()
}

fn c8() -> (bool, String) {
    let machine = parse_machine(include_str!("../assets/incmachine.mm")).unwrap();
    let p = encode_minsky(&machine).unwrap().protocol;
    let policy = ConstraintPolicy::k_constrained(1).with_path_bound(2);
    let opts = SearchOptions::default().with_initial_edges(InitialEdges::EmptyOnly);
    let r = search_synchronizing_execution(&p, 6, &policy, &opts).unwrap();
    let Some(w) = r.witness() else { return (false, format!("n=6: {}", r.verdict_name())) };
    let expected = ["i-init", "aux1", "i-ask_1", "i-ack_1", "i-ok_1", "aux2", "aux3", "aux3", "i-exit"];
    let window = w.steps().windows(18).position(|win| comm_messages(&p, win) == expected);
    let ok = validate_execution(w, &policy).passed && w.synchronizes(&p) && window.is_some();
    (
        ok,
        format!("n=6: {} steps, messages {}, 18-step window at {window:?}", w.len(), comm_messages(&p, w.steps()).join(" ")),
    )
}

#[test]
fn acceptance() {
    let mut results = vec![
        criterion(1, 60, c1),
        criterion(2, 120, c2),
        criterion(3, 60, c3),
        criterion(4, 900, c4),
        criterion(5, 300, c5),
        criterion(6, 1800, c6),
        criterion(7, 1200, c7),
        criterion(8, 600, c8),
    ];
    let composite = [2, 6, 8].iter().all(|id| results.iter().any(|o| o.id == *id && o.pass));
    results.push(Outcome {
        id: 9,
        pass: composite,
        detail: "criteria 2, 6 and 8 together".to_string(),
        elapsed: Duration::ZERO,
        limit: Duration::ZERO,
    });
    for o in &results {
        println!(
            "criterion {}: {} {} [{:.2?} / {:?}]",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            o.elapsed,
            o.limit
        );
    }
    let failed: Vec<u8> = results.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
