mod common;

use proptest::prelude::*;

use common::{random_balanced_walk, random_initial, random_protocol, random_walk, rng};
use rbnet::dsl::{parse_protocol, print_protocol};
use rbnet::model::execution::Execution;
use rbnet::model::policy::{BoundingFunction, ConstraintPolicy, Regime};
use rbnet::model::protocol::BroadcastProtocol;
use rbnet::model::validate::validate_execution;
use rbnet::reductions::petri::{control_places, explore, firing_to_execution, place_count, Reachability};
use rbnet::reductions::{compile_to_petri, export_net, import_net, NetFormat};
use rbnet::saturation::decide_synchronization_unconstrained;
use rbnet::semantics::{search_synchronizing_execution, SearchOptions};
use rbnet::trace::TraceFile;
use rbnet::transforms::*;

fn passes(e: &Execution, r: Regime) -> bool {
    validate_execution(e, &ConstraintPolicy::new(r)).passed
}

/// Output replays, starts from the `copies`-fold initial configuration and
/// ends in the `copies`-fold final label multiset.
fn scaled(p: &BroadcastProtocol, e: &Execution, out: &Execution, copies: usize) {
    assert_eq!(out.initial(), &e.initial().power(copies));
    assert_eq!(out.last().label_counts(), e.last().power(copies).label_counts());
    assert_eq!(out.synchronizes(p), e.synchronizes(p));
}

/// Random execution of a sink-completed random protocol, so that receptions
/// never block a broadcast.
fn walk_with(seed: u64, balanced: bool) -> (BroadcastProtocol, Execution) {
    let mut r = rng(seed);
    let states = 3 + (seed % 3) as usize;
    let p = random_protocol(&mut r, states, 2, 0.5).complete_with_sink("err", &Default::default()).unwrap();
    let g0 = random_initial(&mut r, &p, 2 + (seed % 3) as usize, 0.4);
    let e = if balanced { random_balanced_walk(&mut r, &p, g0, 6, 1) } else { random_walk(&mut r, &p, g0, 4, 2) };
    (p, e)
}

fn walk(seed: u64) -> (BroadcastProtocol, Execution) {
    walk_with(seed, false)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_json_round_trip(seed in any::<u64>()) {
        let (p, e) = walk(seed);
        let text = TraceFile::from_execution(&p, &e, None).to_json();
        prop_assert_eq!(TraceFile::parse(&text).unwrap().to_execution(&p).unwrap(), e);
    }

    #[test]
    fn dsl_round_trip(seed in any::<u64>()) {
        let p = random_protocol(&mut rng(seed), 2 + (seed % 5) as usize, 1 + (seed % 3) as usize, 0.4);
        prop_assert_eq!(parse_protocol(&print_protocol(&p)).unwrap(), p);
    }

    #[test]
    fn identity_and_f_transforms(seed in any::<u64>()) {
        let (p, e) = walk(seed);
        let id = to_id_constrained(&p, &e).unwrap();
        prop_assert!(passes(&id, Regime::FConstrained(BoundingFunction::Identity)));
        scaled(&p, &e, &id, 1);
        for f in [BoundingFunction::FloorSqrt, BoundingFunction::FloorLog2] {
            let copies = copies_for(f, e.num_nodes()).unwrap();
            let out = to_f_constrained(&p, &e, f).unwrap();
            prop_assert!(passes(&out, Regime::FConstrained(f)));
            prop_assert_eq!(out.num_nodes(), copies * e.num_nodes());
            scaled(&p, &e, &out, copies);
        }
    }

    #[test]
    fn local_transform(seed in any::<u64>()) {
        let (p, e) = walk(seed);
        match to_one_locally_constrained(&p, &e) {
            Ok(out) => {
                prop_assert!(passes(&out, Regime::KLocallyConstrained(1)));
                let copies = out.num_nodes() / e.num_nodes();
                prop_assert_eq!(copies, e.max_reconf_size().max(1));
                scaled(&p, &e, &out, copies);
            }
            Err(TransformError::LeadingReconfiguration) => prop_assert!(!e.steps()[0].is_communication()),
            Err(other) => prop_assert!(false, "{other}"),
        }
    }

    #[test]
    fn strong_and_lift_transforms(seed in any::<u64>(), k in 1u32..=3) {
        let (p, e) = walk(seed);
        match weak_to_strong(&p, &e, k) {
            Ok(out) => {
                prop_assert!(passes(&out, Regime::StronglyKConstrained(k)));
                scaled(&p, &e, &out, out.num_nodes() / e.num_nodes());
            }
            Err(_) => prop_assert!(!passes(&e, Regime::KConstrained(k))),
        }
        match lift_one_to_k(&p, &e, k) {
            Ok(out) => {
                prop_assert!(passes(&out, Regime::StronglyKConstrained(k)));
                prop_assert_eq!(out.num_nodes(), lift_copies(k) * e.num_nodes());
                scaled(&p, &e, &out, lift_copies(k));
            }
            Err(_) => prop_assert!(!passes(&e, Regime::KConstrained(1))),
        }
    }

    #[test]
    fn balanced_transform(seed in any::<u64>()) {
        let (p, e) = walk_with(seed, true);
        if !passes(&e, Regime::KBalanced(1)) {
            return Ok(());
        }
        let word = rbnet::model::validate::atomic_word(&e);
        let kappa = rbnet::model::validate::phase_decomposition(&word, 1).kappa;
        let n = (kappa * kappa + kappa).max(1);
        match balanced_to_constrained_k1(&p, &e, n) {
            Ok(out) => {
                prop_assert!(passes(&out, Regime::KConstrained(1)));
                scaled(&p, &e, &out, n);
            }
            // the phase bound is an input condition, not a copy count
            Err(TransformError::PhaseBound { .. }) => {}
            Err(other) => prop_assert!(false, "{other}"),
        }
    }

    #[test]
    fn saturation_is_sound(seed in any::<u64>()) {
        let p = random_protocol(&mut rng(seed), 2 + (seed % 4) as usize, 2, 0.4);
        let yes = decide_synchronization_unconstrained(&p).is_yes();
        for n in 1..=3 {
            let r = search_synchronizing_execution(&p, n, &ConstraintPolicy::unconstrained(), &SearchOptions::default()).unwrap();
            if r.is_found() {
                prop_assert!(yes, "witness on {} nodes but saturation says no", n);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn petri_nets(seed in any::<u64>(), k in 1usize..=2) {
        let p = random_protocol(&mut rng(seed), 2 + (seed % 2) as usize, 2, 0.4);
        let net = compile_to_petri(&p, k);
        prop_assert_eq!(net.places.len(), place_count(p.num_states(), k));
        for f in [NetFormat::Pnml, NetFormat::DotNet] {
            prop_assert_eq!(&import_net(&export_net(&net, f), f).unwrap(), &net);
        }
        let report = explore(&net, 4, 1_000_000, &control_places(&net));
        prop_assert_eq!(report.invariant_violations, 0);
        if let Reachability::Reached(seq) = report.outcome {
            prop_assert_eq!(net.replay(&seq).unwrap(), net.final_marking.clone());
            let e = firing_to_execution(&p, &net, &seq).unwrap();
            let policy = ConstraintPolicy::k_constrained(k as u32).with_degree_bound(1);
            prop_assert!(validate_execution(&e, &policy).passed);
            prop_assert!(e.is_initial(&p) && e.synchronizes(&p));
        }
    }
}
