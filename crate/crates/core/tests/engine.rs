//! Engine behavior: round semantics, determinism, exclusivity, replay.

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tapestry_core::algebra::{
    scale, PrimitiveSpec, ProcessExpr, ProductMode, SumMode, ONE,
};
use tapestry_core::engine::{
    self, enumerate_plays, run_round, sample_plays, GenerationConfig, Regime,
};
use tapestry_core::error::Error;
use tapestry_core::kernel::greens_value;
use tapestry_core::lattice::{Domain, LatticeParams, Site};
use tapestry_core::tapestry::{
    no_properties, properties, verify_antichain, verify_content_causality, CausalTapestry,
};

fn delta_initial() -> CausalTapestry {
    engine::initial_delta(Site::new(&[0]), Complex64::new(1.0, 0.0), no_properties())
}

fn config(extent: usize, l_p: f64, tau: f64, c_hat: f64, regime: Regime) -> GenerationConfig {
    GenerationConfig {
        domain: Domain::new(vec![extent]).unwrap(),
        params: LatticeParams::new(1, l_p, tau, c_hat).unwrap(),
        n_per_round: 1,
        regime,
        seed: 7,
        renormalize: false,
        record_content: true,
        budget_leaves: 0,
            site_strategy: Default::default(),
    }
}

fn prim(name: &str, species: &str) -> ProcessExpr {
    ProcessExpr::Primitive(PrimitiveSpec::free_with(name, properties([("species", species)])))
}

#[test]
fn zero_process_generates_nothing() {
    let cfg = config(5, 0.1, 0.1, 1.0, Regime::Sampled);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (tapestry, play) = run_round(&ProcessExpr::Zero, &delta_initial(), &cfg, &mut rng).unwrap();
    assert!(tapestry.is_empty());
    assert!(play.events.is_empty());
}

#[test]
fn exhaustive_delta_propagation_reproduces_kernel_row() {
    // Prior: single unit informon at the origin. Each new strength must be
    // l_p * K(site * l_p) inside the cone and zero outside.
    let l_p = 0.1;
    let tau = 0.1;
    let c_hat = 30.0; // r_c = 3.0: covers sites within +/-30
    let cfg = config(101, l_p, tau, c_hat, Regime::Exhaustive);
    let expr = ProcessExpr::Primitive(PrimitiveSpec::free("P"));
    let run = engine::run(&expr, &delta_initial(), 1, &cfg).unwrap();
    let t = &run.tapestries[0];
    assert_eq!(t.len(), 101);
    for n in t.informons() {
        let s = n.point.site.coords()[0];
        let expected = if s.abs() <= 30 {
            l_p * greens_value(&[s as f64 * l_p], tau).unwrap()
        } else {
            Complex64::ZERO
        };
        assert!(
            (n.strength - expected).norm() < 1e-12,
            "site {s}: {} vs {expected}",
            n.strength
        );
    }
}

#[test]
fn exhaustive_strengths_are_seed_independent() {
    let expr = ProcessExpr::Primitive(PrimitiveSpec::free("P"));
    let mut runs = Vec::new();
    for seed in [1u64, 999] {
        let mut cfg = config(21, 0.1, 0.1, 5.0, Regime::Exhaustive);
        cfg.seed = seed;
        let out = engine::run(&expr, &delta_initial(), 2, &cfg).unwrap();
        let bits: Vec<(u64, u64)> = out.tapestries[1]
            .informons()
            .iter()
            .map(|n| (n.strength.re.to_bits(), n.strength.im.to_bits()))
            .collect();
        runs.push(bits);
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn fixed_seed_is_bit_reproducible() {
    let expr = prim("P", "a");
    let cfg = config(9, 0.1, 0.1, 3.0, Regime::Sampled);
    let a = engine::run(&expr, &delta_initial(), 3, &cfg).unwrap();
    let b = engine::run(&expr, &delta_initial(), 3, &cfg).unwrap();
    let key = |t: &CausalTapestry| {
        t.informons()
            .iter()
            .map(|n| (n.id, n.point.site, n.strength.re.to_bits(), n.strength.im.to_bits()))
            .collect::<Vec<_>>()
    };
    assert_eq!(key(&a.play.final_tapestry), key(&b.play.final_tapestry));
}

#[test]
fn renormalized_run_keeps_unit_norm_for_ten_ticks() {
    let mut cfg = config(81, 0.1, 0.1, 10.0, Regime::Exhaustive);
    cfg.renormalize = true;
    cfg.record_content = false;
    let expr = ProcessExpr::Primitive(PrimitiveSpec::free("P"));
    let out = engine::run(&expr, &delta_initial(), 10, &cfg).unwrap();
    for (i, t) in out.tapestries.iter().enumerate() {
        let norm = t.norm_sq(&cfg.params);
        assert!((norm - 1.0).abs() < 1e-12, "tick {}: norm {norm}", i + 1);
    }
}

#[test]
fn single_tick_run_equals_run_round() {
    let expr = prim("P", "a");
    let cfg = config(7, 0.1, 0.1, 2.0, Regime::Sampled);
    let run = engine::run(&expr, &delta_initial(), 1, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (t, _) = run_round(&expr, &delta_initial(), &cfg, &mut rng).unwrap();
    assert_eq!(run.tapestries[0].content_key(), t.content_key());
}

#[test]
fn engine_output_passes_causality_checks() {
    let expr = prim("P", "a");
    let cfg = config(15, 0.1, 0.1, 4.0, Regime::Exhaustive);
    let out = engine::run(&expr, &delta_initial(), 3, &cfg).unwrap();
    let mut prior = delta_initial();
    for t in &out.tapestries {
        assert!(verify_antichain(t, &cfg.params));
        assert!(verify_content_causality(t, &prior, &cfg.params).unwrap());
        prior = t.clone();
    }
}

#[test]
fn replay_reconstructs_final_tapestry_exactly() {
    let states = [prim("A", "a"), prim("B", "b")];
    let expr = ProcessExpr::Sum(
        SumMode::Free,
        vec![(Complex64::new(0.5, 0.25), states[0].clone()), (ONE, states[1].clone())],
    );
    // Cone covers the whole 9-site domain so no sampled site is degenerate.
    let mut cfg = config(9, 0.1, 0.1, 5.0, Regime::Sampled);
    cfg.renormalize = true;
    let out = engine::run(&expr, &delta_initial(), 2, &cfg).unwrap();
    let replayed = out.play.replay().unwrap();
    let a: Vec<_> = out.play.final_tapestry.content_key();
    let b: Vec<_> = replayed.content_key();
    assert_eq!(a, b);
}

#[test]
fn scaling_doubles_strengths_against_paired_run() {
    let base = prim("P", "a");
    let doubled = scale(Complex64::new(2.0, 0.0), &base);
    let cfg = config(9, 0.1, 0.1, 3.0, Regime::Sampled);
    let a = engine::run(&base, &delta_initial(), 1, &cfg).unwrap();
    let b = engine::run(&doubled, &delta_initial(), 1, &cfg).unwrap();
    let sa = a.tapestries[0].informons();
    let sb = b.tapestries[0].informons();
    assert_eq!(sa.len(), sb.len());
    for (x, y) in sa.iter().zip(sb) {
        assert_eq!(x.point, y.point, "same seed picks the same sites");
        assert!((y.strength - 2.0 * x.strength).norm() < 1e-15);
    }
}

#[test]
fn zero_weight_differs_from_zero_process() {
    let zeroed = scale(Complex64::ZERO, &prim("P", "a"));
    let cfg = config(5, 0.1, 0.1, 2.0, Regime::Sampled);
    let out = engine::run(&zeroed, &delta_initial(), 1, &cfg).unwrap();
    assert_eq!(out.tapestries[0].len(), 1, "scale(0, P) still generates informons");
    assert_eq!(out.tapestries[0].informons()[0].strength, Complex64::ZERO);
    let zero = engine::run(&ProcessExpr::Zero, &delta_initial(), 1, &cfg).unwrap();
    assert!(zero.tapestries[0].is_empty());
}

#[test]
fn sampled_primitive_on_three_sites_has_three_leaves() {
    let cfg = config(3, 0.1, 0.1, 2.0, Regime::Sampled);
    let tree = enumerate_plays(&prim("P", "a"), &delta_initial(), 1, &cfg).unwrap();
    assert_eq!(tree.leaf_count(), 3);
}

#[test]
fn exhaustive_enumeration_is_a_single_forced_leaf() {
    let cfg = config(5, 0.1, 0.1, 2.0, Regime::Exhaustive);
    let tree = enumerate_plays(&prim("P", "a"), &delta_initial(), 1, &cfg).unwrap();
    assert_eq!(tree.leaf_count(), 1);
}

#[test]
fn two_summand_enumeration_counts_orders_times_sites() {
    // P1 (+) P2, one emission each, 3 sites: 2 interleavings x 3 x 3 sites.
    let expr = ProcessExpr::Sum(SumMode::Exclusive, vec![(ONE, prim("P1", "a")), (ONE, prim("P2", "b"))]);
    let cfg = config(3, 0.1, 0.1, 2.0, Regime::Sampled);
    let tree = enumerate_plays(&expr, &delta_initial(), 1, &cfg).unwrap();
    assert_eq!(tree.leaf_count(), 18);
}

#[test]
fn enumeration_budget_is_enforced_with_the_bound_named() {
    let expr = ProcessExpr::Sum(SumMode::Exclusive, vec![(ONE, prim("P1", "a")), (ONE, prim("P2", "b"))]);
    let mut cfg = config(3, 0.1, 0.1, 2.0, Regime::Sampled);
    cfg.budget_leaves = 4;
    match enumerate_plays(&expr, &delta_initial(), 1, &cfg) {
        Err(Error::Budget { bound, .. }) => assert_eq!(bound, 4),
        other => panic!("expected budget refusal, got {other:?}"),
    }
}

#[test]
fn exclusive_product_never_shares_informons_across_factors() {
    // Same properties force site collisions to be re-drawn, so every play
    // of the 2-factor exclusive product emits two distinct-site informons.
    let expr = ProcessExpr::Product(
        ProductMode::Exclusive,
        vec![prim("P", "x"), prim("P", "x")],
    );
    let cfg = config(3, 0.1, 0.1, 2.0, Regime::Sampled);
    let tree = enumerate_plays(&expr, &delta_initial(), 1, &cfg).unwrap();
    let leaves = tree.maximal_tapestries();
    assert_eq!(leaves.len(), 6, "3 * 2 injective site assignments");
    for t in leaves {
        assert_eq!(t.len(), 2);
        let s0 = t.informons()[0].point.site;
        let s1 = t.informons()[1].point.site;
        assert_ne!(s0, s1);
        let slots: std::collections::BTreeSet<_> = t
            .informons()
            .iter()
            .map(|n| n.generator.as_ref().unwrap().slot.clone())
            .collect();
        assert_eq!(slots.len(), 2, "each factor contributed exactly one informon");
    }
}

#[test]
fn exclusive_sum_attributes_each_informon_to_one_summand() {
    let expr = ProcessExpr::Sum(SumMode::Exclusive, vec![(ONE, prim("P1", "a")), (ONE, prim("P2", "b"))]);
    let cfg = config(3, 0.1, 0.1, 2.0, Regime::Sampled);
    let tree = enumerate_plays(&expr, &delta_initial(), 1, &cfg).unwrap();
    for t in tree.maximal_tapestries() {
        assert_eq!(t.len(), 2);
        for n in t.informons() {
            let tag = n.generator.as_ref().unwrap();
            assert!(tag.primitive == "P1" || tag.primitive == "P2");
        }
    }
}

#[test]
fn free_product_merges_forced_collision_additively() {
    // One-site domain: both factors must land on the same site; the free
    // product merges their strengths.
    let single = prim("P", "x");
    let expr = ProcessExpr::Product(ProductMode::Free, vec![single.clone(), single.clone()]);
    let cfg = config(1, 0.1, 0.1, 2.0, Regime::Sampled);
    let merged = engine::run(&expr, &delta_initial(), 1, &cfg).unwrap();
    let alone = engine::run(&single, &delta_initial(), 1, &cfg).unwrap();
    assert_eq!(merged.tapestries[0].len(), 1);
    let m = merged.tapestries[0].informons()[0].strength;
    let s = alone.tapestries[0].informons()[0].strength;
    assert!((m - 2.0 * s).norm() < 1e-12, "merge {m} vs 2x single {s}");
}

#[test]
fn exclusive_product_on_one_site_is_a_capacity_error() {
    let expr = ProcessExpr::Product(ProductMode::Exclusive, vec![prim("P", "x"), prim("P", "x")]);
    let cfg = config(1, 0.1, 0.1, 2.0, Regime::Sampled);
    match engine::run(&expr, &delta_initial(), 1, &cfg) {
        Err(Error::Capacity(_)) => {}
        other => panic!("expected capacity error, got {other:?}"),
    }
}

#[test]
fn free_sum_of_identical_summands_doubles_exhaustive_strengths() {
    let single = prim("P", "x");
    let expr = ProcessExpr::Sum(SumMode::Free, vec![(ONE, single.clone()), (ONE, single.clone())]);
    let cfg = config(9, 0.1, 0.1, 3.0, Regime::Exhaustive);
    let doubled = engine::run(&expr, &delta_initial(), 1, &cfg).unwrap();
    let alone = engine::run(&single, &delta_initial(), 1, &cfg).unwrap();
    assert_eq!(doubled.tapestries[0].len(), alone.tapestries[0].len());
    for (m, s) in doubled.tapestries[0].informons().iter().zip(alone.tapestries[0].informons()) {
        assert_eq!(m.point, s.point);
        assert!((m.strength - 2.0 * s.strength).norm() < 1e-12);
    }
}

#[test]
fn sampled_plays_are_reproducible_and_seed_sensitive() {
    let expr = prim("P", "a");
    let cfg = config(21, 0.1, 0.1, 3.0, Regime::Sampled);
    let a = sample_plays(&expr, &delta_initial(), 1, &cfg, 8, 42).unwrap();
    let b = sample_plays(&expr, &delta_initial(), 1, &cfg, 8, 42).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.to_log(0), y.to_log(0));
    }
    let c = sample_plays(&expr, &delta_initial(), 1, &cfg, 8, 43).unwrap();
    let sites = |plays: &[tapestry_core::engine::Play]| {
        plays
            .iter()
            .map(|p| p.final_tapestry.informons()[0].point.site)
            .collect::<Vec<_>>()
    };
    assert_ne!(sites(&a), sites(&c), "different seeds should explore different sites");
}

#[test]
fn exhaustive_sampled_plays_agree_across_seeds() {
    let expr = ProcessExpr::Primitive(PrimitiveSpec::free("P"));
    let cfg = config(11, 0.1, 0.1, 3.0, Regime::Exhaustive);
    let a = sample_plays(&expr, &delta_initial(), 1, &cfg, 2, 1).unwrap();
    let b = sample_plays(&expr, &delta_initial(), 1, &cfg, 2, 999).unwrap();
    assert_eq!(a[0].final_tapestry.content_key(), b[1].final_tapestry.content_key());
}

#[test]
fn degenerate_propagation_warns_and_zeroes() {
    // Empty prior: every target has an empty cone.
    let empty = CausalTapestry::empty(0, "empty");
    let cfg = config(5, 0.1, 0.1, 1.0, Regime::Exhaustive);
    let out = engine::run(&ProcessExpr::Primitive(PrimitiveSpec::free("P")), &empty, 1, &cfg).unwrap();
    assert!(out.tapestries[0].informons().iter().all(|n| n.strength == Complex64::ZERO));
    assert!(!out.warnings.is_empty());
}

#[test]
fn concatenation_has_no_generation_semantics() {
    let expr = ProcessExpr::Concat(vec![prim("P", "a"), prim("Q", "b")]);
    let cfg = config(5, 0.1, 0.1, 1.0, Regime::Sampled);
    match engine::run(&expr, &delta_initial(), 1, &cfg) {
        Err(Error::UnsupportedGeneration) => {}
        other => panic!("expected unsupported-generation error, got {other:?}"),
    }
}

#[test]
fn untruncated_norm_leak_shrinks_as_the_domain_grows() {
    // With the cone covering the whole domain, the one-step leak is a pure
    // domain-truncation effect and must shrink as the domain grows.
    // Domain half-widths stay below the chirp-resolution limit pi tau / l_p
    // so the shrinking tolerance measures padding alone.
    let state = tapestry_core::oracle::AnalyticState::new(1.0, vec![0.0], vec![0.5]).unwrap();
    let mut leaks = Vec::new();
    for half_width in [4.5_f64, 5.5, 6.5] {
        let l_p = 0.1;
        let tau = 0.25;
        let half_sites = (half_width / l_p).ceil() as usize;
        let domain = Domain::new(vec![2 * half_sites + 1]).unwrap();
        // Cone radius beyond the domain diameter: nothing is cone-truncated.
        let params = LatticeParams::new(1, l_p, tau, 2.5 * half_width / tau).unwrap();
        let initial = engine::initial_gaussian(&state, &domain, &params, 0).unwrap();
        let cfg = GenerationConfig {
            domain,
            params,
            n_per_round: 1,
            regime: Regime::Exhaustive,
            seed: 0,
            renormalize: false,
            record_content: false,
            budget_leaves: 0,
            site_strategy: Default::default(),
        };
        let expr = ProcessExpr::Primitive(PrimitiveSpec::free("P"));
        let run = engine::run(&expr, &initial, 1, &cfg).unwrap();
        leaks.push((1.0 - run.tapestries[0].norm_sq(&params)).abs());
    }
    assert!(
        leaks[1] < leaks[0] && leaks[2] < leaks[1],
        "leaks must decrease with padding: {leaks:?}"
    );
}

#[test]
fn content_sets_form_a_tick_ordered_dag() {
    let expr = prim("P", "a");
    let cfg = config(15, 0.1, 0.1, 4.0, Regime::Exhaustive);
    let out = engine::run(&expr, &delta_initial(), 3, &cfg).unwrap();
    let mut chain = vec![delta_initial()];
    chain.extend(out.tapestries.iter().cloned());
    for (i, t) in chain.iter().enumerate().skip(1) {
        let prior = &chain[i - 1];
        for n in t.informons() {
            for c in &n.content {
                assert_eq!(c.point.tick, n.point.tick - 1, "edges step back one tick");
                assert!(prior.get(c.id).is_some(), "content resolves in the prior tapestry");
            }
        }
    }
}

#[test]
fn per_primitive_emission_override_wins_over_config_n() {
    use tapestry_core::algebra::KernelKind;
    let spec = PrimitiveSpec::with_emissions(
        "P",
        KernelKind::Free,
        properties([("species", "a")]),
        Some(3),
    );
    let expr = ProcessExpr::Primitive(spec);
    let cfg = config(9, 0.1, 0.1, 5.0, Regime::Sampled); // n_per_round = 1
    let out = engine::run(&expr, &delta_initial(), 1, &cfg).unwrap();
    assert_eq!(out.tapestries[0].len(), 3);
}

#[test]
fn two_dimensional_delta_propagation_matches_kernel_values() {
    let l_p = 0.2;
    let tau = 0.2;
    let cfg = GenerationConfig {
        domain: Domain::new(vec![9, 9]).unwrap(),
        params: LatticeParams::new(2, l_p, tau, 40.0).unwrap(),
        n_per_round: 1,
        regime: Regime::Exhaustive,
        seed: 0,
        renormalize: false,
        record_content: true,
        budget_leaves: 0,
        site_strategy: Default::default(),
    };
    let initial = engine::initial_delta(
        Site::new(&[0, 0]),
        Complex64::new(1.0, 0.0),
        no_properties(),
    );
    let expr = ProcessExpr::Primitive(PrimitiveSpec::free("P"));
    let run = engine::run(&expr, &initial, 1, &cfg).unwrap();
    let t = &run.tapestries[0];
    assert_eq!(t.len(), 81);
    for n in t.informons() {
        let dx: Vec<f64> = n.point.site.coords().iter().map(|&c| c as f64 * l_p).collect();
        let expected = l_p * l_p * greens_value(&dx, tau).unwrap();
        assert!((n.strength - expected).norm() < 1e-12);
    }
    assert!(verify_content_causality(t, &initial, &cfg.params).unwrap());
}

#[test]
fn scale_composition_verified_through_paired_runs() {
    let p = prim("P", "a");
    let w1 = Complex64::new(0.5, 0.75);
    let w2 = Complex64::new(-1.25, 0.2);
    let nested = scale(w1, &scale(w2, &p));
    let flat = scale(w1 * w2, &p);
    let cfg = config(9, 0.1, 0.1, 5.0, Regime::Sampled);
    let a = engine::run(&nested, &delta_initial(), 1, &cfg).unwrap();
    let b = engine::run(&flat, &delta_initial(), 1, &cfg).unwrap();
    for (x, y) in a.tapestries[0].informons().iter().zip(b.tapestries[0].informons()) {
        assert_eq!(x.point, y.point);
        assert!((x.strength - y.strength).norm() < 1e-15);
    }
}

#[test]
fn two_tick_enumeration_chains_site_choices() {
    let cfg = config(2, 0.1, 0.1, 2.0, Regime::Sampled);
    let tree = enumerate_plays(&prim("P", "a"), &delta_initial(), 2, &cfg).unwrap();
    assert_eq!(tree.leaf_count(), 4, "2 site choices per tick");
    for t in tree.maximal_tapestries() {
        assert_eq!(t.tick(), 2);
        assert_eq!(t.len(), 1);
        assert_eq!(t.informons()[0].content.len(), 1, "tick-2 informon cites its tick-1 source");
    }
}

#[test]
fn graded_level_two_field_runs_and_merges() {
    use tapestry_core::algebra::{fock_level, Statistics};
    let states = [prim("A", "a"), prim("B", "b")];
    let field = fock_level(&states, 2, Statistics::Bosonic).unwrap();
    let cfg = config(2, 0.1, 0.1, 2.0, Regime::Sampled);
    let tree = enumerate_plays(&field, &delta_initial(), 1, &cfg).unwrap();
    // Every summand of each factor completes its emission: two interleaved
    // steps of (summand x site) choices per factor.
    assert_eq!(tree.leaf_count(), 64);
    let sizes: std::collections::BTreeSet<usize> =
        tree.maximal_tapestries().iter().map(|t| t.len()).collect();
    assert!(sizes.contains(&4), "fully separated targets stay distinct");
    assert!(
        sizes.iter().any(|&s| s < 4),
        "same species on the same site merges additively across factors"
    );
}

#[test]
fn exclusive_sum_strength_conflicts_force_a_redraw() {
    use tapestry_core::algebra::{KernelKind, PrimitiveSpec};
    use tapestry_core::kernel::parse_kernel_table;
    // Two primitives with the same properties but different kernels emit
    // different strengths, so they may never share a site under (+).
    let table = parse_kernel_table("0 0.5 0.0\n1 0.25 0.0\n-1 0.25 0.0\n").unwrap();
    let free = ProcessExpr::Primitive(PrimitiveSpec::free_with(
        "F",
        properties([("species", "x")]),
    ));
    let tabulated = ProcessExpr::Primitive(PrimitiveSpec::new(
        "T",
        KernelKind::Tabulated(table),
        properties([("species", "x")]),
    ));
    let expr = ProcessExpr::Sum(SumMode::Exclusive, vec![(ONE, free), (ONE, tabulated)]);

    let cfg = config(2, 0.1, 0.1, 2.0, Regime::Sampled);
    let tree = enumerate_plays(&expr, &delta_initial(), 1, &cfg).unwrap();
    for t in tree.maximal_tapestries() {
        assert_eq!(t.len(), 2);
        assert_ne!(
            t.informons()[0].point.site,
            t.informons()[1].point.site,
            "conflicting strengths must not share a site"
        );
    }
    // On a single site there is nowhere left to redraw to.
    let tiny = config(1, 0.1, 0.1, 2.0, Regime::Sampled);
    match engine::run(&expr, &delta_initial(), 1, &tiny) {
        Err(Error::Capacity(_)) => {}
        other => panic!("expected capacity error, got {other:?}"),
    }
}
