//! Property tests for the algebra normal form, lattice geometry, kernel
//! cardinality and the snapshot format.

use num_complex::Complex64;
use proptest::prelude::*;

use tapestry_core::algebra::{
    canonical_cmp, parse_expr, simplify, PrimitiveSpec, PrimitiveTable, ProcessExpr, ProductMode,
    SumMode, ONE,
};
use tapestry_core::io::{parse_snapshot, resolve_snapshot, write_snapshot};
use tapestry_core::kernel::InterpolationKernel;
use tapestry_core::lattice::{causal_distance, LatticeParams, ManifoldPoint, Site};
use tapestry_core::tapestry::{properties, Informon, InformonId, TapestryBuilder};

fn primitive_table() -> PrimitiveTable {
    ["P1", "P2", "P3"]
        .iter()
        .map(|n| (n.to_string(), PrimitiveSpec::free(*n)))
        .collect()
}

fn arb_weight() -> impl Strategy<Value = Complex64> {
    // Small rationals render and reparse exactly.
    (-4i32..=4, -4i32..=4).prop_map(|(re, im)| Complex64::new(re as f64 / 4.0, im as f64 / 4.0))
}

fn arb_expr() -> impl Strategy<Value = ProcessExpr> {
    let table = primitive_table();
    let leaf = prop_oneof![
        Just(ProcessExpr::Zero),
        prop::sample::select(vec!["P1", "P2", "P3"])
            .prop_map(move |n| ProcessExpr::Primitive(table[n].clone())),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            (
                prop_oneof![Just(SumMode::Exclusive), Just(SumMode::Free)],
                prop::collection::vec((arb_weight(), inner.clone()), 1..4)
            )
                .prop_map(|(mode, terms)| ProcessExpr::Sum(mode, terms)),
            (
                prop_oneof![Just(ProductMode::Exclusive), Just(ProductMode::Free)],
                prop::collection::vec(inner.clone(), 1..4)
            )
                .prop_map(|(mode, factors)| ProcessExpr::Product(mode, factors)),
            prop::collection::vec(inner, 1..3).prop_map(ProcessExpr::Concat),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn simplify_is_idempotent(e in arb_expr()) {
        let once = simplify(&e);
        let twice = simplify(&once);
        prop_assert!(canonical_cmp(&once, &twice) == std::cmp::Ordering::Equal);
    }

    #[test]
    fn abelian_normal_forms_ignore_operand_order(
        mode in prop_oneof![Just(SumMode::Exclusive), Just(SumMode::Free)],
        mut terms in prop::collection::vec((arb_weight(), arb_expr()), 2..5),
        shift in 1usize..4,
    ) {
        let a = simplify(&ProcessExpr::Sum(mode, terms.clone()));
        let k = shift % terms.len();
        terms.rotate_left(k);
        let b = simplify(&ProcessExpr::Sum(mode, terms));
        prop_assert!(canonical_cmp(&a, &b) == std::cmp::Ordering::Equal);
    }

    #[test]
    fn normal_forms_round_trip_through_text(e in arb_expr()) {
        let table = primitive_table();
        let nf = simplify(&e);
        let rendered = nf.to_string();
        let reparsed = simplify(&parse_expr(&rendered, &table).unwrap());
        prop_assert!(
            canonical_cmp(&nf, &reparsed) == std::cmp::Ordering::Equal,
            "rendered {rendered:?}"
        );
    }

    #[test]
    fn causal_distance_sign_classifies_cones(
        dtick in 0i64..20,
        dsite in -20i64..20,
        scale in 1u32..20,
    ) {
        let l_p = scale as f64 * 0.05;
        let params = LatticeParams::new(1, l_p, l_p, 1.0).unwrap();
        let a = ManifoldPoint::new(0, Site::new(&[0]));
        let b = ManifoldPoint::new(dtick, Site::new(&[dsite]));
        let rho = causal_distance(&a, &b, &params).unwrap();
        // With c_hat = 1 and tau = l_p the cone is the integer diagonal.
        if dsite.abs() < dtick {
            prop_assert!(rho > 0.0);
        } else if dsite.abs() > dtick {
            prop_assert!(rho < 0.0);
        } else {
            prop_assert!(rho.abs() < 1e-9 * l_p * l_p);
        }
    }

    #[test]
    fn kernel_is_cardinal_on_random_offsets(
        offsets in prop::collection::vec((-50i64..50, -50i64..50, -50i64..50), 1..20),
        spacing in 1u32..30,
    ) {
        let l_p = spacing as f64 * 0.017;
        for d in 1usize..=3 {
            let kernel = InterpolationKernel::new(d, l_p);
            for &(a, b, c) in &offsets {
                let site = [a, b, c];
                let z: Vec<f64> = site[..d].iter().map(|&k| k as f64 * l_p).collect();
                let v = kernel.value(&z).unwrap();
                if site[..d].iter().all(|&k| k == 0) {
                    prop_assert_eq!(v, 1.0);
                } else {
                    prop_assert!(v.abs() < 1e-12, "offset {:?}: {}", &site[..d], v);
                }
            }
        }
    }

    #[test]
    fn snapshots_round_trip(
        sites in prop::collection::btree_set(-30i64..30, 1..12),
        seed_re in -2.0f64..2.0,
    ) {
        let mut builder = TapestryBuilder::new(0, "prop");
        for (i, &s) in sites.iter().enumerate() {
            let informon = Informon::new(
                InformonId(i as u64),
                ManifoldPoint::new(0, Site::new(&[s])),
                Complex64::new(seed_re * (i as f64 + 0.3), 1.0 / (i as f64 + 1.5)),
                properties([("species", "x")]),
            );
            builder.push(informon);
        }
        let t = builder.seal().unwrap();
        let text = write_snapshot(&t, 1, 2);
        let (meta, records) = parse_snapshot(&text).unwrap();
        let resolved = resolve_snapshot(&meta, &records, None).unwrap();
        prop_assert_eq!(write_snapshot(&resolved, 1, 2), text);
    }

    #[test]
    fn scale_wrappers_flatten_to_single_weight(
        w1 in arb_weight(),
        w2 in arb_weight(),
    ) {
        use tapestry_core::algebra::scale;
        let p = ProcessExpr::Primitive(PrimitiveSpec::free("P1"));
        let nested = simplify(&scale(w1, &scale(w2, &p)));
        let flat = simplify(&scale(w1 * w2, &p));
        prop_assert!(canonical_cmp(&nested, &flat) == std::cmp::Ordering::Equal);
    }
}

#[test]
fn simplify_drops_zero_summands_but_keeps_zero_factors() {
    let p = ProcessExpr::Primitive(PrimitiveSpec::free("P1"));
    let sum = ProcessExpr::Sum(
        SumMode::Exclusive,
        vec![(ONE, ProcessExpr::Zero), (ONE, p.clone()), (ONE, ProcessExpr::Zero)],
    );
    assert!(canonical_cmp(&simplify(&sum), &p) == std::cmp::Ordering::Equal);
    let product = ProcessExpr::Product(ProductMode::Free, vec![ProcessExpr::Zero, p]);
    match simplify(&product) {
        ProcessExpr::Product(_, factors) => assert_eq!(factors.len(), 2),
        other => panic!("zero factors must not be annihilated, got {other}"),
    }
}
