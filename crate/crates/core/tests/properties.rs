mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn closure_is_idempotent(e in edges(6)) {
        check_idempotent(&e)?;
    }

    #[test]
    fn more_generators_never_lose_pairs(e in edges(5), extra in edges(1).prop_filter("one edge", |v| v.len() == 1)) {
        check_monotone(&e, extra[0])?;
    }

    #[test]
    fn closure_is_a_preorder(e in edges(6)) {
        check_preorder(&e)?;
    }

    #[test]
    fn common_components_cancel(e in edges(6)) {
        check_cancellation(&e)?;
    }

    #[test]
    fn canonical_form_ignores_order((parts, shuffled) in parts_and_shuffle()) {
        check_canonical_order(&parts, &shuffled)?;
    }

    #[test]
    fn brute_force_matches_engine(e in edges(6)) {
        check_oracle(&e)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Affine entropies: the canonical entropy is the affine normalization.
    #[test]
    fn canonical_entropy_is_affine(a in 0.5f64..3.0, b in -1.0f64..1.0, i in 0usize..=40) {
        use adiabat_core::{EntropyFn, NormalSystem, ReferencePair, StateId};
        let sys = NormalSystem::interval_with_gap(
            "n", adiabat_core::Scale::ZERO, adiabat_core::Scale::integer(2), adiabat_core::Scale::new(1, 20),
            EntropyFn::linear(a, b), 1.0,
        ).unwrap();
        let refs = ReferencePair::new(&sys, StateId::coord(0.5), StateId::coord(1.0)).unwrap();
        let x = sys.grid()[i].0.clone();
        let u = x.coord_value().unwrap();
        let ce = sys.canonical_entropy(&refs, &x, 1e-7).unwrap();
        prop_assert!((ce.value - (u - 0.5) / 0.5).abs() <= 2e-6, "{:?}", ce);
        prop_assert!(ce.agree);
    }

    /// Meter bounds on a joint-potential relation are monotone in the state
    /// potential and pinned to it within one grid step.
    #[test]
    fn potential_meter_reads_the_potential(pa in 0.0f64..0.5, pb in 0.0f64..0.5) {
        use std::collections::BTreeMap;
        use std::sync::Arc;
        use adiabat_core::{MeterSetup, MeterSpec, PotentialRelation, StateRef};
        let catalog = adiabat_core::fixtures::potential_catalog(2.0).unwrap();
        let a = StateRef::named("sys", "a");
        let b = StateRef::named("sys", "b");
        let rel = PotentialRelation::new(catalog, BTreeMap::from([(a.clone(), pa), (b.clone(), pb)])).unwrap();
        let spec = MeterSpec::new(vec![a.clone(), b.clone()], "meter", StateRef::at("meter", 1.0), a.clone());
        let setup = MeterSetup::new(spec, Arc::new(rel)).unwrap();
        let eb = setup.measure(&b).unwrap();
        let want = pb - pa + 1.0;
        prop_assert!(eb.s_minus <= want + 1e-9 && want <= eb.s_plus + 1e-9);
        prop_assert!(eb.gap <= 2.0 * setup.tol() + 1e-9);
    }
}
