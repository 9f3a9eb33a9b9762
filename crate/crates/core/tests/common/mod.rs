//! Random small models shared by the property tests and the acceptance run.

#![allow(dead_code)]

use std::sync::Arc;

use adiabat_core::{
    AccessibilityModel, CompositeState, EntropyFn, ModelConfig, NormalSystem, Scale, SpaceCatalog, StateRef,
};
use proptest::prelude::*;

pub const GENERIC: [&str; 4] = ["a", "b", "c", "d"];
pub const METER: [f64; 3] = [0.0, 0.1, 0.2];

pub fn catalog() -> Arc<SpaceCatalog> {
    let meter = NormalSystem::interval("m", 0.0, 0.2, 0.1, EntropyFn::linear(1.0, 0.0)).unwrap();
    Arc::new(SpaceCatalog::new().with_generic("g", GENERIC).with_normal(meter))
}

pub fn atoms() -> Vec<StateRef> {
    let mut out: Vec<StateRef> = GENERIC.iter().map(|s| StateRef::named("g", *s)).collect();
    out.extend(METER.iter().map(|u| StateRef::at("m", *u)));
    out
}

/// Singletons and unordered pairs (with repetition) of the atoms.
pub fn composites() -> Vec<CompositeState> {
    let atoms = atoms();
    let mut out: Vec<CompositeState> = atoms.iter().map(StateRef::unit).collect();
    for i in 0..atoms.len() {
        for j in i..atoms.len() {
            out.push(atoms[i].unit().compose(&atoms[j].unit()));
        }
    }
    out
}

/// Generators as index pairs into [`composites`], restricted to equal
/// arity so that meter matter can balance.
pub fn edges(max: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    let n_single = atoms().len();
    let n_all = composites().len();
    let edge = prop_oneof![(0..n_single, 0..n_single), (n_single..n_all, n_single..n_all),];
    prop::collection::vec(edge, 0..=max)
}

pub fn model(edges: &[(usize, usize)]) -> AccessibilityModel {
    let cs = composites();
    let mut m = AccessibilityModel::new(catalog(), ModelConfig::explicit());
    m.extend_universe(cs.iter().cloned()).unwrap();
    for (k, &(i, j)) in edges.iter().enumerate() {
        m.add_generator(cs[i].clone(), cs[j].clone(), &format!("e{k}")).unwrap();
    }
    m
}

/// Parts for canonicalization: states with scales from a small set.
pub fn part_list() -> impl Strategy<Value = Vec<(StateRef, Scale)>> {
    let atoms = atoms();
    let part = (0..atoms.len(), 0..3i64).prop_map(move |(i, k)| {
        let s = &atoms[i];
        let scale = if s.space == "m" { Scale::new(k + 1, 2) } else { Scale::integer(k % 2) };
        (s.clone(), scale)
    });
    prop::collection::vec(part, 0..8)
}

pub fn check_idempotent(edges: &[(usize, usize)]) -> Result<(), TestCaseError> {
    let closed = model(edges).close().unwrap();
    let again = closed.as_generators().close().unwrap();
    prop_assert_eq!(closed.pairs(), again.pairs());
    Ok(())
}

pub fn check_monotone(edges: &[(usize, usize)], extra: (usize, usize)) -> Result<(), TestCaseError> {
    let base = model(edges).close().unwrap().pairs();
    let mut more = edges.to_vec();
    more.push(extra);
    let grown = model(&more).close().unwrap().pairs();
    prop_assert!(base.is_subset(&grown));
    Ok(())
}

pub fn check_preorder(edges: &[(usize, usize)]) -> Result<(), TestCaseError> {
    use adiabat_core::Accessibility;
    let closed = model(edges).close().unwrap();
    let u = closed.universe();
    for x in u {
        prop_assert!(closed.precedes(x, x).unwrap());
    }
    for x in u {
        for y in u {
            if !closed.precedes(x, y).unwrap() {
                continue;
            }
            for z in u {
                if closed.precedes(y, z).unwrap() {
                    prop_assert!(closed.precedes(x, z).unwrap(), "{} {} {}", x, y, z);
                }
            }
        }
    }
    prop_assert!(closed.validate_axioms(None).structural_passed());
    Ok(())
}

/// `(W, X) ≺ (W, Y)` in the closure forces `X ≺ Y` whenever both are in the
/// universe.
pub fn check_cancellation(edges: &[(usize, usize)]) -> Result<(), TestCaseError> {
    use adiabat_core::Accessibility;
    let closed = model(edges).close().unwrap();
    let u = closed.universe();
    for w in atoms() {
        let w = w.unit();
        for x in u {
            for y in u {
                let (wx, wy) = (w.compose(x), w.compose(y));
                if closed.contains(&wx) && closed.contains(&wy) && closed.precedes(&wx, &wy).unwrap() {
                    prop_assert!(closed.precedes(x, y).unwrap(), "({}) ≺ ({}) but not {} ≺ {}", wx, wy, x, y);
                }
            }
        }
    }
    Ok(())
}

pub fn check_canonical_order(parts: &[(StateRef, Scale)], shuffled: &[(StateRef, Scale)]) -> Result<(), TestCaseError> {
    let cat = catalog();
    prop_assert_eq!(
        cat.canonicalize(parts.iter().cloned()).unwrap(),
        cat.canonicalize(shuffled.iter().cloned()).unwrap()
    );
    Ok(())
}

pub fn check_oracle(edges: &[(usize, usize)]) -> Result<(), TestCaseError> {
    let m = model(edges);
    let closed = m.close().unwrap();
    let brute = adiabat_core::oracle::brute_close(
        m.catalog(),
        &m.generator_pairs(),
        closed.universe(),
        &m.config().stability_epsilons,
        10_000,
    )
    .unwrap();
    prop_assert_eq!(brute.pairs(), closed.pairs());
    Ok(())
}

/// A list and one of its permutations.
pub fn parts_and_shuffle() -> impl Strategy<Value = (Vec<(StateRef, Scale)>, Vec<(StateRef, Scale)>)> {
    part_list().prop_flat_map(|p| (Just(p.clone()), Just(p).prop_shuffle()))
}
