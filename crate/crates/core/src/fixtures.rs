//! Small bundled models with known answers, shared by tests, benches and
//! the command-line scenarios.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::atlas::{Atlas, Chart};
use crate::error::Result;
use crate::meter::{Coverage, MeterSetup, MeterSpec};
use crate::noneq::ExtendedSpace;
use crate::normal::{EntropyFn, NormalSystem};
use crate::potential::PotentialRelation;
use crate::relation::{AccessibilityModel, ModelConfig};
use crate::scale::Scale;
use crate::state::{CompositeState, SpaceCatalog, StateRef};

fn g(name: &str) -> CompositeState {
    StateRef::named("g", name).unit()
}

fn pair(a: &StateRef, b: &StateRef) -> CompositeState {
    CompositeState::from_parts_unchecked([(a.clone(), Scale::ONE), (b.clone(), Scale::ONE)])
}

fn explicit(catalog: SpaceCatalog, edges: &[(CompositeState, CompositeState)]) -> AccessibilityModel {
    let mut m = AccessibilityModel::new(Arc::new(catalog), ModelConfig::explicit());
    for (i, (from, to)) in edges.iter().enumerate() {
        m.add_generator(from.clone(), to.clone(), &format!("g{i}")).expect("fixture states exist");
    }
    m
}

/// `a → b → c`.
pub fn chain3() -> AccessibilityModel {
    let catalog = SpaceCatalog::new().with_generic("g", ["a", "b", "c"]);
    explicit(catalog, &[(g("a"), g("b")), (g("b"), g("c"))])
}

/// `a → b`, `a → c`; `b` and `c` incomparable.
pub fn fork() -> AccessibilityModel {
    let catalog = SpaceCatalog::new().with_generic("g", ["a", "b", "c"]);
    explicit(catalog, &[(g("a"), g("b")), (g("a"), g("c"))])
}

/// `(p, x) → (p, y)`; cancellation yields `x ≺ y`.
pub fn cancellation() -> AccessibilityModel {
    let catalog = SpaceCatalog::new().with_generic("g", ["p", "x", "y"]);
    explicit(catalog, &[(g("p").compose(&g("x")), g("p").compose(&g("y")))])
}

pub fn stability_epsilons() -> Vec<Scale> {
    (1..=4).map(Scale::dyadic).collect()
}

/// `(x, ε·m0.5) → (y, ε·m0.3)` for ε = 1/2 … 1/16, so `x ≺ y` follows only
/// from the stability rule.
pub fn stability() -> AccessibilityModel {
    let meter = NormalSystem::interval("m", 0.0, 1.0, 0.1, EntropyFn::linear(1.0, 0.0)).expect("valid meter");
    let catalog = SpaceCatalog::new().with_generic("g", ["x", "y"]).with_normal(meter);
    let config = ModelConfig { stability_epsilons: stability_epsilons(), ..ModelConfig::explicit() };
    let mut m = AccessibilityModel::new(Arc::new(catalog), config);
    for eps in stability_epsilons() {
        let from = g("x").compose(&CompositeState::single(StateRef::at("m", 0.5), eps));
        let to = g("y").compose(&CompositeState::single(StateRef::at("m", 0.3), eps));
        m.add_generator(from, to, &format!("eps {eps}")).expect("fixture states exist");
    }
    m
}

/// All small relation fixtures by name.
pub fn relation_fixtures() -> Vec<(&'static str, AccessibilityModel)> {
    vec![("chain3", chain3()), ("fork", fork()), ("cancellation", cancellation()), ("stability", stability())]
}

pub const POTENTIAL_METER_HI: f64 = 2.0;
pub const POTENTIAL_STRIDE: usize = 20;

/// `sys = {a, b}` with potentials 0.3 and 0.7, meter `S(u) = u` on
/// `[0, hi]` at step 0.01.
pub fn potential_catalog(hi: f64) -> Result<Arc<SpaceCatalog>> {
    let meter = NormalSystem::interval("meter", 0.0, hi, 0.01, EntropyFn::linear(1.0, 0.0))?;
    Ok(Arc::new(SpaceCatalog::new().with_generic("sys", ["a", "b"]).with_normal(meter)))
}

pub fn potential_truth(hi: f64) -> Result<PotentialRelation> {
    let potential = BTreeMap::from([(StateRef::named("sys", "a"), 0.3), (StateRef::named("sys", "b"), 0.7)]);
    PotentialRelation::new(potential_catalog(hi)?, potential)
}

/// `(Z0, X1) = (1.0, a)`.
pub fn potential_spec() -> MeterSpec {
    MeterSpec::new(
        vec![StateRef::named("sys", "a"), StateRef::named("sys", "b")],
        "meter",
        StateRef::at("meter", 1.0),
        StateRef::named("sys", "a"),
    )
    .with_product_stride(POTENTIAL_STRIDE)
}

/// `(Z̃0, X̃1) = (2.0, b)`; the documented shift is +0.6.
pub fn potential_alt_refs() -> (StateRef, StateRef) {
    (StateRef::at("meter", 2.0), StateRef::named("sys", "b"))
}

/// Generators recorded from the potential relation at both reference
/// pairs (the alternative one only when the meter reaches it), over the
/// universe the requested coverage needs.
pub fn potential_model(hi: f64, coverage: &Coverage) -> Result<AccessibilityModel> {
    let truth = potential_truth(hi)?;
    let catalog = truth.catalog_arc().clone();
    let spec = potential_spec();
    let meter = catalog.normal("meter")?.clone();
    let grid: Vec<StateRef> = meter.grid().iter().map(|(id, _)| meter.state(id.clone())).collect();
    let mut model = AccessibilityModel::new(catalog.clone(), ModelConfig::explicit());
    let mut edges = truth.meter_generators(&spec.system, &grid, &spec.z0, &spec.x1)?;
    let (z0_alt, x1_alt) = potential_alt_refs();
    let reaches_alt = catalog.contains(&z0_alt).is_ok();
    if reaches_alt {
        edges.extend(truth.meter_generators(&spec.system, &grid, &z0_alt, &x1_alt)?);
    }
    for (i, (from, to)) in edges.into_iter().enumerate() {
        model.add_generator(from, to, &format!("m{i}"))?;
    }
    let mut coverage = coverage.clone();
    if !reaches_alt {
        coverage.alt_refs = None;
    }
    model.extend_universe(spec.universe(&meter, &coverage))?;
    Ok(model)
}

pub fn potential_meter(hi: f64, coverage: &Coverage) -> Result<MeterSetup> {
    let closed = potential_model(hi, coverage)?.close()?;
    MeterSetup::new(potential_spec(), Arc::new(closed))
}

/// `sys = {x1, x}`, meter `[0, 1.2]` at step 0.1, `Z0 = 0.7`. The
/// generators leave `x` between meter readings 0.5 and 0.9.
pub fn incomparable_model(coverage: &Coverage) -> Result<AccessibilityModel> {
    let meter = NormalSystem::interval("meter", 0.0, 1.2, 0.1, EntropyFn::linear(1.0, 0.0))?;
    let catalog = Arc::new(SpaceCatalog::new().with_generic("sys", ["x1", "x"]).with_normal(meter.clone()));
    let spec = incomparable_spec();
    let mut model = AccessibilityModel::new(catalog, ModelConfig::explicit());
    let xz0 = pair(&StateRef::named("sys", "x"), &spec.z0);
    for (id, s) in meter.grid() {
        let x1z = pair(&spec.x1, &meter.state(id.clone()));
        if *s <= 0.5 + 1e-12 {
            model.add_generator(x1z.clone(), xz0.clone(), "below")?;
        }
        if *s >= 0.9 - 1e-12 {
            model.add_generator(xz0.clone(), x1z, "above")?;
        }
    }
    model.extend_universe(spec.universe(&meter, coverage))?;
    Ok(model)
}

pub fn incomparable_spec() -> MeterSpec {
    MeterSpec::new(
        vec![StateRef::named("sys", "x1"), StateRef::named("sys", "x")],
        "meter",
        StateRef::at("meter", 0.7),
        StateRef::named("sys", "x1"),
    )
}

pub fn incomparable_meter(coverage: &Coverage) -> Result<MeterSetup> {
    let closed = incomparable_model(coverage)?.close()?;
    MeterSetup::new(incomparable_spec(), Arc::new(closed))
}

/// One-state system measured against itself.
pub fn single_state_meter() -> Result<MeterSetup> {
    let meter = NormalSystem::interval("meter", 0.0, 1.0, 0.1, EntropyFn::linear(1.0, 0.0))?;
    let catalog = Arc::new(SpaceCatalog::new().with_generic("sys", ["a"]).with_normal(meter));
    let truth = PotentialRelation::new(catalog, BTreeMap::from([(StateRef::named("sys", "a"), 0.0)]))?;
    let spec = MeterSpec::new(
        vec![StateRef::named("sys", "a")],
        "meter",
        StateRef::at("meter", 0.5),
        StateRef::named("sys", "a"),
    );
    MeterSetup::new(spec, Arc::new(truth))
}

fn wedge_catalog() -> Result<Arc<SpaceCatalog>> {
    let eq = NormalSystem::interval("eq", 0.0, 1.0, 0.05, EntropyFn::linear(1.0, 0.0))?;
    Ok(Arc::new(SpaceCatalog::new().with_generic("hat", ["xhat", "yhat"]).with_normal(eq)))
}

fn eq(u: f64) -> CompositeState {
    StateRef::at("eq", u).unit()
}

fn hat(name: &str) -> CompositeState {
    StateRef::named("hat", name).unit()
}

fn wedge_generators(chain: bool) -> Vec<(CompositeState, CompositeState)> {
    let mut edges = vec![(eq(0.3), hat("xhat")), (eq(0.4), hat("xhat")), (hat("xhat"), eq(0.6))];
    if chain {
        edges.push((hat("xhat"), hat("yhat")));
        edges.push((hat("yhat"), eq(0.55)));
    }
    edges
}

/// `0.3 → x̂`, `0.4 → x̂`, `x̂ → 0.6` over `S(u) = u` at step 0.05; with
/// `chain`, also `x̂ → ŷ → 0.55`.
pub fn wedge(chain: bool) -> Result<ExtendedSpace> {
    ExtendedSpace::build(wedge_catalog()?, "hat", "eq", &wedge_generators(chain), None)
}

/// Only `0.3 → x̂`: no upper bracket.
pub fn wedge_open() -> Result<ExtendedSpace> {
    ExtendedSpace::build(wedge_catalog()?, "hat", "eq", &[(eq(0.3), hat("xhat"))], None)
}

/// `(Z0, X1)` for measuring the wedge with its own equilibrium states.
pub fn wedge_cross_refs() -> (StateRef, StateRef) {
    (StateRef::at("eq", 0.6), StateRef::at("eq", 0.5))
}

pub fn wedge_cross_checked() -> Result<ExtendedSpace> {
    ExtendedSpace::build(wedge_catalog()?, "hat", "eq", &wedge_generators(false), Some(wedge_cross_refs()))
}

fn chart(id: &str, points: impl IntoIterator<Item = (StateRef, f64)>) -> Chart {
    Chart::new(id, points.into_iter().collect()).expect("fixture charts are nonempty")
}

fn coord_chart(id: &str, tenths: std::ops::RangeInclusive<i32>, shift: f64) -> Chart {
    chart(
        id,
        tenths.map(|i| {
            let u = i as f64 / 10.0;
            (StateRef::at("u", u), u - shift)
        }),
    )
}

/// `[0, 1]` with `S = u` and `[0.5, 1.5]` with `S = u - 1`.
pub fn two_charts() -> Atlas {
    Atlas::new(vec![coord_chart("left", 0..=10, 0.0), coord_chart("right", 5..=15, 1.0)]).expect("distinct ids")
}

/// Offsets 0, 1, 2.5 along a line of charts.
pub fn three_charts_line() -> Atlas {
    Atlas::new(vec![coord_chart("c0", 0..=10, 0.0), coord_chart("c1", 5..=15, 1.0), coord_chart("c2", 12..=20, 2.5)])
        .expect("distinct ids")
}

/// Three charts around a ring of six states with pairwise differences
/// `+1, +1, -2 + mismatch`.
pub fn three_cycle(mismatch: f64) -> Atlas {
    let s = |i: usize| StateRef::named("ring", format!("s{i}"));
    let c0 = chart("c0", [0, 1, 2].map(|i| (s(i), i as f64)));
    let c1 = chart("c1", [2, 3, 4].map(|i| (s(i), i as f64 - 1.0)));
    let c2 = chart("c2", [(s(4), 2.0), (s(5), 3.0), (s(0), -2.0 + mismatch)]);
    Atlas::new(vec![c0, c1, c2]).expect("distinct ids")
}

pub const ROD_STATES: usize = 11;

fn rod(i: usize) -> StateRef {
    StateRef::named("rod", format!("r{i:02}"))
}

/// Eleven states with potentials `i / 5`, a small meter on `[0, 1.2]` and
/// a large one on `[0, 3.2]`, both at step 0.01.
pub fn rod_truth() -> Result<PotentialRelation> {
    let small = NormalSystem::interval("small", 0.0, 1.2, 0.01, EntropyFn::linear(1.0, 0.0))?;
    let large = NormalSystem::interval("large", 0.0, 3.2, 0.01, EntropyFn::linear(1.0, 0.0))?;
    let names: Vec<String> = (0..ROD_STATES).map(|i| format!("r{i:02}")).collect();
    let catalog = Arc::new(SpaceCatalog::new().with_generic("rod", names).with_normal(small).with_normal(large));
    let potential = (0..ROD_STATES).map(|i| (rod(i), i as f64 / 5.0)).collect();
    PotentialRelation::new(catalog, potential)
}

/// `(chart id, X1 index, region indices)`; every region satisfies the
/// bracketing assumption on the small meter with `Z0 = 0.6`.
pub fn rod_chart_plan() -> Vec<(&'static str, usize, std::ops::RangeInclusive<usize>)> {
    vec![("A", 0, 0..=3), ("B", 3, 2..=6), ("C", 6, 5..=9), ("D", 8, 7..=10)]
}

/// Charts measured with the small meter and chart-local references.
pub fn rod_charts() -> Result<Atlas> {
    let truth: Arc<PotentialRelation> = Arc::new(rod_truth()?);
    let mut charts = Vec::new();
    for (id, x1, region) in rod_chart_plan() {
        let spec = MeterSpec::new(region.map(rod).collect(), "small", StateRef::at("small", 0.6), rod(x1));
        let setup = MeterSetup::new(spec, truth.clone())?;
        charts.push(Chart::from_estimates(id, &setup.measure_all()?)?);
    }
    Atlas::new(charts)
}

/// One measurement of the whole rod with the large meter.
pub fn rod_large_meter() -> Result<MeterSetup> {
    let spec = MeterSpec::new((0..ROD_STATES).map(rod).collect(), "large", StateRef::at("large", 1.0), rod(0));
    MeterSetup::new(spec, Arc::new(rod_truth()?))
}
