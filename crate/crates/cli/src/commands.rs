//! One function per subcommand. Each returns an [`Outcome`]; printing and
//! exit codes are left to `main`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use adiabat_core::meter::{scan_bounds, CheckOutcome, Coverage, MeterSetup, MeterSpec, Status};
use adiabat_core::normal::DEFAULT_BISECTION_TOL;
use adiabat_core::oracle::{brute_close, brute_s};
use adiabat_core::{
    Accessibility, AccessibilityModel, Atlas, Chart, ClosedModel, CompositeState, Error as CoreError, ExtendedSpace,
    NormalSystem, PotentialRelation, ReferencePair, Scale, SpaceCatalog, StateRef,
};
use anyhow::{anyhow, Context, Result};
use serde_json::{json, Value};

use crate::scenario::{self, CoverageDecl, MeterDecl, RelationSource, Scenario};

/// What a subcommand found.
#[derive(Debug)]
pub struct Outcome {
    /// False when a checked property is violated (exit code 1).
    pub ok: bool,
    pub lines: Vec<String>,
    /// Header first.
    pub csv: Vec<String>,
    pub report: Value,
}

impl Outcome {
    fn new(ok: bool, lines: Vec<String>, csv: Vec<String>, report: Value) -> Self {
        Outcome { ok, lines, csv, report }
    }
}

/// Rounds to 12 decimals and always shows a decimal point.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let mut r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        r = 0.0;
    }
    if r.fract() == 0.0 {
        format!("{r:.1}")
    } else {
        format!("{r}")
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Everything shared by the subcommands after parsing.
struct Built {
    catalog: Arc<SpaceCatalog>,
    model: AccessibilityModel,
    potential: Option<Arc<PotentialRelation>>,
}

fn build(scn: &Scenario) -> Result<Built> {
    let catalog = scn.catalog()?;
    let mut model = AccessibilityModel::new(catalog.clone(), scn.model_config()?);
    for (from, to, label) in scenario::edges(&catalog, &scn.generators, "generators")? {
        model.add_generator(from, to, &label)?;
    }
    for (i, text) in scn.universe.iter().enumerate() {
        let c = scenario::composite(&catalog, text).with_context(|| format!("at `universe[{i}]`"))?;
        model.add_to_universe(c)?;
    }
    let potential = match &scn.potential {
        None => None,
        Some(map) => {
            let mut values = BTreeMap::new();
            for (k, v) in map {
                let s = scenario::state_ref(&catalog, k).with_context(|| format!("at `potential.{k}`"))?;
                values.insert(s, v.value());
            }
            Some(Arc::new(PotentialRelation::new(catalog.clone(), values)?))
        }
    };
    Ok(Built { catalog, model, potential })
}

fn refs(cat: &SpaceCatalog, z0: &str, x1: &str, field: &str) -> Result<(StateRef, StateRef)> {
    let z0 = scenario::state_ref(cat, z0).with_context(|| format!("at `{field}.z0`"))?;
    let x1 = scenario::state_ref(cat, x1).with_context(|| format!("at `{field}.x1`"))?;
    Ok((z0, x1))
}

struct MeterRun {
    setup: MeterSetup,
    alt: Option<(StateRef, StateRef)>,
    closed: Option<Arc<ClosedModel>>,
}

fn meter_run(b: &Built, decl: &MeterDecl) -> Result<MeterRun> {
    let cat = &b.catalog;
    let system = decl
        .system
        .iter()
        .enumerate()
        .map(|(i, s)| scenario::state_ref(cat, s).with_context(|| format!("at `meter.system[{i}]`")))
        .collect::<Result<Vec<_>>>()?;
    let meter = cat.normal(&decl.meter).context("at `meter.meter`")?.clone();
    let (z0, x1) = refs(cat, &decl.z0, &decl.x1, "meter")?;
    let alt = decl.alt.as_ref().map(|a| refs(cat, &a.z0, &a.x1, "meter.alt")).transpose()?;
    let mut spec = MeterSpec::new(system, &decl.meter, z0.clone(), x1.clone());
    if let Some(n) = decl.product_stride {
        spec = spec.with_product_stride(n);
    }
    match decl.relation {
        RelationSource::Potential => {
            let truth = b
                .potential
                .clone()
                .ok_or_else(|| anyhow!("`meter.relation` is \"potential\" but no `potential` is given"))?;
            Ok(MeterRun { setup: MeterSetup::new(spec, truth)?, alt, closed: None })
        }
        RelationSource::Closure => {
            let mut model = b.model.clone();
            if let Some(truth) = &b.potential {
                let grid: Vec<StateRef> = meter.grid().iter().map(|(id, _)| meter.state(id.clone())).collect();
                let mut edges = truth.meter_generators(&spec.system, &grid, &z0, &x1)?;
                if let Some((az0, ax1)) = &alt {
                    edges.extend(truth.meter_generators(&spec.system, &grid, az0, ax1)?);
                }
                for (i, (from, to)) in edges.into_iter().enumerate() {
                    model.add_generator(from, to, &format!("recorded {i}"))?;
                }
            }
            let coverage = match decl.coverage {
                CoverageDecl::Basic => Coverage { alt_refs: alt.clone(), ..Coverage::default() },
                CoverageDecl::Full => Coverage::full(alt.clone()),
            };
            model.extend_universe(spec.universe(&meter, &coverage))?;
            let closed = Arc::new(model.close()?);
            Ok(MeterRun { setup: MeterSetup::new(spec, closed.clone())?, alt, closed: Some(closed) })
        }
    }
}

fn noneq_space(b: &Built, scn: &Scenario) -> Result<Option<ExtendedSpace>> {
    let Some(decl) = &scn.noneq else { return Ok(None) };
    let cross = decl.cross_check.as_ref().map(|r| refs(&b.catalog, &r.z0, &r.x1, "noneq.cross_check")).transpose()?;
    Ok(Some(ExtendedSpace::build(b.catalog.clone(), &decl.hat, &decl.eq, &b.model.generator_pairs(), cross)?))
}

/// The closed relation a scenario is about: the meter model when there is
/// one, else the extended space, else the plain generators.
fn primary_closure(b: &Built, scn: &Scenario) -> Result<Arc<ClosedModel>> {
    if let Some(decl) = &scn.meter {
        if let Some(closed) = meter_run(b, decl)?.closed {
            return Ok(closed);
        }
    }
    if let Some(ext) = noneq_space(b, scn)? {
        return Ok(ext.relation().clone());
    }
    Ok(Arc::new(b.model.close()?))
}

pub fn validate(scn: &Scenario) -> Result<Outcome> {
    let b = build(scn)?;
    let closed = primary_closure(&b, scn)?;
    let intended = match &scn.intended {
        Some(decls) => Some(
            scenario::edges(&b.catalog, decls, "intended")?.into_iter().map(|(f, t, _)| (f, t)).collect::<Vec<_>>(),
        ),
        None => None,
    };
    let report = closed.validate_axioms(intended.as_deref());
    let mut lines = vec![format!(
        "universe {} composites, {} pairs, {} rounds",
        closed.universe().len(),
        closed.pair_count(),
        closed.rounds()
    )];
    let mut csv = vec!["check,passed,violations".to_string()];
    for c in [&report.reflexivity, &report.transitivity, &report.consistency, &report.cancellation] {
        lines.push(format!("{}: {} ({} violations)", c.name, verdict(c.passed), c.violations));
        for (x, y) in &c.counterexamples {
            lines.push(format!("  {x}  vs  {y}"));
        }
        csv.push(format!("{},{},{}", c.name, c.passed, c.violations));
    }
    lines.push(format!("stability inferences: {}", report.stability.len()));
    for s in &report.stability {
        lines.push(format!("  {} -> {} ({})", s.from, s.to, s.note));
    }
    if let Some(i) = &report.intended {
        lines.push(format!("intended relation: {} flag(s)", i.flags.len()));
        lines.extend(i.flags.iter().map(|f| format!("  {f}")));
        csv.push(format!("intended,{},{}", i.flags.is_empty(), i.flags.len()));
    }
    let ok = report.passed();
    let json = json!({
        "command": "validate",
        "scenario": scn.name,
        "ok": ok,
        "universe": closed.universe().len(),
        "pairs": closed.pair_count(),
        "approximate_pairs": closed.approximate_pairs(),
        "axioms": report,
    });
    Ok(Outcome::new(ok, lines, csv, json))
}

pub fn canonical(scn: &Scenario) -> Result<Outcome> {
    let decl = scn.canonical.as_ref().ok_or_else(|| anyhow!("scenario has no `canonical` section"))?;
    let catalog = scn.catalog()?;
    let sys: &NormalSystem = catalog.normal(&decl.space).context("at `canonical.space`")?;
    let x0 = scenario::state_ref(&catalog, &format!("{}:{}", decl.space, decl.x0)).context("at `canonical.x0`")?;
    let x1 = scenario::state_ref(&catalog, &format!("{}:{}", decl.space, decl.x1)).context("at `canonical.x1`")?;
    let refs = ReferencePair::new(sys, x0.state, x1.state).context("at `canonical`")?;
    let tol = decl.tol.as_ref().map_or(DEFAULT_BISECTION_TOL, |t| t.value());
    let states: Vec<StateRef> = match &decl.states {
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(i, s)| {
                scenario::state_ref(&catalog, &format!("{}:{s}", decl.space))
                    .with_context(|| format!("at `canonical.states[{i}]`"))
            })
            .collect::<Result<_>>()?,
        None => sys.grid().iter().map(|(id, _)| sys.state(id.clone())).collect(),
    };

    let mut ok = true;
    let mut lines = Vec::new();
    let mut csv = vec!["state,entropy,canonical,s_minus,s_plus,agree".to_string()];
    let mut rows = Vec::new();
    let mut max_error: f64 = 0.0;
    for s in &states {
        let c = sys.canonical_entropy(&refs, &s.state, tol)?;
        let s_true = sys.entropy(&s.state)?;
        let s0 = sys.entropy(&refs.x0)?;
        let s1 = sys.entropy(&refs.x1)?;
        let expected = (s_true - s0) / (s1 - s0);
        max_error = max_error.max((c.value - expected).abs());
        ok &= c.agree;
        lines.push(format!(
            "{}, {}, {}, [{}, {}], {}",
            s.state,
            fmt_num(expected),
            fmt_num(c.value),
            fmt_num(c.s_minus),
            fmt_num(c.s_plus),
            if c.agree { "agree" } else { "DISAGREE" }
        ));
        csv.push(format!("{},{},{},{},{},{}", s.state, expected, c.value, c.s_minus, c.s_plus, c.agree));
        rows.push(json!({"state": s, "expected": expected, "result": c}));
    }
    // comparison-principle spot check on neighbouring listed states
    let lambdas: Vec<Scale> = [(1, 4), (1, 2), (3, 4)].iter().map(|&(n, d)| Scale::new(n, d)).collect();
    let sample: Vec<_> = states.windows(2).map(|w| (w[0].state.clone(), w[1].state.clone())).collect();
    let cp = sys.verify_cp(&lambdas, &sample)?;
    ok &= cp.passed();
    lines.push(format!("max |canonical - affine| = {}", fmt_num(max_error)));
    lines.push(format!(
        "comparison principle: {} ({} checked, {} failures)",
        verdict(cp.passed()),
        cp.checked,
        cp.failures.len()
    ));
    let json = json!({
        "command": "canonical",
        "scenario": scn.name,
        "ok": ok,
        "tol": tol,
        "max_error": max_error,
        "rows": rows,
        "comparison_principle": cp,
    });
    Ok(Outcome::new(ok, lines, csv, json))
}

pub fn meter(scn: &Scenario) -> Result<Outcome> {
    let decl = scn.meter.as_ref().ok_or_else(|| anyhow!("scenario has no `meter` section"))?;
    let b = build(scn)?;
    let run = meter_run(&b, decl)?;
    let setup = &run.setup;
    let b1 = setup.check_bracketing()?;

    let mut lines = vec![format!("meter `{}`, tol {}", decl.meter, fmt_num(setup.tol()))];
    let mut csv = vec!["state,s_minus,s_plus,gap,comparable".to_string()];
    let mut rows = Vec::new();
    for x in &setup.spec().system {
        match setup.measure(x) {
            Ok(e) => {
                let class = if e.comparable { "comparable" } else { "incomparable" };
                lines.push(format!(
                    "{x}, {}, {}, gap {}, {class}",
                    fmt_num(e.s_minus),
                    fmt_num(e.s_plus),
                    fmt_num(e.gap)
                ));
                csv.push(format!("{x},{},{},{},{}", e.s_minus, e.s_plus, e.gap, e.comparable));
                rows.push(json!(e));
            }
            Err(CoreError::BracketMissing { side, .. }) => {
                lines.push(format!("{x}, bracket missing ({side:?} side)"));
                csv.push(format!("{x},,,,"));
                rows.push(json!({"state": x, "bracket_missing": side}));
            }
            Err(e) => return Err(e.into()),
        }
    }

    let laws = setup.verify_meter_laws(run.alt.clone())?;
    lines.push(format!("comparability on all states: {}", laws.comparable_everywhere));
    for (name, c) in laws.checks() {
        lines.push(format!("law {name}: {}", check_line(c)));
    }
    let prop = setup.check_bound_laws(&setup.envelope_candidates()?)?;
    for (name, c) in prop.parts() {
        lines.push(format!("bound law {name}: {}", check_line(c)));
    }
    for s in &prop.sandwich {
        lines.push(format!(
            "candidate {}: admissible {}, within bounds {}, tight lower {}",
            s.candidate, s.admissible, s.within_bounds, s.tight_lower
        ));
    }
    let ok = !laws.failed() && !prop.failed();
    let json = json!({
        "command": "meter",
        "scenario": scn.name,
        "ok": ok,
        "tol": setup.tol(),
        "bracketing": b1,
        "rows": rows,
        "laws": {
            "comparable_everywhere": laws.comparable_everywhere,
            "equality": laws.equality,
            "entropy_property": laws.entropy_property,
            "additivity": laws.additivity,
            "reference_shift": laws.reference_shift,
        },
        "bound_laws": {
            "skipped": prop.skipped,
            "monotonicity": prop.monotonicity,
            "separation": prop.separation,
            "composite_bounds": prop.composite_bounds,
            "reference_values": prop.reference_values,
            "sandwich": prop.sandwich,
        },
    });
    Ok(Outcome::new(ok, lines, csv, json))
}

fn check_line(c: &CheckOutcome) -> String {
    let word = match c.status {
        Status::Pass => "pass",
        Status::Fail => "FAIL",
        Status::Inapplicable => "inapplicable",
    };
    format!("{word} ({})", c.detail)
}

pub fn noneq(scn: &Scenario) -> Result<Outcome> {
    let b = build(scn)?;
    let ext = noneq_space(&b, scn)?.ok_or_else(|| anyhow!("scenario has no `noneq` section"))?;
    let mut lines = vec![format!("equilibrium `{}`, tol {}", ext.equilibrium().id(), fmt_num(ext.tol()))];
    let mut csv = vec!["state,lower,upper,s_minus,s_plus,comparable".to_string()];
    let mut rows = Vec::new();
    let estimates: BTreeMap<StateRef, _> =
        ext.table()?.into_iter().map(|e| (e.state.parts()[0].state.clone(), e)).collect();
    for br in ext.check_bracketing()? {
        let show = |s: &Option<StateRef>| s.as_ref().map_or("-".to_string(), ToString::to_string);
        match estimates.get(&br.state) {
            Some(e) => {
                let class = if e.comparable { "comparable" } else { "incomparable" };
                lines.push(format!(
                    "{}, {}, {}, gap {}, {class}",
                    br.state,
                    fmt_num(e.s_minus),
                    fmt_num(e.s_plus),
                    fmt_num(e.gap)
                ));
                csv.push(format!(
                    "{},{},{},{},{},{}",
                    br.state,
                    show(&br.lower),
                    show(&br.upper),
                    e.s_minus,
                    e.s_plus,
                    e.comparable
                ));
            }
            None => {
                lines.push(format!(
                    "{}, not bracketed (lower {}, upper {})",
                    br.state,
                    show(&br.lower),
                    show(&br.upper)
                ));
                csv.push(format!("{},{},{},,,", br.state, show(&br.lower), show(&br.upper)));
            }
        }
        rows.push(json!({"bracket": br, "estimate": estimates.get(&br.state)}));
    }
    let disagreements = ext.equilibrium_disagreements()?;
    let violations = ext.monotonicity_violations()?;
    lines.push(format!("equilibrium agreement: {} ({disagreements} mismatches)", verdict(disagreements == 0)));
    lines.push(format!("monotonicity: {} ({violations} violations)", verdict(violations == 0)));
    let mut ok = disagreements == 0 && violations == 0;
    let mut cross = Value::Null;
    if let Some(r) = scn.noneq.as_ref().and_then(|d| d.cross_check.as_ref()) {
        let (z0, x1) = refs(&b.catalog, &r.z0, &r.x1, "noneq.cross_check")?;
        let rep = ext.cross_check(z0, x1)?;
        lines.push(format!(
            "cross-check: {} (constant {}, max residual {}, bound {})",
            verdict(rep.passed),
            fmt_num(rep.constant),
            fmt_num(rep.max_residual),
            fmt_num(rep.bound)
        ));
        ok &= rep.passed;
        cross = json!(rep);
    }
    let json = json!({
        "command": "noneq",
        "scenario": scn.name,
        "ok": ok,
        "tol": ext.tol(),
        "rows": rows,
        "equilibrium_disagreements": disagreements,
        "monotonicity_violations": violations,
        "cross_check": cross,
    });
    Ok(Outcome::new(ok, lines, csv, json))
}

pub fn charts(scn: &Scenario) -> Result<Outcome> {
    let decl = scn.charts.as_ref().ok_or_else(|| anyhow!("scenario has no `charts` section"))?;
    let b = build(scn)?;
    let cat = &b.catalog;
    let mut charts = Vec::new();
    for (i, c) in decl.charts.iter().enumerate() {
        let at = || format!("at `charts.charts[{i}]`");
        let chart = match (&c.values, &c.region) {
            (Some(values), None) => {
                let mut local = BTreeMap::new();
                for (k, v) in values {
                    local.insert(scenario::state_ref(cat, k).with_context(at)?, v.value());
                }
                Chart::new(&c.id, local)?
            }
            (None, Some(region)) => {
                let truth =
                    b.potential.clone().ok_or_else(|| anyhow!("measured charts need `potential`")).with_context(at)?;
                let (Some(meter), Some(z0), Some(x1)) = (&c.meter, &c.z0, &c.x1) else {
                    return Err(anyhow!("a measured chart needs `meter`, `z0` and `x1`")).with_context(at);
                };
                let system =
                    region.iter().map(|s| scenario::state_ref(cat, s)).collect::<Result<Vec<_>>>().with_context(at)?;
                let (z0, x1) = refs(cat, z0, x1, &format!("charts.charts[{i}]"))?;
                let setup = MeterSetup::new(MeterSpec::new(system, meter, z0, x1), truth)?;
                Chart::from_estimates(&c.id, &setup.measure_all()?)?
            }
            _ => return Err(anyhow!("a chart needs exactly one of `values` or `region`")).with_context(at),
        };
        charts.push(chart);
    }
    let mut atlas = Atlas::new(charts)?;
    if let Some(n) = &decl.neighbours {
        atlas = atlas.with_neighbours(n.clone())?;
    }
    let tol = decl.tol.value();
    let cal = atlas.calibrate(&decl.anchor, tol)?;
    let loops = atlas.check_loops(&decl.anchor, tol)?;

    let mut lines = Vec::new();
    let mut csv = vec!["chart,offset".to_string()];
    for (id, off) in &cal.offsets {
        lines.push(format!("offset {id}: {}", fmt_num(*off)));
        csv.push(format!("{id},{off}"));
    }
    for id in &cal.unreachable {
        lines.push(format!("unreachable chart {id}"));
    }
    lines.push(format!("max overlap residual {}", fmt_num(cal.max_residual)));
    for c in &loops.cycles {
        lines.push(format!(
            "loop {}: sum {}{}",
            c.charts.join(" -> "),
            fmt_num(c.sum),
            if c.flagged { " FLAGGED" } else { "" }
        ));
    }
    let mut ok = loops.consistent();
    let glued_json;
    let mut single_json = Value::Null;
    match atlas.glue_global(&cal, &loops) {
        Ok(glued) => {
            lines.push(format!("glued {} states, max spread {}", glued.values.len(), fmt_num(glued.max_spread)));
            if let Some(single) = &decl.single_meter {
                let (z0, x1) = refs(cat, &single.z0, &single.x1, "charts.single_meter")?;
                let truth = b.potential.clone().ok_or_else(|| anyhow!("`charts.single_meter` needs `potential`"))?;
                let system: Vec<StateRef> = glued.values.keys().cloned().collect();
                let setup = MeterSetup::new(MeterSpec::new(system, &single.meter, z0, x1), truth)?;
                let mut diffs = Vec::new();
                for e in setup.measure_all()? {
                    diffs.push(e.s_minus - glued.values[&e.state.parts()[0].state]);
                }
                let hi = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = diffs.iter().copied().fold(f64::INFINITY, f64::min);
                let spread = hi - lo;
                let bound = 4.0 * setup.tol();
                let pass = spread <= bound + 1e-9;
                ok &= pass;
                lines.push(format!(
                    "single meter: {} (constant {}, spread {}, bound {})",
                    verdict(pass),
                    fmt_num(lo),
                    fmt_num(spread),
                    fmt_num(bound)
                ));
                single_json = json!({"constant": lo, "spread": spread, "bound": bound, "passed": pass});
            }
            glued_json = json!(glued);
        }
        Err(e @ (CoreError::InconsistentLoops { .. } | CoreError::GlueMismatch { .. })) => {
            ok = false;
            lines.push(format!("gluing refused: {e}"));
            glued_json = json!({"error": e.to_string()});
        }
        Err(e) => return Err(e.into()),
    }
    let json = json!({
        "command": "charts",
        "scenario": scn.name,
        "ok": ok,
        "calibration": cal,
        "loops": loops,
        "glued": glued_json,
        "single_meter": single_json,
    });
    Ok(Outcome::new(ok, lines, csv, json))
}

pub fn oracle_diff(scn: &Scenario) -> Result<Outcome> {
    let b = build(scn)?;
    let closed = primary_closure(&b, scn)?;
    let cap = closed.config().max_universe;
    let generators: Vec<(CompositeState, CompositeState)> =
        closed.generators().iter().map(|g| (g.from.clone(), g.to.clone())).collect();
    let brute =
        brute_close(closed.catalog(), &generators, closed.universe(), &closed.config().stability_epsilons, cap)?;
    let engine_pairs = closed.pairs();
    let brute_pairs = brute.pairs();
    let only_engine: BTreeSet<_> = engine_pairs.difference(&brute_pairs).cloned().collect();
    let only_brute: BTreeSet<_> = brute_pairs.difference(&engine_pairs).cloned().collect();
    let mut lines = vec![format!(
        "relation: {} pairs (engine) vs {} (oracle) over {} composites",
        engine_pairs.len(),
        brute_pairs.len(),
        closed.universe().len()
    )];
    let mut csv = vec!["kind,subject,engine,oracle".to_string()];
    for (x, y) in only_engine.iter().take(20) {
        lines.push(format!("  engine only: {x} -> {y}"));
    }
    for (x, y) in only_brute.iter().take(20) {
        lines.push(format!("  oracle only: {x} -> {y}"));
    }
    for (x, y) in only_engine.iter() {
        csv.push(format!("pair,{x} -> {y},true,false"));
    }
    for (x, y) in only_brute.iter() {
        csv.push(format!("pair,{x} -> {y},false,true"));
    }
    let mut bound_diffs = 0;
    let mut meter_rows = Vec::new();
    if let Some(decl) = &scn.meter {
        if decl.relation == RelationSource::Closure {
            let run = meter_run(&b, decl)?;
            let setup = &run.setup;
            let spec = setup.spec();
            for x in &spec.system {
                let (lo, hi) = brute_s(&brute, &spec.x1.unit(), &spec.z0.unit(), &x.unit(), setup.meter_scale())?;
                let engine = match setup.measure(x) {
                    Ok(e) => (Some(e.s_minus), Some(e.s_plus)),
                    Err(CoreError::BracketMissing { .. }) => {
                        let (lo, hi) = scan_bounds(
                            &**setup.relation(),
                            &spec.x1.unit(),
                            &spec.z0.unit(),
                            &x.unit(),
                            setup.meter_scale(),
                        )?;
                        (lo.map(|v| v.0), hi.map(|v| v.0))
                    }
                    Err(e) => return Err(e.into()),
                };
                let same = engine == (lo, hi);
                if !same {
                    bound_diffs += 1;
                }
                let show = |v: Option<f64>| v.map_or("-".to_string(), fmt_num);
                lines.push(format!(
                    "{x}: engine [{}, {}], oracle [{}, {}]{}",
                    show(engine.0),
                    show(engine.1),
                    show(lo),
                    show(hi),
                    if same { "" } else { " DIFFERS" }
                ));
                csv.push(format!("bounds,{x},{}..{},{}..{}", show(engine.0), show(engine.1), show(lo), show(hi)));
                meter_rows.push(json!({"state": x, "engine": [engine.0, engine.1], "oracle": [lo, hi], "same": same}));
            }
        }
    }
    let ok = only_engine.is_empty() && only_brute.is_empty() && bound_diffs == 0;
    lines.push(format!("oracle agreement: {}", verdict(ok)));
    let json = json!({
        "command": "oracle-diff",
        "scenario": scn.name,
        "ok": ok,
        "universe": closed.universe().len(),
        "engine_pairs": engine_pairs.len(),
        "oracle_pairs": brute_pairs.len(),
        "engine_only": only_engine.iter().map(|(x, y)| [x.to_string(), y.to_string()]).collect::<Vec<_>>(),
        "oracle_only": only_brute.iter().map(|(x, y)| [x.to_string(), y.to_string()]).collect::<Vec<_>>(),
        "meter_bounds": meter_rows,
    });
    Ok(Outcome::new(ok, lines, csv, json))
}
