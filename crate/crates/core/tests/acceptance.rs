//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use adiabat_core::fixtures;
use adiabat_core::meter::Status;
use adiabat_core::normal::{Branch, DEFAULT_BISECTION_TOL};
use adiabat_core::oracle::{brute_close, brute_s};
use adiabat_core::{Accessibility, Coverage, EntropyFn, MeterSetup, NormalSystem, ReferencePair, StateId, StateRef};
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn normal_fixtures() -> Vec<(&'static str, NormalSystem, f64)> {
    let linear = NormalSystem::interval("lin", 0.0, 2.0, 0.01, EntropyFn::linear(1.0, 0.0)).unwrap();
    let log = NormalSystem::interval("log", 0.0, 3.0, 0.01, EntropyFn::log1p(1.0)).unwrap();
    let power = NormalSystem::interval("pow", 0.25, 4.0, 0.01, EntropyFn::power(1.0, 0.5)).unwrap();
    let table = NormalSystem::interval(
        "tab",
        0.0,
        2.0,
        0.05,
        EntropyFn::table(vec![(0.0, 0.0), (0.5, 0.2), (1.0, 0.3), (2.0, 1.0)]),
    )
    .unwrap();
    vec![("S=u", linear, 1.0), ("S=ln(1+u)", log, 1.0), ("S=sqrt(u)", power, 1.0), ("table", table, 1.0)]
}

fn refs(sys: &NormalSystem) -> ReferencePair {
    ReferencePair::new(sys, StateId::coord(0.5), StateId::coord(1.0)).unwrap()
}

fn sample(sys: &NormalSystem, count: usize) -> Vec<StateId> {
    let grid = sys.grid();
    let step = (grid.len() - 1) as f64 / (count - 1) as f64;
    (0..count).map(|k| grid[(k as f64 * step).round() as usize].0.clone()).collect()
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (name, sys, _) in normal_fixtures().into_iter().take(2) {
        let r = refs(&sys);
        let (s0, s1) = (sys.entropy(&r.x0).unwrap(), sys.entropy(&r.x1).unwrap());
        let mut branches = Vec::new();
        for x in sample(&sys, 25) {
            let ce = sys.canonical_entropy(&r, &x, DEFAULT_BISECTION_TOL).map_err(|e| e.to_string())?;
            let want = (sys.entropy(&x).unwrap() - s0) / (s1 - s0);
            let err = (ce.value - want).abs();
            worst = worst.max(err);
            ensure(err <= 2e-6, || format!("{name} at {x}: {} vs {want}", ce.value))?;
            branches.push(ce.branch);
            checked += 1;
        }
        ensure(branches.contains(&Branch::Above) && branches.contains(&Branch::Below), || {
            format!("{name}: sample lacks a λ>1 or λ<0 state")
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("{checked} states, max error {worst:.2e}, {elapsed:.2?}"))
}

fn ac2() -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (name, sys, _) in normal_fixtures() {
        let r = refs(&sys);
        for x in sample(&sys, 40) {
            let ce = sys.canonical_entropy(&r, &x, DEFAULT_BISECTION_TOL).map_err(|e| e.to_string())?;
            let gap = (ce.s_plus - ce.s_minus).abs();
            worst = worst.max(gap);
            ensure(gap <= 2.0 * DEFAULT_BISECTION_TOL, || format!("{name} at {x}: {} vs {}", ce.s_minus, ce.s_plus))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} states over 4 systems, max |S+ - S-| {worst:.2e}"))
}

fn meter_oracle(name: &str, setup: &MeterSetup, model: &adiabat_core::AccessibilityModel) -> Result<usize, String> {
    let closed = model.close().map_err(|e| e.to_string())?;
    let brute = brute_close(
        model.catalog(),
        &model.generator_pairs(),
        closed.universe(),
        &model.config().stability_epsilons,
        10_000,
    )
    .map_err(|e| e.to_string())?;
    ensure(brute.pairs() == closed.pairs(), || format!("{name}: pair sets differ"))?;
    let spec = setup.spec();
    for x in &spec.system {
        let engine = setup.measure(x).ok().map(|e| (e.s_minus, e.s_plus));
        let (lo, hi) = brute_s(&brute, &spec.x1.unit(), &spec.z0.unit(), &x.unit(), setup.meter_scale())
            .map_err(|e| e.to_string())?;
        let oracle = lo.zip(hi);
        ensure(engine == oracle, || format!("{name} at {x}: engine {engine:?} oracle {oracle:?}"))?;
    }
    Ok(closed.universe().len())
}

fn ac3() -> Outcome {
    let start = Instant::now();
    let mut largest = 0;
    let mut count = 0;
    for (name, m) in fixtures::relation_fixtures() {
        let closed = m.close().map_err(|e| e.to_string())?;
        let brute =
            brute_close(m.catalog(), &m.generator_pairs(), closed.universe(), &m.config().stability_epsilons, 10_000)
                .map_err(|e| e.to_string())?;
        ensure(brute.pairs() == closed.pairs(), || format!("{name}: pair sets differ"))?;
        count += 1;
    }
    let full = Coverage::full(Some(fixtures::potential_alt_refs()));
    let hi = fixtures::POTENTIAL_METER_HI;
    let potential = fixtures::potential_meter(hi, &full).map_err(|e| e.to_string())?;
    let model = fixtures::potential_model(hi, &full).map_err(|e| e.to_string())?;
    largest = largest.max(meter_oracle("potential", &potential, &model)?);
    let full = Coverage::full(None);
    let incomparable = fixtures::incomparable_meter(&full).map_err(|e| e.to_string())?;
    let model = fixtures::incomparable_model(&full).map_err(|e| e.to_string())?;
    largest = largest.max(meter_oracle("incomparable", &incomparable, &model)?);
    count += 2;

    for (name, ext) in [
        ("wedge", fixtures::wedge(false)),
        ("wedge-chain", fixtures::wedge(true)),
        ("wedge-cross", fixtures::wedge_cross_checked()),
    ] {
        let ext = ext.map_err(|e| e.to_string())?;
        let closed = ext.relation();
        let gens: Vec<_> = closed.generators().iter().map(|g| (g.from.clone(), g.to.clone())).collect();
        let brute =
            brute_close(closed.catalog(), &gens, closed.universe(), &closed.config().stability_epsilons, 10_000)
                .map_err(|e| e.to_string())?;
        ensure(brute.pairs() == closed.pairs(), || format!("{name}: pair sets differ"))?;
        let readings: Vec<_> =
            ext.equilibrium().grid().iter().map(|(id, s)| (ext.equilibrium().state(id.clone()).unit(), *s)).collect();
        let none = adiabat_core::CompositeState::default();
        for x in ext.states() {
            let engine = ext.s_hat(&x).ok().map(|e| (e.s_minus, e.s_plus));
            let (lo, hi) = brute_s(&brute, &none, &none, &x.unit(), &readings).map_err(|e| e.to_string())?;
            ensure(engine == lo.zip(hi), || format!("{name} at {x}: engine {engine:?}"))?;
        }
        largest = largest.max(closed.universe().len());
        count += 1;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{count} fixtures, largest universe {largest}, {elapsed:.2?}"))
}

fn require(name: &str, status: Status, detail: &str) -> Result<(), String> {
    ensure(status == Status::Pass, || format!("{name} {status:?}: {detail}"))
}

fn ac4() -> Outcome {
    let alt = fixtures::potential_alt_refs();
    let setup = fixtures::potential_meter(fixtures::POTENTIAL_METER_HI, &Coverage::full(Some(alt.clone())))
        .map_err(|e| e.to_string())?;
    let report = setup.verify_meter_laws(Some(alt)).map_err(|e| e.to_string())?;
    for (name, check) in report.checks() {
        require(name, check.status, &check.detail)?;
    }
    let shift = report.reference_shift.value.unwrap_or(f64::NAN);
    ensure((shift - 0.6).abs() <= 4.0 * setup.tol(), || format!("shift {shift}, expected 0.6"))?;
    let b = report.rows.iter().find(|r| r.state == StateRef::named("sys", "b").unit()).unwrap();
    Ok(format!(
        "S(b) in [{}, {}], max gap {}, shift {shift:.6}, tol {}",
        b.s_minus,
        b.s_plus,
        report.equality.value.unwrap_or(f64::NAN),
        setup.tol()
    ))
}

fn ac5() -> Outcome {
    let mut lines = Vec::new();
    let potential =
        fixtures::potential_meter(fixtures::POTENTIAL_METER_HI, &Coverage::full(None)).map_err(|e| e.to_string())?;
    let incomparable = fixtures::incomparable_meter(&Coverage::full(None)).map_err(|e| e.to_string())?;
    for (name, setup) in [("potential", &potential), ("incomparable", &incomparable)] {
        let candidates = setup.envelope_candidates().map_err(|e| e.to_string())?;
        let report = setup.check_bound_laws(&candidates).map_err(|e| e.to_string())?;
        for (part, check) in report.parts() {
            require(&format!("{name} {part}"), check.status, &check.detail)?;
        }
        for row in &report.sandwich {
            ensure(!row.admissible || row.within_bounds, || format!("{name}: {} escapes the bounds", row.candidate))?;
        }
        lines.push(format!("{name}: 4 parts pass"));
    }
    let x = incomparable.measure(&StateRef::named("sys", "x")).map_err(|e| e.to_string())?;
    ensure((x.gap - 0.4).abs() <= 1e-12, || format!("gap at x is {}", x.gap))?;
    let laws = incomparable.verify_meter_laws(None).map_err(|e| e.to_string())?;
    ensure(!laws.comparable_everywhere && laws.equality.status == Status::Inapplicable, || {
        "comparability unexpectedly holds".into()
    })?;
    lines.push(format!("gap at x = {}", x.gap));
    Ok(lines.join("; "))
}

fn ac6() -> Outcome {
    let ext = fixtures::wedge(false).map_err(|e| e.to_string())?;
    let x = ext.s_hat(&StateRef::named("hat", "xhat")).map_err(|e| e.to_string())?;
    ensure((x.s_minus, x.s_plus) == (0.4, 0.6), || format!("wedge gave ({}, {})", x.s_minus, x.s_plus))?;
    for (id, s) in ext.equilibrium().grid() {
        let e = ext.s_hat(&ext.equilibrium().state(id.clone())).map_err(|e| e.to_string())?;
        ensure(e.s_minus == *s && e.s_plus == *s, || format!("equilibrium {id}: ({}, {})", e.s_minus, e.s_plus))?;
    }
    let cross = fixtures::wedge_cross_checked().map_err(|e| e.to_string())?;
    let (z0, x1) = fixtures::wedge_cross_refs();
    let report = cross.cross_check(z0, x1).map_err(|e| e.to_string())?;
    ensure(report.passed, || format!("residual {} above {}", report.max_residual, report.bound))?;
    Ok(format!(
        "x̂ in [0.4, 0.6]; {} equilibrium states exact; constant {:.3}, max residual {:.1e} (bound {})",
        ext.equilibrium().grid().len(),
        report.constant,
        report.max_residual,
        report.bound
    ))
}

fn ac7() -> Outcome {
    let two = fixtures::two_charts().calibrate("left", 1e-12).map_err(|e| e.to_string())?;
    ensure((two.offsets["right"] - 1.0).abs() < 1e-12 && two.max_residual < 1e-12, || format!("{two:?}"))?;
    let line = fixtures::three_charts_line().calibrate("c0", 1e-12).map_err(|e| e.to_string())?;
    for (c, want) in [("c0", 0.0), ("c1", 1.0), ("c2", 2.5)] {
        ensure((line.offsets[c] - want).abs() < 1e-12, || format!("{c}: {}", line.offsets[c]))?;
    }
    ensure(line.max_residual < 1e-12, || format!("line residual {}", line.max_residual))?;
    let bad = fixtures::three_cycle(0.1).check_loops("c0", 1e-9).map_err(|e| e.to_string())?;
    ensure(!bad.consistent() && (bad.worst() - 0.1).abs() <= 1e-12, || format!("loop residual {}", bad.worst()))?;

    let atlas = fixtures::rod_charts().map_err(|e| e.to_string())?;
    let large = fixtures::rod_large_meter().map_err(|e| e.to_string())?;
    let tol = large.tol();
    let cal = atlas.calibrate("A", tol).map_err(|e| e.to_string())?;
    let loops = atlas.check_loops("A", tol).map_err(|e| e.to_string())?;
    let glued = atlas.glue_global(&cal, &loops).map_err(|e| e.to_string())?;
    let single: BTreeMap<StateRef, f64> = large
        .measure_all()
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|e| (e.state.parts()[0].state.clone(), e.s_minus))
        .collect();
    let diffs: Vec<f64> = glued.values.iter().map(|(s, v)| single[s] - v).collect();
    ensure(diffs.len() == fixtures::ROD_STATES, || "glued atlas misses states".into())?;
    let spread =
        diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - diffs.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(spread <= 4.0 * tol, || format!("single-meter spread {spread}"))?;
    Ok(format!(
        "offsets exact, loop residual {:.12}, rod constant {:.4} with spread {spread:.1e} (bound {})",
        bad.worst(),
        diffs[0],
        4.0 * tol
    ))
}

fn ac8() -> Outcome {
    let cases = 1000;
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    let mut total = 0;
    let mut run = |name: &str, r: Result<(), String>| -> Result<(), String> {
        total += cases;
        r.map_err(|e| format!("{name}: {e}"))
    };
    run("idempotence", runner.run(&common::edges(6), |e| common::check_idempotent(&e)).map_err(|e| e.to_string()))?;
    run(
        "monotonicity",
        runner
            .run(&(common::edges(5), common::edges(1)), |(e, extra)| match extra.first() {
                Some(&x) => common::check_monotone(&e, x),
                None => Ok(()),
            })
            .map_err(|e| e.to_string()),
    )?;
    run("preorder", runner.run(&common::edges(6), |e| common::check_preorder(&e)).map_err(|e| e.to_string()))?;
    run("cancellation", runner.run(&common::edges(6), |e| common::check_cancellation(&e)).map_err(|e| e.to_string()))?;
    run(
        "canonical order",
        runner
            .run(&common::parts_and_shuffle(), |(p, q)| common::check_canonical_order(&p, &q))
            .map_err(|e| e.to_string()),
    )?;
    Ok(format!("{total} randomized cases over 5 properties, 0 violations"))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 8] = [
        ("AC1", "canonical entropy matches affine normalization", ac1),
        ("AC2", "sup/inf forms agree", ac2),
        ("AC3", "brute-force oracle equals engine", ac3),
        ("AC4", "meter laws on the joint-potential fixture", ac4),
        ("AC5", "bound laws without comparability", ac5),
        ("AC6", "non-equilibrium bounds", ac6),
        ("AC7", "chart calibration and loops", ac7),
        ("AC8", "structural properties", ac8),
    ];
    let mut failed = 0;
    for (id, what, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {id} {what}: {detail} [{:.2?}]", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL {id} {what}: {why}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
