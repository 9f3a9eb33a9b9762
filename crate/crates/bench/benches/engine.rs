use std::hint::black_box;

use adiabat_bench::fixtures;
use adiabat_core::meter::Coverage;
use adiabat_core::normal::{EntropyFn, NormalSystem, ReferencePair};
use adiabat_core::{StateId, StateRef};
use criterion::{criterion_group, criterion_main, Criterion};

fn closure(c: &mut Criterion) {
    let stability = fixtures::stability();
    c.bench_function("close/stability", |b| b.iter(|| black_box(stability.close().unwrap())));
    let model = fixtures::potential_model(fixtures::POTENTIAL_METER_HI, &Coverage::default()).unwrap();
    let mut group = c.benchmark_group("close");
    group.sample_size(10);
    group.bench_function("potential-basic", |b| b.iter(|| black_box(model.close().unwrap())));
    group.finish();
}

fn meter(c: &mut Criterion) {
    let setup = fixtures::potential_meter(fixtures::POTENTIAL_METER_HI, &Coverage::default()).unwrap();
    let b_state = StateRef::named("sys", "b");
    c.bench_function("meter/measure", |b| b.iter(|| black_box(setup.measure(&b_state).unwrap())));
    let rod = fixtures::rod_large_meter().unwrap();
    c.bench_function("meter/rod-table", |b| b.iter(|| black_box(rod.measure_all().unwrap())));
}

fn canonical(c: &mut Criterion) {
    let sys = NormalSystem::interval("n", 0.0, 4.0, 0.01, EntropyFn::log1p(1.0)).unwrap();
    let refs = ReferencePair::new(&sys, StateId::coord(0.5), StateId::coord(2.0)).unwrap();
    let x = StateId::coord(3.3);
    c.bench_function("canonical/log1p", |b| b.iter(|| black_box(sys.canonical_entropy(&refs, &x, 1e-6).unwrap())));
}

fn atlas(c: &mut Criterion) {
    let atlas = fixtures::rod_charts().unwrap();
    c.bench_function("atlas/calibrate-and-glue", |b| {
        b.iter(|| {
            let cal = atlas.calibrate("A", 0.01).unwrap();
            let loops = atlas.check_loops("A", 0.01).unwrap();
            black_box(atlas.glue_global(&cal, &loops).unwrap())
        })
    });
}

criterion_group!(benches, closure, meter, canonical, atlas);
criterion_main!(benches);
