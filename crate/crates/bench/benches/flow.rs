use std::hint::black_box;

use betaflow::flow::{integrate, invert_eta};
use betaflow::{ExactModel, Manifold, StirlingModel, Theta};
use criterion::{criterion_group, criterion_main, Criterion};

fn integration(c: &mut Criterion) {
    let s = StirlingModel::DEFAULT;
    c.bench_function("stirling_flow_t0.3", |b| {
        b.iter(|| integrate(&s, black_box(Theta { a: 2.5, b: 3.0, c: 2.0 }), 0.3, 1e-10, 1e-12).unwrap().len())
    });
    c.bench_function("exact_flow_t0.08", |b| {
        b.iter(|| integrate(&ExactModel, black_box(Theta { a: 2.0, b: 3.0, c: 4.0 }), 0.08, 1e-10, 1e-12).unwrap().len())
    });
}

fn newton(c: &mut Criterion) {
    let target = ExactModel.eta(Theta { a: 2.0, b: 3.0, c: 4.0 }).unwrap();
    c.bench_function("invert_eta_exact", |b| {
        b.iter(|| invert_eta(&ExactModel, black_box(target), None, 1e-12, 100).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("fisher_mc");
    group.sample_size(10);
    group.bench_function("n=20000", |b| {
        b.iter(|| ExactModel.fisher_mc(Theta { a: 2.0, b: 3.0, c: 4.0 }, black_box(0), 20_000).unwrap())
    });
    group.finish();
}

criterion_group!(benches, integration, newton, sampling);
criterion_main!(benches);
