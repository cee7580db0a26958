use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use svie_bench::{problem, scheme};
use svie_core::experiments::SpaceKind;
use svie_core::reference::{exact_strong_error_linear, ReferenceModes};
use svie_core::scheme::{DriftSpec, Simulator};

fn simulate(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    group.sample_size(20);
    let drift = DriftSpec::ScaledSine { c: 1.0 };
    for (space, name) in [(SpaceKind::Spectral, "spectral"), (SpaceKind::Fem, "fem")] {
        for n in [128usize, 512] {
            let (config, table) = scheme(space, 64, n, drift).unwrap();
            let sim = Simulator::new(&config).unwrap();
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| sim.simulate(black_box(&table), &[n]).unwrap())
            });
        }
    }
    group.finish();
}

fn exact_strong(c: &mut Criterion) {
    let linear = problem(256, DriftSpec::Zero).linear().unwrap();
    let mut group = c.benchmark_group("exact_strong_error");
    group.sample_size(10);
    group.bench_function("modes64_steps1024", |b| {
        b.iter(|| {
            exact_strong_error_linear(&linear, black_box(1024), 64, ReferenceModes { modes: 64, analytic_tail: false })
                .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, simulate, exact_strong);
criterion_main!(benches);
