use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use svie_core::quadrature::{weights_closed_form, weights_contour, ContourOptions};
use svie_core::reference::{mittag_leffler, MittagLefflerTable};
use svie_core::KernelSpec;

fn weights(c: &mut Criterion) {
    let kernel = KernelSpec::tempered(1.5, 1.0).unwrap();
    let mut group = c.benchmark_group("cq_weights");
    for n in [256usize, 4096] {
        group.bench_with_input(BenchmarkId::new("closed_form", n), &n, |b, &n| {
            b.iter(|| weights_closed_form(&kernel, black_box(1.0 / n as f64), n).unwrap())
        });
    }
    group.bench_function("contour_512", |b| {
        b.iter(|| weights_contour(&kernel, black_box(0.1), 512, ContourOptions::default()).unwrap())
    });
    group.finish();
}

fn mittag_leffler_branches(c: &mut Criterion) {
    let mut group = c.benchmark_group("mittag_leffler");
    for x in [-2.0, -50.0, -5000.0] {
        group.bench_with_input(BenchmarkId::new("direct", x), &x, |b, &x| {
            b.iter(|| mittag_leffler(1.5, black_box(x)).unwrap())
        });
    }
    let table = MittagLefflerTable::new(1.5).unwrap();
    group.bench_function("table_eval", |b| b.iter(|| table.eval(black_box(50.0))));
    group.sample_size(10);
    group.bench_function("table_build", |b| b.iter(|| MittagLefflerTable::new(black_box(1.5)).unwrap()));
    group.finish();
}

criterion_group!(benches, weights, mittag_leffler_branches);
criterion_main!(benches);
