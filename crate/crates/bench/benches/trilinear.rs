use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use fpp_bench::inputs;
use fpp_core::dyadic::{apply_model, ModelConfig, ModelKind};
use fpp_core::grid::maximal_function;
use fpp_core::multilinear::{apply_trilinear, Method};
use fpp_core::symbols::lookup;
use fpp_core::TorusGrid;

fn trilinear(c: &mut Criterion) {
    let m = lookup("flag(homog0,homog0)").unwrap();
    let mut group = c.benchmark_group("trilinear");
    group.sample_size(10);
    for n in [32usize, 64] {
        let [f1, f2, f3] = inputs(n, 1);
        group.bench_with_input(BenchmarkId::new("naive", n), &n, |b, _| {
            b.iter(|| apply_trilinear(&m, &f1, &f2, &f3, Method::Naive).unwrap())
        });
    }
    for n in [32usize, 64, 256, 1024] {
        let [f1, f2, f3] = inputs(n, 1);
        group.bench_with_input(BenchmarkId::new("separable", n), &n, |b, _| {
            b.iter(|| apply_trilinear(&m, &f1, &f2, &f3, Method::Separable).unwrap())
        });
    }
    group.finish();
}

fn model(c: &mut Criterion) {
    let mut group = c.benchmark_group("model");
    group.sample_size(10);
    for n in [256usize, 1024] {
        let g = TorusGrid::new(n).unwrap();
        let cfg = ModelConfig::standard(g, ModelKind::T1, -6, -2, 1, None).unwrap();
        let [f1, f2, f3] = inputs(n, 2);
        group.bench_with_input(BenchmarkId::new("T1", n), &n, |b, _| {
            b.iter(|| apply_model(&cfg, &f1, &f2, &f3).unwrap())
        });
    }
    group.finish();
}

fn maximal(c: &mut Criterion) {
    let mut group = c.benchmark_group("maximal");
    for n in [256usize, 1024] {
        let [f, _, _] = inputs(n, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| maximal_function(black_box(&f)))
        });
    }
    group.finish();
}

criterion_group!(benches, trilinear, model, maximal);
criterion_main!(benches);
