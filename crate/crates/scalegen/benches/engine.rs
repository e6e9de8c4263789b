//! Benchmarks for the Monte-Carlo engine and the statistics hot paths,
//! comparing the rayon backend against the sequential fallback. Both backends
//! produce bit-identical populations; the benches measure the speedup only.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use scalegen::costs::{scale_harmonicity, HarmonicityTemplate};
use scalegen::exec::Parallelism;
use scalegen::generator::{generate_population, Model, ModelConfig};
use scalegen::stats::{bootstrap_ci_with, kde, uniform_grid};

fn modes() -> Vec<(&'static str, Parallelism)> {
    let mut v = vec![("sequential", Parallelism::Sequential)];
    if cfg!(feature = "parallel") {
        v.push(("rayon", Parallelism::Rayon));
    }
    v
}

fn bench_min_generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate_min_n7");
    group.sample_size(10);
    for (name, mode) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                let mut cfg = ModelConfig::new(Model::Min, 7, 42);
                cfg.target_accepted = 2000;
                cfg.parallelism = mode;
                let report = generate_population(cfg).unwrap();
                black_box(report.accepted.len())
            });
        });
    }
    group.finish();
}

fn bench_har_generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate_har_n7_beta9p5");
    group.sample_size(10);
    for (name, mode) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                let mut cfg = ModelConfig::new(Model::Har, 7, 42);
                cfg.beta = 9.5;
                cfg.target_accepted = 200;
                cfg.parallelism = mode;
                let report = generate_population(cfg).unwrap();
                black_box(report.attempts)
            });
        });
    }
    group.finish();
}

fn bench_bootstrap(c: &mut Criterion) {
    let samples: Vec<f64> = (0..2000).map(|k| (k as f64 * 0.7).sin() * 100.0 + 600.0).collect();
    let stat = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let mut group = c.benchmark_group("bootstrap_mean_1000");
    group.sample_size(10);
    for (name, mode) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| {
                black_box(bootstrap_ci_with(&samples, stat, 1000, 0.95, 7, mode).unwrap())
            });
        });
    }
    group.finish();
}

fn bench_scoring(c: &mut Criterion) {
    let tpl = HarmonicityTemplate::build(20.0).unwrap();
    let et = [200.0, 200.0, 100.0, 200.0, 200.0, 200.0, 100.0];
    c.bench_function("scale_harmonicity_n7", |b| {
        b.iter(|| black_box(scale_harmonicity(black_box(&et), &tpl, 1.0)))
    });
    let samples: Vec<f64> = (0..3000).map(|k| 100.0 + (k % 1000) as f64).collect();
    let grid = uniform_grid(0.0, 1200.0, 1.0);
    c.bench_function("kde_3000_samples_1201_grid", |b| {
        b.iter(|| black_box(kde(&samples, &grid).unwrap().mass[600]))
    });
}

criterion_group!(
    benches,
    bench_min_generation,
    bench_har_generation,
    bench_bootstrap,
    bench_scoring
);
criterion_main!(benches);
