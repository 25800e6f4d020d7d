use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use elliptic_core::ensemble::{build_normalized, generate_sparse_elliptic};
use elliptic_core::spectral::{eigenvalues, shift, singular_values, EmpiricalMeasure};
use elliptic_core::stats::levy_distance;
use elliptic_core::stieltjes::{log_integral_nu_z, solve_state, QMatrix, DEFAULT_TOLERANCE};
use elliptic_core::{AtomFamily, AtomSpec, Complex64, EnsembleConfig, Schedule, SparsitySpec};

fn config(n: usize) -> EnsembleConfig {
    EnsembleConfig::new(
        n,
        AtomSpec::new(AtomFamily::RealGaussian, 0.5, 0.0),
        SparsitySpec::new(Schedule::Power { c: 1.0, gamma: 0.5 }, 0.5),
        1,
    )
}

fn generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate");
    for n in [250, 1000] {
        let cfg = config(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            b.iter(|| generate_sparse_elliptic(black_box(cfg)).unwrap())
        });
    }
    group.finish();
}

fn spectra(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectra");
    group.sample_size(10);
    for n in [250, 500] {
        let m = build_normalized(&config(n)).unwrap();
        group.bench_with_input(BenchmarkId::new("eigenvalues", n), &m, |b, m| b.iter(|| eigenvalues(m).unwrap()));
        let shifted = shift(&m, Complex64::new(1.0, 0.0));
        group.bench_with_input(BenchmarkId::new("singular_values", n), &shifted, |b, m| {
            b.iter(|| singular_values(m).unwrap())
        });
    }
    group.finish();
}

fn stieltjes(c: &mut Criterion) {
    let q = QMatrix::new(Complex64::new(0.5, 0.2), Complex64::new(0.3, 1e-3)).unwrap();
    c.bench_function("stieltjes/solve_state", |b| b.iter(|| solve_state(black_box(&q), 0.375, DEFAULT_TOLERANCE)));
    let mut group = c.benchmark_group("stieltjes");
    group.sample_size(10);
    group.bench_function("log_integral", |b| b.iter(|| log_integral_nu_z(Complex64::new(1.0, 0.5), 0.375)));
    group.finish();
}

fn levy(c: &mut Criterion) {
    let mut counter = 0u64;
    let mut next = || {
        counter += 1;
        (elliptic_core::rng::splitmix64(counter) >> 11) as f64 / (1u64 << 53) as f64
    };
    let a = EmpiricalMeasure::new((0..2000).map(|_| next()).collect()).unwrap();
    let b = EmpiricalMeasure::new((0..2000).map(|_| next() * 1.1).collect()).unwrap();
    c.bench_function("levy/2000", |bench| bench.iter(|| levy_distance(black_box(&a), black_box(&b))));
}

criterion_group!(benches, generation, spectra, stieltjes, levy);
criterion_main!(benches);
