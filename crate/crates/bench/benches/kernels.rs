//! Microbenchmarks for the numerical kernels on the hot paths: special
//! functions, prior normalization, the weighted least-squares core, the
//! divergence ladder, and a short end-to-end chain.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::hint::black_box;
use treg_core::gibbs::{run_chain, ChainConfig};
use treg_core::priors::{nu_prior_normalizer, PriorKind, PriorSpec};
use treg_core::propriety::{divergence_diagnostic, truncated_kernel_integral};
use treg_core::regression::{weighted_regression, Dataset, MixingVector};
use treg_core::specfun::trigamma;

fn synthetic(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
    let beta = DVector::from_fn(p, |i, _| 0.5 + i as f64);
    let noise = DVector::from_fn(n, |_, _| {
        let z: f64 = rng.sample(StandardNormal);
        0.3 * z
    });
    let y = &x * &beta + noise;
    Dataset::new(y, x).expect("valid synthetic dataset")
}

fn bench_trigamma(c: &mut Criterion) {
    let points: Vec<f64> = (1..=100).map(|i| 0.07 * i as f64).collect();
    c.bench_function("trigamma/sweep_100", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for &x in &points {
                acc += trigamma(black_box(x)).unwrap();
            }
            acc
        })
    });
}

fn bench_normalizer(c: &mut Criterion) {
    let mut group = c.benchmark_group("nu_prior_normalizer");
    for (label, kind, p) in [
        ("independence", PriorKind::IndependenceJeffreys, 1),
        ("jeffreys_rule_p2", PriorKind::JeffreysRule, 2),
    ] {
        group.bench_function(label, |b| {
            b.iter(|| nu_prior_normalizer(black_box(&kind), p, 1e-9).unwrap())
        });
    }
    group.finish();
}

fn bench_weighted_regression(c: &mut Criterion) {
    let dataset = synthetic(200, 3, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let lambda = MixingVector::new(DVector::from_fn(dataset.n(), |_, _| {
        0.1 + rng.gen::<f64>()
    }))
    .unwrap();
    c.bench_function("weighted_regression/n200_p3", |b| {
        b.iter(|| weighted_regression(black_box(&dataset), black_box(&lambda)).unwrap())
    });
}

fn bench_divergence_ladder(c: &mut Criterion) {
    let mut group = c.benchmark_group("truncated_kernel");
    for (label, args) in [
        ("incomplete_gamma", (0.4, 0.5, 1e-10, 1.0)),
        ("log_substitution", (-0.3, 0.5, 1e-10, 1.0)),
        ("closed_form", (-0.3, 0.0, 1e-10, 1.0)),
    ] {
        let (ce, r, eps, t) = args;
        group.bench_with_input(BenchmarkId::from_parameter(label), &args, |b, _| {
            b.iter(|| truncated_kernel_integral(black_box(ce), r, eps, t).unwrap())
        });
    }
    group.finish();

    c.bench_function("divergence_diagnostic/two_probes", |b| {
        b.iter(|| divergence_diagnostic(black_box(&[0.05, 0.5]), 30, 2, 2.0, 0.0).unwrap())
    });
}

fn bench_chain(c: &mut Criterion) {
    let dataset = synthetic(60, 2, 3);
    let prior = PriorSpec::independence_jeffreys(2).unwrap();
    let config = ChainConfig::new(2000, 500, 5, 99);
    let mut group = c.benchmark_group("run_chain");
    group.sample_size(10);
    group.bench_function("n60_p2_2k_scans", |b| {
        b.iter(|| run_chain(black_box(&dataset), &prior, &config).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_trigamma,
    bench_normalizer,
    bench_weighted_regression,
    bench_divergence_ladder,
    bench_chain
);
criterion_main!(benches);
