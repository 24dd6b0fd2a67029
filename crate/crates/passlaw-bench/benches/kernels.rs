//! Criterion benchmarks for the numerical kernels on the hot paths: special
//! functions, compound PMF cells, likelihood evaluation, curve estimation,
//! and the end-to-end MLE.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use passlaw::compound::{
    fit_mle, ln_probability_no_success, neg_log_likelihood, scaled_beta_binomial_log_pmf,
    scaled_kumaraswamy_binomial_log_pmf, CompoundFamily, CompoundKind, CompoundParams, FitConfig,
};
use passlaw::distributions::DistributionSpec;
use passlaw::estimators::{aggregate_pass_curve, default_k_grid, pass_at_k_unbiased};
use passlaw::specfun::{ln_beta, ln_gamma};
use passlaw_bench::synthetic_fixture;

fn params() -> CompoundParams {
    CompoundParams {
        alpha: 0.35,
        beta: 2.0,
        scale: 0.2,
    }
}

fn special_functions(c: &mut Criterion) {
    c.bench_function("ln_gamma/0.35", |b| {
        b.iter(|| ln_gamma(black_box(0.35)).unwrap())
    });
    c.bench_function("ln_beta/0.35_2002.0", |b| {
        b.iter(|| ln_beta(black_box(0.35), black_box(2002.0)).unwrap())
    });
}

fn compound_pmf_cells(c: &mut Criterion) {
    let p = params();
    c.bench_function("scaled_beta_binomial_log_pmf/n100_x3", |b| {
        b.iter(|| scaled_beta_binomial_log_pmf(black_box(3), black_box(100), &p).unwrap())
    });
    c.bench_function("scaled_kumaraswamy_binomial_log_pmf/n100_x3", |b| {
        b.iter(|| scaled_kumaraswamy_binomial_log_pmf(black_box(3), black_box(100), &p).unwrap())
    });
    c.bench_function("ln_probability_no_success/n10000", |b| {
        b.iter(|| ln_probability_no_success(black_box(10_000), &p).unwrap())
    });
}

fn estimator_kernels(c: &mut Criterion) {
    c.bench_function("pass_at_k_unbiased/n10000_c37_k100", |b| {
        b.iter(|| pass_at_k_unbiased(black_box(10_000), black_box(37), black_box(100)).unwrap())
    });

    let data = synthetic_fixture(1000, 10_000);
    let grid = default_k_grid(10_000);
    c.bench_function("aggregate_pass_curve/1000x10000", |b| {
        b.iter(|| aggregate_pass_curve(black_box(&data), black_box(&grid)).unwrap())
    });
}

fn likelihood_and_fit(c: &mut Criterion) {
    let data = synthetic_fixture(1000, 10_000);
    let family = CompoundFamily {
        kind: CompoundKind::ScaledBetaBinomial,
        params: params(),
    };
    c.bench_function("neg_log_likelihood/sbb_1000x10000", |b| {
        b.iter(|| neg_log_likelihood(black_box(&data), black_box(&family)).unwrap())
    });

    let small = synthetic_fixture(100, 1000);
    let mut group = c.benchmark_group("fit_mle");
    group.sample_size(10);
    group.bench_function("sbb_100x1000", |b| {
        b.iter(|| {
            fit_mle(
                black_box(&small),
                CompoundKind::ScaledBetaBinomial,
                &FitConfig::default(),
            )
            .unwrap()
        })
    });
    group.finish();
}

fn quadrature_curves(c: &mut Criterion) {
    let latent = DistributionSpec::ScaledKumaraswamy {
        alpha: 0.35,
        beta: 2.0,
        scale: 0.2,
    };
    c.bench_function("expected_pass_at_k/skuma_k1e5", |b| {
        b.iter(|| latent.expected_pass_at_k(black_box(100_000)).unwrap())
    });
}

criterion_group!(
    benches,
    special_functions,
    compound_pmf_cells,
    estimator_kernels,
    likelihood_and_fit,
    quadrature_curves
);
criterion_main!(benches);
