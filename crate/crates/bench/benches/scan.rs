use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_bigint::BigUint;

use circlab::circle::{derived_frac_bound, frac_bound, DEFAULT_DEPTH_CAP};
use circlab::exact::ratio;
use circlab::membership::statistical_scan;
use circlab::witness::factor_u;
use circlab::{ArithSeq, RatioSpec};
use circlab_bench::{factorial_sparse, pow2_all_ones};

fn decomposition(c: &mut Criterion) {
    let d = ArithSeq::new(RatioSpec::linear(1).unwrap()).derived();
    c.bench_function("decompose 10^5 indices", |b| {
        b.iter(|| {
            for i in (1..=100_000u64).step_by(97) {
                black_box(d.decompose(black_box(i)).unwrap());
            }
        })
    });
}

fn enclosures(c: &mut Criterion) {
    let x = pow2_all_ones();
    let mut g = c.benchmark_group("frac_bound");
    for t in [0u64, 8, 32] {
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| frac_bound(&x, black_box(40), t).unwrap())
        });
    }
    g.finish();
    let y = factorial_sparse();
    c.bench_function("derived_frac_bound sparse", |b| {
        b.iter(|| derived_frac_bound(&y, black_box(1234), 0, DEFAULT_DEPTH_CAP).unwrap())
    });
}

fn scans(c: &mut Criterion) {
    let x = pow2_all_ones();
    let eps = ratio(1, 8);
    let mut g = c.benchmark_group("scan pow2 ones");
    g.sample_size(10);
    for n in [1_000u64, 10_000] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| statistical_scan(&x, &eps, &[n], 2, DEFAULT_DEPTH_CAP).unwrap())
        });
    }
    g.finish();
}

fn factoring(c: &mut Criterion) {
    let seq = ArithSeq::new(RatioSpec::linear(1).unwrap());
    let u = BigUint::from(3_628_800u64 * 11 * 7);
    c.bench_function("factor_u", |b| b.iter(|| factor_u(black_box(&u), &seq).unwrap()));
}

criterion_group!(benches, decomposition, enclosures, scans, factoring);
criterion_main!(benches);
