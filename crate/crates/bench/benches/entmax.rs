//! Row-normalization kernel benchmarks: bisection vs the sorting-based
//! exact solver across row lengths.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ewgsl_core::entmax::{entmax, entmax_sorted_oracle, softmax, DEFAULT_TOL};
use ewgsl_core::seeding;
use rand::Rng;

fn random_row(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeding::stream_rng(seed, 1);
    (0..len).map(|_| rng.random_range(-5.0..5.0)).collect()
}

fn bench_normalizers(c: &mut Criterion) {
    let mut group = c.benchmark_group("row_normalization");
    for len in [8usize, 64, 512] {
        let row = random_row(len, len as u64);
        group.bench_with_input(BenchmarkId::new("bisection_a15", len), &row, |b, row| {
            b.iter(|| entmax(black_box(row), 1.5, DEFAULT_TOL).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sorted_a15", len), &row, |b, row| {
            b.iter(|| entmax_sorted_oracle(black_box(row), 1.5).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("bisection_a20", len), &row, |b, row| {
            b.iter(|| entmax(black_box(row), 2.0, DEFAULT_TOL).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("softmax", len), &row, |b, row| {
            b.iter(|| softmax(black_box(row)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_normalizers);
criterion_main!(benches);
