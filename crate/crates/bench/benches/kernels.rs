use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use woldlab_core::numlin::{c64, matmul, orthonormalize, ComplexMatrix};
use woldlab_core::pairs::{construct_example, verdict_battery};
use woldlab_core::wold::wold_split;
use woldlab_core::{GradedOperator, SchurSymbol};

/// Deterministic dense matrix with no special structure.
fn dense(n: usize, m: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, m, |i, j| {
        let t = (i * 131 + j * 71 + 7) as f64;
        c64((t * 0.37).sin(), (t * 0.11).cos())
    })
}

fn linear_algebra(c: &mut Criterion) {
    let mut g = c.benchmark_group("numlin");
    for n in [64, 128, 256] {
        let a = dense(n, n);
        g.bench_with_input(BenchmarkId::new("orthonormalize", n), &a, |b, a| {
            b.iter(|| orthonormalize(a, 1e-12).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("matmul", n), &a, |b, a| b.iter(|| matmul(a, a)));
    }
    g.finish();
}

fn wold(c: &mut Criterion) {
    let mut g = c.benchmark_group("wold_split");
    for top in [32, 64, 128] {
        let s = GradedOperator::shift_at(2, top);
        g.bench_with_input(BenchmarkId::from_parameter(top), &s, |b, s| b.iter(|| wold_split(s, top).unwrap()));
    }
    g.finish();
}

fn verdict(c: &mut Criterion) {
    let phi = SchurSymbol::scalar_polynomial(&[c64(0.5, 0.0), c64(0.5, 0.0)]).unwrap();
    let mut g = c.benchmark_group("verdict_battery");
    g.sample_size(10);
    for degree in [16, 32] {
        let pair = construct_example(&phi, degree).unwrap().pair;
        g.bench_with_input(BenchmarkId::from_parameter(degree), &pair, |b, p| {
            b.iter(|| verdict_battery(p, &[], 3).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, linear_algebra, wold, verdict);
criterion_main!(benches);
