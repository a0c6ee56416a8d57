use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cusp_core::expr::Expr;
use cusp_core::linalg::{eig_small, ComplexMatrix};
use num_complex::Complex64;

fn sample_matrix(n: usize) -> ComplexMatrix {
    let data = (0..n * n)
        .map(|k| {
            let t = k as f64 + 1.0;
            Complex64::new((t * 0.37).sin(), (t * 0.91).cos())
        })
        .collect();
    ComplexMatrix::new(n, n, data).unwrap()
}

fn eig(c: &mut Criterion) {
    let mut group = c.benchmark_group("eig_small");
    for n in [2, 4, 8] {
        let a = sample_matrix(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| b.iter(|| eig_small(black_box(a), 1e-10)));
    }
    group.finish();
}

fn expressions(c: &mut Criterion) {
    let src = "x^2 + y^2 - 0.25 + i*y*exp(-abs(x)) / (1 + sqrt(x*x + 1))";
    c.bench_function("parse", |b| b.iter(|| Expr::parse(black_box(src))));
    let e = Expr::parse(src).unwrap();
    c.bench_function("eval", |b| b.iter(|| e.eval(black_box(0.3), black_box(-0.7))));
}

criterion_group!(benches, eig, expressions);
criterion_main!(benches);
