use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ifqaoa_core::diagonals::{brute_force_linear, DiagonalTables, Method, TableOptions};
use ifqaoa_core::engine::{self, EvolveMode, QaoaParams};
use ifqaoa_core::instances::{generate_real, to_integer, to_problem};
use ifqaoa_core::rng::SplitMix64;
use ifqaoa_core::theta::build_theta_table;

fn tables(n: usize, method: Method) -> DiagonalTables {
    let inst = to_integer(&generate_real(n, 7));
    DiagonalTables::build(&to_problem(&inst), method, &TableOptions::default()).unwrap()
}

fn params(p: usize) -> QaoaParams {
    let mut rng = SplitMix64::new(3);
    QaoaParams::new(
        (0..p).map(|_| -rng.next_open01() * 0.5).collect(),
        (0..p).map(|_| rng.next_open01() * 0.5).collect(),
    )
    .unwrap()
}

fn bench_brute_force(c: &mut Criterion) {
    let mut rng = SplitMix64::new(11);
    let coeffs: Vec<f64> = (0..20).map(|_| rng.next_open01()).collect();
    c.bench_function("brute_force_linear_n20", |b| {
        b.iter(|| brute_force_linear(black_box(&coeffs), 1.0).unwrap())
    });
}

fn bench_theta_table(c: &mut Criterion) {
    c.bench_function("theta_table_m12_s3", |b| {
        b.iter(|| build_theta_table(black_box(12), 3).unwrap())
    });
}

fn bench_evolve_exact(c: &mut Criterion) {
    let t = tables(14, Method::IndicatorExact);
    let p = params(8);
    c.bench_function("evolve_exact_n14_p8", |b| {
        b.iter(|| engine::evolve(black_box(&t), &p, EvolveMode::Exact).unwrap())
    });
}

fn bench_evolve_approx(c: &mut Criterion) {
    let t = tables(14, Method::IndicatorApprox);
    let table = build_theta_table(8, 3).unwrap();
    let theta: Vec<f64> = t.g[0].iter().map(|&g| table.lookup(g)).collect();
    let p = params(8);
    c.bench_function("evolve_approx_n14_p8_m8", |b| {
        b.iter(|| {
            engine::evolve(
                black_box(&t),
                &p,
                EvolveMode::Approximate { theta_vals: &theta },
            )
            .unwrap()
        })
    });
}

fn bench_gradient(c: &mut Criterion) {
    let t = tables(12, Method::IndicatorExact);
    let p = params(8);
    c.bench_function("gradient_exact_n12_p8", |b| {
        b.iter(|| engine::value_and_gradient(black_box(&t), &p, EvolveMode::Exact).unwrap())
    });
}

fn bench_table_build(c: &mut Criterion) {
    let inst = to_integer(&generate_real(16, 5));
    let problem = to_problem(&inst);
    c.bench_function("diagonal_tables_slack_n16", |b| {
        b.iter(|| {
            DiagonalTables::build(
                black_box(&problem),
                Method::SlackPenalty,
                &TableOptions::default(),
            )
            .unwrap()
        })
    });
}

criterion_group!(
    kernels,
    bench_brute_force,
    bench_theta_table,
    bench_evolve_exact,
    bench_evolve_approx,
    bench_gradient,
    bench_table_build,
);
criterion_main!(kernels);
