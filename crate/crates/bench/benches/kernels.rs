use std::hint::black_box;

use bdlab_bench::{harmonic_g, jump_field};
use bdlab_core::fields::{assemble_symmetrized_measure, Grid};
use bdlab_core::functional::evaluate_functional;
use bdlab_core::functional::mollify::Mollified;
use bdlab_core::integrands::Integrand;
use bdlab_core::rigidity2d::solve_elliptic;
use bdlab_core::symtensor::{classify_dyad, sym_dyad, SymMatrix, DEFAULT_DYAD_TOL};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn dyads(c: &mut Criterion) {
    let m = sym_dyad(&[0.3, -1.2], &[0.7, 0.4]).unwrap();
    c.bench_function("classify_dyad", |b| b.iter(|| classify_dyad(black_box(&m), DEFAULT_DYAD_TOL).unwrap()));
}

fn measures(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble_measure");
    for n in [33, 65, 129] {
        let u = jump_field(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| b.iter(|| assemble_symmetrized_measure(u).unwrap()));
    }
    g.finish();
}

fn functionals(c: &mut Criterion) {
    let area = Integrand::area(2);
    let mut g = c.benchmark_group("evaluate_functional");
    for n in [33, 65, 129] {
        let u = jump_field(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| b.iter(|| evaluate_functional(&area, u, true).unwrap()));
    }
    g.finish();
    let u = jump_field(65);
    let m = Mollified::new(&u, 0.1).unwrap();
    c.bench_function("mollified_functional/65", |b| b.iter(|| m.functional(black_box(&area))));
}

fn elliptic(c: &mut Criterion) {
    let p = SymMatrix::identity(2).scaled(2.0);
    let mut g = c.benchmark_group("solve_elliptic");
    for n in [33, 65] {
        let grid = Grid::cube(2, -1.0, 1.0, n).unwrap();
        let data = harmonic_g(&grid);
        g.bench_with_input(BenchmarkId::from_parameter(n), &(grid, data), |b, (grid, data)| {
            b.iter(|| solve_elliptic(&p, data, grid).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, dyads, measures, functionals, elliptic);
criterion_main!(benches);
