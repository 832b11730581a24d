use corrugated_bench::{coupled_domain, neumann_pencil, unit_square};
use corrugated_core::eigen::ldlt::SymbolicPencil;
use corrugated_core::eigen::ordering::{nested_dissection, reverse_cuthill_mckee, Graph};
use corrugated_core::eigen::{EigSolveOptions, Pencil};
use corrugated_core::limit::{FixedPointOptions, LimitSolver};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bench_mesh(c: &mut Criterion) {
    let mut g = c.benchmark_group("mesh");
    for eps in [0.25, 0.125, 0.0625] {
        g.bench_with_input(BenchmarkId::new("coupled", eps), &eps, |b, &eps| {
            b.iter(|| coupled_domain(black_box(eps), 1.0 / 64.0))
        });
    }
    g.finish();
}

fn bench_assembly(c: &mut Criterion) {
    let mesh = unit_square(128);
    c.bench_function("assemble/unit_square_128", |b| b.iter(|| neumann_pencil(black_box(&mesh))));
}

fn bench_factor(c: &mut Criterion) {
    let mut g = c.benchmark_group("ldlt");
    for n in [32usize, 64, 128] {
        let (k, m) = neumann_pencil(&unit_square(n));
        let symbolic = SymbolicPencil::new(&[&k, &m]);
        g.bench_with_input(BenchmarkId::new("symbolic", n), &n, |b, _| {
            b.iter(|| SymbolicPencil::new(black_box(&[&k, &m])))
        });
        g.bench_with_input(BenchmarkId::new("numeric", n), &n, |b, _| {
            b.iter(|| symbolic.factor(&[&k, &m], &[1.0, -black_box(10.3)]).unwrap().inertia())
        });
    }
    g.finish();
}

fn bench_ordering(c: &mut Criterion) {
    let (k, _) = neumann_pencil(&unit_square(128));
    let mut edges = Vec::new();
    k.for_each_full(|i, j, _| {
        if i < j {
            edges.push((i, j));
        }
    });
    let graph = Graph::from_edges(k.dim(), edges);
    let mut g = c.benchmark_group("ordering/unit_square_128");
    g.bench_function("nested_dissection", |b| b.iter(|| nested_dissection(black_box(&graph))));
    g.bench_function("reverse_cuthill_mckee", |b| b.iter(|| reverse_cuthill_mckee(black_box(&graph))));
    g.finish();
}

fn bench_eigs(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigs");
    g.sample_size(10);
    let (k, m) = neumann_pencil(&unit_square(64));
    g.bench_function("interval_0_30/unit_square_64", |b| {
        b.iter(|| {
            Pencil::new(&k, &m, EigSolveOptions::default())
                .unwrap()
                .eigs_in_interval(-1e-8, 30.0)
                .unwrap()
        })
    });
    let (k, m) = neumann_pencil(&coupled_domain(0.125, 1.0 / 64.0));
    g.bench_function("interval_0_30/coupled_eps_0.125", |b| {
        b.iter(|| {
            Pencil::new(&k, &m, EigSolveOptions::default())
                .unwrap()
                .eigs_in_interval(-1e-8, 30.0)
                .unwrap()
        })
    });
    g.finish();
}

fn bench_limit(c: &mut Criterion) {
    let mut g = c.benchmark_group("limit");
    g.sample_size(10);
    let solver = LimitSolver::new(&unit_square(32), EigSolveOptions::default()).unwrap();
    g.bench_function("fixed_point/unit_square_32", |b| {
        b.iter(|| {
            solver
                .spectrum_aqr_fixed_point(1.6, 0.25, 30.0, &FixedPointOptions::default())
                .unwrap()
        })
    });
    g.bench_function("block/unit_square_32", |b| {
        b.iter(|| solver.spectrum_aqr_block(1.6, 0.25, 30.0, 1e-2).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bench_mesh, bench_assembly, bench_ordering, bench_factor, bench_eigs, bench_limit);
criterion_main!(benches);
