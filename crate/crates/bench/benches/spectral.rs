use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sepcov_core::spectral::{exact_exceedance, largest_eigenvalue, GeneratorOp, StateSpace};
use sepcov_core::*;

fn cycle(m: u32) -> QuotientGraph {
    QuotientGraph::new(&TowerSpec::integer_lattice(1, 2).unwrap(), m, TowerLimits::default()).unwrap()
}

fn potential(g: &QuotientGraph) -> Vec<f64> {
    TheoremFunctional::new(VertexBundle::neighbor_product(g.spec()).unwrap(), 1, 2).unwrap().tabulate(g)
}

fn top_eigenvalue(c: &mut Criterion) {
    let mut group = c.benchmark_group("largest eigenvalue");
    group.sample_size(10);
    let g = cycle(3);
    let rate = JumpRate::constant(g.spec(), 1.0).unwrap();
    let v = potential(&g);
    let op = GeneratorOp::new(&g, &rate, 16.0, StateSpace::full(8).unwrap()).unwrap().tilted(0.5, &v).unwrap();
    group.bench_function(BenchmarkId::new("full", 8), |b| b.iter(|| largest_eigenvalue(black_box(&op)).unwrap()));
    let spec = TowerSpec::integer_lattice(2, 2).unwrap();
    let torus = QuotientGraph::new(&spec, 2, TowerLimits::default()).unwrap();
    let rate = JumpRate::constant(&spec, 1.0).unwrap();
    let v = potential(&torus);
    let op = GeneratorOp::new(&torus, &rate, 4.0, StateSpace::sector(16, 4).unwrap()).unwrap().tilted(0.5, &v).unwrap();
    group.bench_function(BenchmarkId::new("4-particle sector", 16), |b| b.iter(|| largest_eigenvalue(black_box(&op)).unwrap()));
    group.finish();
}

fn path_space(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact exceedance");
    group.sample_size(10);
    let g = cycle(3);
    let rate = JumpRate::constant(g.spec(), 1.0).unwrap();
    let v = potential(&g);
    group.bench_function("8 sites", |b| {
        b.iter(|| exact_exceedance(&g, &rate, 16.0, black_box(&v), 0.5, 0.25).unwrap())
    });
    group.finish();
}

criterion_group!(benches, top_eigenvalue, path_space);
criterion_main!(benches);
