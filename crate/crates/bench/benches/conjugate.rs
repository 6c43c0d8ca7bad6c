//! Legendre transform: the linear-time hull sweep against the quadratic
//! brute-force sup, in one and two dimensions.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use riesz_bench::{bowl_2d, quadratic_cone_1d};
use riesz_core::GridSpec;

fn bench_conjugate_1d(c: &mut Criterion) {
    let mut group = c.benchmark_group("legendre_1d");
    for nodes in [257usize, 1025, 4097] {
        let phi = quadratic_cone_1d(4.0, nodes);
        let dual = GridSpec::symmetric(1, 6.0, nodes).unwrap();
        group.bench_with_input(BenchmarkId::new("sweep", nodes), &nodes, |b, _| {
            b.iter(|| black_box(phi.legendre_transform(&dual).unwrap()))
        });
        if nodes <= 1025 {
            group.bench_with_input(BenchmarkId::new("brute", nodes), &nodes, |b, _| {
                b.iter(|| black_box(phi.conjugate_brute(&dual).unwrap()))
            });
        }
    }
    group.finish();
}

fn bench_conjugate_2d(c: &mut Criterion) {
    let mut group = c.benchmark_group("legendre_2d");
    group.sample_size(20);
    for nodes in [33usize, 65, 129] {
        let phi = bowl_2d(3.0, nodes);
        let dual = GridSpec::symmetric(2, 5.0, nodes).unwrap();
        group.bench_with_input(BenchmarkId::new("sweep", nodes), &nodes, |b, _| {
            b.iter(|| black_box(phi.legendre_transform(&dual).unwrap()))
        });
        if nodes <= 65 {
            group.bench_with_input(BenchmarkId::new("brute", nodes), &nodes, |b, _| {
                b.iter(|| black_box(phi.conjugate_brute(&dual).unwrap()))
            });
        }
    }
    group.finish();
}

fn bench_biconjugate(c: &mut Criterion) {
    let phi = quadratic_cone_1d(4.0, 1025);
    c.bench_function("biconjugate_1d_1025", |b| {
        b.iter(|| black_box(phi.biconjugate().unwrap()))
    });
}

criterion_group!(benches, bench_conjugate_1d, bench_conjugate_2d, bench_biconjugate);
criterion_main!(benches);
