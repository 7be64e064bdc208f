use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sobolev_core::oracle::{product_ratio, random_search_lower, sample_gaussian_trial, Grid};
use sobolev_core::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn spectral_ratio(c: &mut Criterion) {
    let mut group = c.benchmark_group("product_ratio");
    group.sample_size(10);
    for (d, l, pts) in [(1, 40.0, 1 << 14), (2, 25.0, 256), (3, 18.0, 64)] {
        for (name, exec) in MODES {
            let grid = Grid::new(d, l, pts).unwrap().with_execution(exec);
            let f = sample_gaussian_trial(1.0, 0.5, &grid).unwrap();
            group.bench_with_input(
                BenchmarkId::new(name, format!("d{d}_n{pts}")),
                &f,
                |b, f| b.iter(|| product_ratio(black_box(f), f, 2.0, 2.0).unwrap()),
            );
        }
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("random_search");
    group.sample_size(10);
    for (name, exec) in MODES {
        let grid = Grid::new(1, 40.0, 2048).unwrap().with_execution(exec);
        group.bench_function(name, |b| {
            b.iter(|| random_search_lower(1.0, 1.0, 64, black_box(7), &grid).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, spectral_ratio, search);
criterion_main!(benches);
