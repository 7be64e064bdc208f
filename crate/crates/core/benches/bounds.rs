use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sobolev_core::bounds::{best_bounds, BoundOptions, BoundQuery};
use sobolev_core::fourier_lb::{fourier_lower_scan, ScanGrid};
use sobolev_core::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn best_bounds_modes(c: &mut Criterion) {
    let mut group = c.benchmark_group("best_bounds");
    group.sample_size(10);
    for (n, a, d) in [(2.0, 2.0, 2), (2.0, 2.0, 3), (1.5, 2.0, 2)] {
        let q = BoundQuery::new(n, a, d).unwrap();
        for (name, exec) in MODES {
            let opts = BoundOptions {
                exec,
                fourier_scan: true,
                ..BoundOptions::default()
            };
            group.bench_with_input(
                BenchmarkId::new(name, format!("{n},{a},{d}")),
                &q,
                |b, q| b.iter(|| best_bounds(black_box(q), &opts).unwrap()),
            );
        }
    }
    group.finish();
}

fn fourier_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("fourier_scan");
    let grid = ScanGrid::log_spaced(101, 4.0);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| fourier_lower_scan(black_box(20.0), 2.0, 2, &grid, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, best_bounds_modes, fourier_scan);
criterion_main!(benches);
