//! Sequential against parallel exact search.
//!
//! `thread_budget = 1` takes the sequential path in every build. Building
//! with `--no-default-features` also makes the exhaustive oracle sequential,
//! so comparing the `oracle` group across the two builds measures rayon there.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tap_core::generate::{generate, small, GenSpec};
use tap_core::model::build;
use tap_core::solver::{brute_force, domain_size, solve, SolveConfig};

fn threads() -> usize {
    std::thread::available_parallelism().map_or(4, |n| n.get()).clamp(2, 8)
}

fn exact_search(c: &mut Criterion) {
    let instance = generate(&GenSpec::new(8, 6, 3, 0.9, 2)).expect("valid spec");
    let ir = build(&instance);
    let mut group = c.benchmark_group("exact_8x6x3");
    group.sample_size(10);
    for budget in [1, threads()] {
        let cfg = SolveConfig { thread_budget: budget, time_limit: 120.0, node_limit: Some(200_000), ..SolveConfig::default() };
        group.bench_with_input(BenchmarkId::new("threads", budget), &cfg, |b, cfg| b.iter(|| black_box(solve(&ir, cfg))));
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let (seed, ir) = (0..)
        .map(|seed| (seed, build(&small(seed))))
        .find(|(_, ir)| (100_000..2_000_000).contains(&domain_size(ir)))
        .expect("some small instance has a mid-sized domain");
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    let mode = if cfg!(feature = "parallel") { "parallel" } else { "sequential" };
    group.bench_function(BenchmarkId::new(mode, seed), |b| b.iter(|| black_box(brute_force(&ir, 2_000_000))));
    group.finish();
}

criterion_group!(benches, exact_search, oracle);
criterion_main!(benches);
