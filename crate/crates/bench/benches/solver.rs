use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use svie_bench::{example_set, fixed_noise, grid};
use svie_core::{direct_recursion, ensemble_simulate, picard_solve};

fn bench_direct(c: &mut Criterion) {
    let set = example_set();
    let mut group = c.benchmark_group("direct_recursion");
    for steps in [64, 128, 256, 512] {
        let noise = fixed_noise(&set, steps);
        group.bench_with_input(BenchmarkId::from_parameter(steps), &noise, |b, noise| {
            b.iter(|| direct_recursion(&set, black_box(noise)).unwrap())
        });
    }
    group.finish();
}

fn bench_picard(c: &mut Criterion) {
    let set = example_set();
    let mut group = c.benchmark_group("picard_solve");
    for steps in [32, 64, 128] {
        let noise = fixed_noise(&set, steps);
        group.bench_with_input(BenchmarkId::from_parameter(steps), &noise, |b, noise| {
            b.iter(|| picard_solve(&set, black_box(noise), 0.0, steps + 1).unwrap())
        });
    }
    group.finish();
}

fn bench_ensemble(c: &mut Criterion) {
    let set = example_set();
    let g = grid(128);
    let mut group = c.benchmark_group("ensemble_simulate");
    group.sample_size(10);
    for paths in [100, 1000] {
        group.bench_with_input(BenchmarkId::from_parameter(paths), &paths, |b, &paths| {
            b.iter(|| ensemble_simulate(&set, &g, paths, black_box(7)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_direct, bench_picard, bench_ensemble);
criterion_main!(benches);
