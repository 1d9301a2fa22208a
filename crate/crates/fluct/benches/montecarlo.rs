//! Data-parallel vs sequential execution of the path samplers.
//!
//! With the default `parallel` feature the shard map runs on rayon; pinning
//! a one-thread pool gives the sequential baseline on the same code path
//! (and matches what the `--no-default-features` build does). Results are
//! bit-identical either way; only wall time differs.

use criterion::{criterion_group, criterion_main, Criterion};

use fluct::fleet::by_name;
use fluct::montecarlo::{estimate_passage, sample_inf_and_endpoint, Direction, SimConfig};

fn cfg() -> SimConfig {
    SimConfig {
        n_paths: 20_000,
        seed: 17,
        shards: 8,
        r0_horizon_epsilon: 1e-6,
    }
}

fn bench_inf_sampler(c: &mut Criterion) {
    let entry = by_name("two-sided").expect("fleet entry");
    let cfg = cfg();
    let mut group = c.benchmark_group("inf_sampler_20k");
    group.sample_size(20);
    #[cfg(feature = "parallel")]
    {
        group.bench_function("rayon", |b| {
            b.iter(|| sample_inf_and_endpoint(&entry.model, entry.rate, &cfg).unwrap())
        });
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("pool");
        group.bench_function("sequential", |b| {
            b.iter(|| {
                pool.install(|| sample_inf_and_endpoint(&entry.model, entry.rate, &cfg).unwrap())
            })
        });
    }
    #[cfg(not(feature = "parallel"))]
    group.bench_function("sequential_fallback", |b| {
        b.iter(|| sample_inf_and_endpoint(&entry.model, entry.rate, &cfg).unwrap())
    });
    group.finish();
}

fn bench_passage_estimator(c: &mut Criterion) {
    let entry = by_name("brownian").expect("fleet entry");
    let cfg = cfg();
    let mut group = c.benchmark_group("passage_estimator_20k");
    group.sample_size(20);
    #[cfg(feature = "parallel")]
    {
        group.bench_function("rayon", |b| {
            b.iter(|| {
                estimate_passage(&entry.model, entry.rate, 0.0, 1.0, Direction::Down, &cfg)
                    .unwrap()
            })
        });
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("pool");
        group.bench_function("sequential", |b| {
            b.iter(|| {
                pool.install(|| {
                    estimate_passage(&entry.model, entry.rate, 0.0, 1.0, Direction::Down, &cfg)
                        .unwrap()
                })
            })
        });
    }
    #[cfg(not(feature = "parallel"))]
    group.bench_function("sequential_fallback", |b| {
        b.iter(|| {
            estimate_passage(&entry.model, entry.rate, 0.0, 1.0, Direction::Down, &cfg).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_inf_sampler, bench_passage_estimator);
criterion_main!(benches);
