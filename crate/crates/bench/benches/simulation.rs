use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use d2dcache::analytic::{best_policy, cost_simple, steady_state_pmf};
use d2dcache::engine::run_simulation;
use d2dcache::population::generate_trajectory;
use d2dcache::PolicySpec;
use d2dcache_bench::{reference_params, short_config};

fn bench_engine(c: &mut Criterion) {
    let p = reference_params();
    let mut group = c.benchmark_group("engine_200T");
    group.sample_size(10);
    for (label, policy) in [
        ("bs", PolicySpec::BaseStationOnly),
        ("simple", PolicySpec::SimpleCaching),
        ("2rep", PolicySpec::Replication2),
        ("mbr_k4", PolicySpec::MbrRegenerating { k: 4 }),
    ] {
        group.bench_function(BenchmarkId::from_parameter(label), |b| {
            let mut seed = 0u64;
            b.iter(|| {
                seed += 1;
                run_simulation(&p, policy, &short_config(seed)).unwrap()
            });
        });
    }
    group.finish();
}

fn bench_population(c: &mut Criterion) {
    c.bench_function("trajectory_N100_T10_200T", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            generate_trajectory(100.0, 10.0, 2000.0, seed).unwrap()
        });
    });
}

fn bench_analytic(c: &mut Criterion) {
    let p = reference_params();
    c.bench_function("cost_simple", |b| b.iter(|| cost_simple(std::hint::black_box(&p))));
    c.bench_function("best_policy_k8", |b| {
        b.iter(|| best_policy(std::hint::black_box(&p), 8))
    });
    c.bench_function("poisson_pmf_i100", |b| {
        b.iter(|| steady_state_pmf(std::hint::black_box(100.0), 100).unwrap())
    });
}

criterion_group!(benches, bench_engine, bench_population, bench_analytic);
criterion_main!(benches);
