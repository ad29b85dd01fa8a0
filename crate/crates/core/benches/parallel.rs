//! Parallel against single-threaded runs of the data-parallel paths.
//! Build with `--no-default-features` to time the sequential fallback itself.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bessbid_core::agc::{track_schedule, TrackingInterval};
use bessbid_core::clearing::{clear_horizon, QuantityBids};
use bessbid_core::harness::{brute_force_oracle, OracleLimits};
use bessbid_core::scenario::{reference_scenario, tiny_scenario, MarketMask, Patterns};

fn pools() -> [(&'static str, rayon::ThreadPool); 2] {
    let build = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    [("parallel", build(0)), ("sequential", build(1))]
}

fn bench(c: &mut Criterion) {
    let reference = reference_scenario(&Patterns::builtin(), MarketMask::ALL).unwrap();
    let bids: Vec<QuantityBids> = (0..reference.num_intervals())
        .map(|t| QuantityBids { supply: (t % 5) as f64, demand: 0.0, reserve: 2.0, regulation: 3.0 })
        .collect();
    let tiny = tiny_scenario(MarketMask::ENERGY_REGULATION);
    let tracking: Vec<TrackingInterval> = (0..96)
        .map(|t| TrackingInterval { soc_start: 50.0, supply: 0.0, demand: 0.0, regcap: (t % 10) as f64, delta_t: 0.25 })
        .collect();
    let bess = reference.bess.clone();

    let mut g = c.benchmark_group("clear_horizon_96");
    for (name, pool) in &pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| clear_horizon(&reference, Some(&bids)).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("oracle_tiny");
    g.sample_size(10);
    for (name, pool) in &pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| brute_force_oracle(&tiny, 1.25, &OracleLimits::default()).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("agc_tracking_96");
    for (name, pool) in &pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| track_schedule(&tracking, &bess, 7)))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
