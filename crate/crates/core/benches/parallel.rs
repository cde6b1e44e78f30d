use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use transport_core::groundstate::{default_grid, solve_ground_state};
use transport_core::noise::{average_fidelity, NoiseOptions};
use transport_core::par::Execution;
use transport_core::TrapConfig;

fn noise_average(c: &mut Criterion) {
    let cfg = TrapConfig::rb87(2.0 * PI * 50.0, 0.05, 1.6e-3).unwrap();
    let chi = solve_ground_state(&cfg, &default_grid(&cfg), 1e-9).unwrap();
    let lambda = 0.05 * cfg.oscillator_length();
    let mut group = c.benchmark_group("average_fidelity");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let opts = NoiseOptions { n: 400, master_seed: 1, execution: exec, ..Default::default() };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &opts, |b, opts| {
            b.iter(|| average_fidelity(&cfg, &chi, 0.02, lambda, opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, noise_average);
criterion_main!(benches);
