use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;
use twi_core::exec::ExecPolicy;
use twi_core::experiments::{run_monte_carlo, McOptions};
use twi_core::params::{CommConfig, ScenarioConfig, Setup};

fn fig5_setup() -> Setup {
    Setup::with_uniform_gamma(
        ScenarioConfig {
            t0: 0.0,
            speed: 3e8,
            max_distance: 100.0,
            sensors: 2,
            comp_min: 0.01,
            comp_max: 0.5,
            allow_degenerate_comp: false,
        },
        CommConfig {
            gamma_th_override: Some(1.0),
            ..CommConfig::new(0.01, 9, 7)
        },
        4.0,
    )
}

fn bench_policies(c: &mut Criterion) {
    let setup = fig5_setup();
    let grid: Vec<f64> = (1..=50).map(|k| k as f64 * 0.01).collect();
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    for reps in [16_384u64, 65_536] {
        group.throughput(Throughput::Elements(reps));
        for (name, policy) in [
            ("sequential", ExecPolicy::Sequential),
            ("parallel", ExecPolicy::Parallel),
        ] {
            let opts = McOptions {
                policy,
                ..McOptions::new(reps, 7, grid.clone())
            };
            group.bench_with_input(BenchmarkId::new(name, reps), &opts, |b, opts| {
                b.iter(|| black_box(run_monte_carlo(&setup, opts).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_policies);
criterion_main!(benches);
