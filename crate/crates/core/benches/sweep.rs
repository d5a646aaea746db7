use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use equiroute::assignment::{solve_system_optimal, Weights};
use equiroute::experiments::{run_sweep, NcrSpec, SweepOptions, DEFAULT_LEVEL_SPLIT};
use equiroute::game::GameConfig;
use equiroute::{presets, Execution};

fn sweep(c: &mut Criterion) {
    let scenario = presets::sample();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (name, exec) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel { jobs: None }),
    ] {
        let options = SweepOptions {
            grid_step: 0.1,
            ncr: Some(NcrSpec::new(vec![0.2, 0.6], DEFAULT_LEVEL_SPLIT).unwrap()),
            gap_limit: f64::INFINITY,
            config: GameConfig::default(),
            exec,
        };
        group.bench_with_input(BenchmarkId::new("sample_22_points", name), &options, |b, o| {
            b.iter(|| run_sweep(black_box(&scenario), o).unwrap())
        });
    }
    group.finish();
}

fn system_solve(c: &mut Criterion) {
    let s = presets::sample();
    let npv = vec![0.5; s.network.edge_count()];
    let w = Weights::uniform(2);
    c.bench_function("system_solve_sample", |b| {
        b.iter(|| solve_system_optimal(&s.network, black_box(&s.demand), &w, &npv).unwrap())
    });
}

criterion_group!(benches, sweep, system_solve);
criterion_main!(benches);
