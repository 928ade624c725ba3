use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ws_sim_bench::Fixture;
use ws_sim_core::dynamics::step;
use ws_sim_core::harness::run_planner;
use ws_sim_core::observation::observe_all;
use ws_sim_core::planners::kmeans::kmeans_partition;
use ws_sim_core::planners::{make_controller, PlannerKind};

fn dynamics(c: &mut Criterion) {
    for name in ["star", "cuhksz-2"] {
        let f = Fixture::builtin(name, 1);
        let acts = f.cruise_actions();
        c.bench_function(&format!("step/{name}"), |b| {
            b.iter_batched(
                || (f.state.clone(), f.coverage.clone()),
                |(mut state, mut cov)| {
                    step(&f.scenario, &mut state, &mut cov, black_box(&acts)).unwrap()
                },
                BatchSize::SmallInput,
            )
        });
    }
}

fn observation(c: &mut Criterion) {
    let f = Fixture::builtin("corridor", 2);
    c.bench_function("observe_all/corridor", |b| {
        b.iter(|| observe_all(&f.scenario, black_box(&f.state), &f.coverage))
    });
}

fn planning(c: &mut Criterion) {
    let f = Fixture::builtin("cuhksz-2", 0);
    for kind in PlannerKind::ALL {
        c.bench_function(&format!("plan/cuhksz-2/{kind}"), |b| {
            b.iter(|| make_controller(kind, &f.scenario, 0).unwrap())
        });
    }
    let grid = f.coverage.grid();
    let cells: Vec<usize> = grid.free_indices().collect();
    c.bench_function("kmeans/cuhksz-2/k6", |b| {
        b.iter(|| kmeans_partition(grid, black_box(&cells), 6, 3))
    });
}

fn episodes(c: &mut Criterion) {
    let mut group = c.benchmark_group("episode");
    group.sample_size(10);
    let f = Fixture::builtin("corridor", 0);
    for kind in PlannerKind::ALL {
        group.bench_function(format!("corridor/{kind}"), |b| {
            b.iter(|| run_planner(&f.scenario, kind, 0).unwrap().0.t_finish)
        });
    }
    group.finish();
}

criterion_group!(benches, dynamics, observation, planning, episodes);
criterion_main!(benches);
