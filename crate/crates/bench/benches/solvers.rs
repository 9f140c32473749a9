use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vcopt::heuristic;
use vcopt::optimizer::{brute_force_oracle, build_model, solve, Budget, FlowLayout};
use vcopt::topo::car_park as generated_car_park;
use vcopt::Scenario;
use vcopt_bench::{car_park, single_demand};

fn exact_vs_heuristic(c: &mut Criterion) {
    let t = car_park();
    let mut group = c.benchmark_group("single_demand_vec");
    group.sample_size(10);
    for mbps in [2.0, 12.0, 20.0] {
        let p = single_demand(&t, mbps, Scenario::VEC);
        group.bench_with_input(BenchmarkId::new("milp", mbps), &p, |b, p| {
            b.iter(|| solve(&t, p, Budget::default()).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("heuristic", mbps), &p, |b, p| {
            b.iter(|| heuristic::run(&t, p).unwrap())
        });
    }
    group.finish();
}

fn model_build(c: &mut Criterion) {
    let t = car_park();
    let p = single_demand(&t, 12.0, Scenario::VEC);
    c.bench_function("build_model_per_source", |b| {
        b.iter(|| build_model(&t, &p, FlowLayout::PerSource).unwrap())
    });
}

fn oracle_small(c: &mut Criterion) {
    let t = generated_car_park(
        &[(0.0, 0.0), (4.0, 0.0), (0.0, 5.0), (6.0, 6.0)],
        &[(-10.0, -10.0), (40.0, 40.0)],
    )
    .unwrap();
    let p = single_demand(&t, 3.0, Scenario::VEC);
    let mut group = c.benchmark_group("oracle_small");
    group.sample_size(10);
    group.bench_function("oracle", |b| b.iter(|| brute_force_oracle(&t, &p).unwrap()));
    group.bench_function("milp", |b| {
        b.iter(|| solve(&t, &p, Budget::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, exact_vs_heuristic, model_build, oracle_small);
criterion_main!(benches);
