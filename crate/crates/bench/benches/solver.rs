use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cstomo::{
    apply_sensing, check_feasible, direct_fidelity, draw_settings, epsilon_hat,
    ghz_pauli_decomposition, reconstruct, restrict_dataset, surrogate_state, RandomSource,
    SettingsPlan, SolverConfig,
};
use cstomo_bench::surrogate_dataset;

fn reconstruction(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("reconstruct");
    group.sample_size(20);
    for n in [2, 3, 4] {
        let data = surrogate_dataset(n, 1);
        let eps = epsilon_hat(&data).unwrap();
        group.bench_with_input(BenchmarkId::new("complete", n), &data, |b, data| {
            b.iter(|| reconstruct(black_box(data), eps, &cfg).unwrap())
        });
    }
    let data = surrogate_dataset(4, 2);
    let subset = restrict_dataset(
        &data,
        &draw_settings(&data.words(), 10, RandomSource::new(3)).unwrap(),
    )
    .unwrap();
    let eps = epsilon_hat(&subset).unwrap();
    group.bench_function("m10_n4", |b| {
        b.iter(|| reconstruct(black_box(&subset), eps, &cfg).unwrap())
    });
    group.finish();
}

fn feasibility(c: &mut Criterion) {
    let data = surrogate_dataset(4, 4);
    let eps = epsilon_hat(&data).unwrap();
    let cfg = SolverConfig::default();
    c.bench_function("check_feasible_n4", |b| {
        b.iter(|| check_feasible(black_box(&data), eps, &cfg).unwrap())
    });
}

fn sensing(c: &mut Criterion) {
    let rho = surrogate_state(4).unwrap().as_hermitian();
    let plan = SettingsPlan::complete(4, 650).unwrap();
    c.bench_function("apply_sensing_n4", |b| {
        b.iter(|| apply_sensing(black_box(&rho), &plan).unwrap())
    });
    let data = surrogate_dataset(4, 5);
    let target = ghz_pauli_decomposition(4).unwrap();
    c.bench_function("direct_fidelity_n4", |b| {
        b.iter(|| direct_fidelity(black_box(&data), &target).unwrap())
    });
}

criterion_group!(benches, reconstruction, feasibility, sensing);
criterion_main!(benches);
