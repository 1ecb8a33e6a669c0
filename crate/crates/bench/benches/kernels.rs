use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qjump_core::fockcheck::tmss_deviation;
use qjump_core::lde::{scgf_closed_form, scgf_derivatives_fd, tilted_generator, TiltParams, DEFAULT_FD_STEP};
use qjump_core::params::{ModelParams, Rates};
use qjump_core::qcore::{eigenvalues4, leading_real_eigenvalue};
use qjump_core::trajectory::{run_ensemble_with_workers, run_trajectory};

fn rates() -> Rates {
    Rates { omega: 1.0, gamma_w: 4.0, gamma_m: 1.0, n_avg: 1.0 }
}

fn model(steps: usize, trajectories: usize) -> ModelParams {
    ModelParams { rates: rates(), dt: 5e-4, steps, trajectories, ..ModelParams::default() }
}

fn scgf(c: &mut Criterion) {
    let tilt = TiltParams { s_a: 0.1, s_e: -0.1 };
    let w = tilted_generator(tilt, &rates());
    c.bench_function("eigenvalues4", |b| b.iter(|| eigenvalues4(black_box(&w))));
    c.bench_function("leading_real_eigenvalue", |b| b.iter(|| leading_real_eigenvalue(black_box(&w))));
    c.bench_function("scgf_closed_form", |b| b.iter(|| scgf_closed_form(black_box(tilt), &rates())));
    c.bench_function("scgf_derivatives_fd", |b| {
        b.iter(|| scgf_derivatives_fd(black_box(&rates()), DEFAULT_FD_STEP, 1.0))
    });
}

fn trajectories(c: &mut Criterion) {
    let single = model(2000, 1);
    c.bench_function("trajectory_2000_steps", |b| b.iter(|| run_trajectory(black_box(&single), 0)));
    let ensemble = model(200, 256);
    let mut g = c.benchmark_group("ensemble_256x200");
    g.sample_size(20);
    g.bench_function("1_worker", |b| b.iter(|| run_ensemble_with_workers(black_box(&ensemble), 1)));
    g.finish();
}

fn fock(c: &mut Criterion) {
    let mut g = c.benchmark_group("tmss_reconstruction");
    g.sample_size(20);
    g.bench_function("n_avg_1", |b| b.iter(|| tmss_deviation(black_box(1.0), 4.0, 1e-6, None)));
    g.finish();
}

criterion_group!(benches, scgf, trajectories, fock);
criterion_main!(benches);
