use std::hint::black_box;

use compgeo_core::{
    critical_radius, f_ratio, integrate_profile, integrate_riccati, simulate_radial_diffusion, solve_jacobi,
    verify_inequality, BoundSide, ChartId, CmcParams, CurvatureOperatorPath, CurvatureProfile, DiffusionConfig,
    ExactWarping, Form, Horizon, Matrix, PatchSpec, VerifyConfig,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn jacobi(c: &mut Criterion) {
    let mut g = c.benchmark_group("jacobi");
    for (name, profile) in [
        ("constant", CurvatureProfile::constant(1.0)),
        ("polynomial", CurvatureProfile::polynomial(vec![1.0, 0.0, 1.0])),
        ("power_log", CurvatureProfile::power_log(1.0, 2)),
    ] {
        let t0 = if name == "power_log" { 3.0 } else { 0.0 };
        g.bench_function(name, |b| {
            b.iter(|| solve_jacobi(black_box(&profile), t0, 1.0, 1.0, Horizon::new(t0, t0 + 20.0)).unwrap())
        });
    }
    g.finish();
}

fn riccati(c: &mut Criterion) {
    let mut g = c.benchmark_group("riccati");
    for dim in [2usize, 4, 6] {
        let path = CurvatureOperatorPath::random_saturating(dim, CurvatureProfile::constant(1.0), BoundSide::Upper, 1);
        let a0 = Matrix::identity(dim);
        g.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| integrate_riccati(black_box(&path), &a0, Horizon::new(0.0, 3.0)).unwrap())
        });
    }
    g.finish();
}

fn cmc(c: &mut Criterion) {
    let mut g = c.benchmark_group("cmc");
    g.bench_function("f_ratio_n3", |b| b.iter(|| f_ratio(3, black_box(7.5))));
    let p = CmcParams::new(2, 1.0).unwrap();
    g.bench_function("critical_radius", |b| b.iter(|| critical_radius(black_box(&p))));
    g.bench_function("sphere_profile", |b| b.iter(|| integrate_profile(black_box(&p), 5.0, 0.01).unwrap()));
    g.finish();
}

fn diffusion(c: &mut Criterion) {
    let mut g = c.benchmark_group("diffusion");
    g.sample_size(10);
    let cfg = DiffusionConfig::new(1, 1.0, 5.0, 1e-3, 1000, 42);
    for (name, model) in [("sinh", ExactWarping::Sinh), ("exp_quartic", ExactWarping::ExpQuartic)] {
        g.bench_function(name, |b| b.iter(|| simulate_radial_diffusion(black_box(&model), &cfg).unwrap()));
    }
    g.finish();
}

fn verifier(c: &mut Criterion) {
    let mut g = c.benchmark_group("verifier");
    g.sample_size(10);
    for grid in [64usize, 128, 256] {
        let cfg = VerifyConfig::new(ChartId::H2xrHorocylinder, PatchSpec::tilted(1.0), Form::Reverse, grid);
        g.bench_with_input(BenchmarkId::from_parameter(grid), &cfg, |b, cfg| {
            b.iter(|| verify_inequality(black_box(cfg)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, jacobi, riccati, cmc, diffusion, verifier);
criterion_main!(benches);
