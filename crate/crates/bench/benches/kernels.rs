use std::hint::black_box;

use covert_core::channel::{build_lifted, sample_channels, PhaseProfile, SystemConfig, C64};
use covert_core::dbm_to_watts;
use covert_core::detection::{
    avg_dep_closed_form, avg_dep_quadrature, dep_at_optimal_threshold, optimal_threshold_theorem1, DetectionParams,
};
use covert_core::numerics::{bessel_k0, bessel_k1, RngStream};
use covert_core::optimizer::{build_surrogate, pap_solve, OptimizerOptions};
use covert_core::sdp::{solve_sdp, srocr, Relation, SdpProblem, Sense, SrocrSchedule};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bessel(c: &mut Criterion) {
    let xs: Vec<f64> = (1..=64).map(|k| 0.1 * k as f64).collect();
    c.bench_function("bessel_k0_k1_64pts", |b| {
        b.iter(|| xs.iter().map(|&x| bessel_k0(black_box(x)).unwrap() + bessel_k1(black_box(x)).unwrap()).sum::<f64>())
    });
}

fn dep(c: &mut Criterion) {
    let config = SystemConfig { elements: 30, ..Default::default() };
    let losses = config.losses().unwrap();
    let p = dbm_to_watts(25.0);
    c.bench_function("theorem1_threshold_and_dep", |b| {
        b.iter(|| dep_at_optimal_threshold(black_box(p), 0.2, 30, &losses, config.noise_power).unwrap())
    });
    let t = optimal_threshold_theorem1(p, 0.2, config.lambda(), losses.l1(), losses.l2(), config.noise_power).unwrap();
    let params = DetectionParams::new(t, p, 0.2, 30, &losses);
    c.bench_function("dep_closed_form", |b| b.iter(|| avg_dep_closed_form(black_box(&params)).unwrap()));
    c.bench_function("dep_quadrature_q5", |b| b.iter(|| avg_dep_quadrature(black_box(&params), 5).unwrap()));
}

/// The Γ-surrogate SDP a single PSR step solves, at the calibrated scenario.
fn surrogate_problem(m: usize) -> SdpProblem {
    let config = SystemConfig::calibrated(m);
    let ch = sample_channels(&config, &mut RngStream::new(1, 0).rng()).unwrap();
    let l = build_lifted(&ch);
    let v0 = PhaseProfile::random(m, &mut RngStream::new(1, 1).rng()).v;
    let s = build_surrogate(&v0, &l.g_sb, &l.g_br, 10.0).unwrap();
    let obj = &s.u * C64::new(0.5 * s.lipschitz, 0.0);
    let mut prob = SdpProblem::new(m + 1, Sense::Maximize, obj).unwrap().with_unit_diagonal();
    prob.add_constraint(l.q_sr.clone(), Relation::Ge, 0.0).unwrap();
    prob
}

fn sdp(c: &mut Criterion) {
    let mut group = c.benchmark_group("sdp");
    group.sample_size(20);
    for m in [4usize, 8, 10] {
        let prob = surrogate_problem(m);
        group.bench_with_input(BenchmarkId::new("ipm", m), &prob, |b, p| b.iter(|| solve_sdp(black_box(p), 1e-9)));
        group.bench_with_input(BenchmarkId::new("srocr", m), &prob, |b, p| {
            b.iter(|| srocr(black_box(p), &SrocrSchedule::default(), 1e-9).unwrap())
        });
    }
    group.finish();
}

fn pap(c: &mut Criterion) {
    let mut group = c.benchmark_group("pap");
    group.sample_size(10);
    let config = SystemConfig::calibrated(8);
    let ch = sample_channels(&config, &mut RngStream::new(2, 0).rng()).unwrap();
    group
        .bench_function("m8", |b| b.iter(|| pap_solve(black_box(&ch), &config, &OptimizerOptions::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, bessel, dep, sdp, pap);
criterion_main!(benches);
