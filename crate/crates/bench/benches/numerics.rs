use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use spdelab_bench::{burgers_config, holder_problem, small_solve, smooth_state};
use spdelab_core::drift;
use spdelab_core::kolmogorov::{ou_expect, solve_u, Sampler};
use spdelab_core::noise::{DrawTally, NoiseStream};
use spdelab_core::regime::{check, emit_table, q};
use spdelab_core::solver::{simulate, Stepper};
use spdelab_core::{DriftSpec, ExampleClass, RegimeParams, Scenario, SpectralOperator};

fn regime(c: &mut Criterion) {
    let p = RegimeParams::heat(2, q(1, 1), q(1, 2), q(1, 8), q(0, 1), q(1, 4));
    c.bench_function("regime_check", |b| b.iter(|| check(black_box(&p)).unwrap()));
    c.bench_function("emit_table_burgers_weak", |b| {
        b.iter(|| emit_table(ExampleClass::Burgers, Scenario::Weak, black_box(&q(1, 100))).unwrap())
    });
}

fn drift_eval(c: &mut Criterion) {
    let mut g = c.benchmark_group("burgers_eval");
    for n in [16, 64, 256] {
        let op = SpectralOperator::dirichlet(n, 1.0).unwrap();
        let x = smooth_state(n);
        let spec = DriftSpec::burgers(0.25, 0.25);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| drift::eval(&spec, &op, black_box(&x)).unwrap()));
    }
    g.finish();
}

fn stepping(c: &mut Criterion) {
    let mut g = c.benchmark_group("exponential_euler_step");
    for n in [16, 64, 256] {
        let op = SpectralOperator::dirichlet(n, 1.0).unwrap();
        let st = Stepper::new(&op, &DriftSpec::burgers(0.25, 0.25), 0.1, 1e-3, 1, true).unwrap();
        let stream = NoiseStream::new(1, 0);
        let x0 = smooth_state(n).coeffs;
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            let mut scratch = Vec::new();
            b.iter(|| {
                let mut x = x0.clone();
                let mut tally = DrawTally::default();
                st.advance(&mut x, &stream, 0, &mut tally, &mut scratch).unwrap();
                x
            })
        });
    }
    g.finish();
    c.bench_function("ensemble_burgers_32x8", |b| {
        let cfg = burgers_config(32, 8);
        b.iter(|| simulate(black_box(&cfg)).unwrap())
    });
}

fn kolmogorov(c: &mut Criterion) {
    let p = holder_problem(2);
    let x = [0.2, -0.1];
    let phi = |y: &[f64]| y[0] * y[0] + y[1].sin();
    c.bench_function("ou_expect_hermite_16", |b| {
        b.iter(|| ou_expect(&p, 0.1, &phi, black_box(&x), &Sampler::Hermite { points: 16 }).unwrap())
    });
    c.bench_function("ou_expect_mc_4096", |b| {
        let s = Sampler::MonteCarlo { samples: 4096, antithetic: true, seed: 3 };
        b.iter(|| ou_expect(&p, 0.1, &phi, black_box(&x), &s).unwrap())
    });
    let opts = small_solve();
    let mut g = c.benchmark_group("solve_u");
    g.sample_size(10);
    g.bench_function("n2_grid5", |b| b.iter(|| solve_u(&p, black_box(&opts)).unwrap()));
    g.finish();
}

criterion_group!(benches, regime, drift_eval, stepping, kolmogorov);
criterion_main!(benches);
