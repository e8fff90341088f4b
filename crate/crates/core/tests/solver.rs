use spdelab_core::drift::ScalarFn;
use spdelab_core::noise::{convolution_variance, NoiseStream};
use spdelab_core::solver::{couple, galerkin_study, simulate, OperatorSpec, SimConfig, Stepper};
use spdelab_core::{Basis, DriftSpec, ModeVector};

fn sine_cfg(n: usize, horizon: f64, h: f64) -> SimConfig {
    SimConfig::new(OperatorSpec { basis: Basis::DirichletSine, n_modes: n, power: 1.0 }, horizon, h)
}

#[test]
fn zero_drift_matches_ou_law() {
    let mut cfg = sine_cfg(3, 0.1, 0.01);
    cfg.initial.coeffs = vec![1.0, 0.5, -0.5];
    cfg.ensemble = 4000;
    cfg.seed = 11;
    let e = simulate(&cfg).unwrap();
    let n = cfg.ensemble as f64;
    for k in 0..3 {
        let l = std::f64::consts::PI.powi(2) * ((k + 1) * (k + 1)) as f64;
        let mean = (-l * 0.1).exp() * cfg.initial.coeffs[k];
        let var = convolution_variance(l, 0.0, 0.1).unwrap();
        let xs: Vec<f64> = e.trajectories.iter().map(|t| t.states[0].coeffs[k]).collect();
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((m - mean).abs() < 4.0 * (var / n).sqrt(), "mode {k} mean");
        assert!((v - var).abs() < 4.0 * var * (2.0 / n).sqrt(), "mode {k} var");
    }
}

#[test]
fn energy_stays_below_a_priori_bound() {
    let mut cfg = sine_cfg(32, 0.5, 1e-3);
    cfg.drift = DriftSpec::composition(ScalarFn::BoundedHolder { theta: 0.5 }, 0.0, 0.0);
    cfg.initial.coeffs = vec![1.0];
    cfg.ensemble = 200;
    let e = simulate(&cfg).unwrap();
    let t = cfg.horizon;
    let tr: f64 = (1..=32)
        .map(|k| convolution_variance(std::f64::consts::PI.powi(2) * (k * k) as f64, 0.0, t).unwrap())
        .sum();
    // ‖e^{-tA}x + ∫e^{-(t-s)A}B ds‖ ≤ 1 + t since |F| ≤ 1
    let det = 1.0 + t;
    let bound = det * det + 2.0 * det * tr.sqrt() + tr;
    let got = e.stats[0].mean_norm_sq;
    assert!(got.is_finite() && got <= bound, "{got} > {bound}");
}

#[test]
fn burgers_small_data_decays_like_heat() {
    let mut cfg = sine_cfg(16, 0.1, 1e-4);
    cfg.noise = false;
    cfg.drift = DriftSpec::burgers(0.25, 0.25);
    cfg.initial.coeffs = vec![1e-3];
    let e = simulate(&cfg).unwrap();
    let x = &e.trajectories[0].states[0];
    let rel = x.norm().powi(2) / 1e-6;
    let heat = (-2.0 * std::f64::consts::PI.powi(2) * 0.1).exp();
    assert!((rel / heat - 1.0).abs() < 0.01, "{rel} vs {heat}");
}

#[test]
fn step_halving_is_first_order() {
    let run = |h: f64, sub: usize, seed: u64| {
        let mut cfg = sine_cfg(4, 0.5, h);
        cfg.drift = DriftSpec::composition(ScalarFn::Sine, 0.0, 0.0);
        cfg.delta = 0.5;
        cfg.noise_substeps = sub;
        cfg.initial.coeffs = vec![2.0, -1.0];
        cfg.seed = seed;
        cfg.ensemble = 400;
        simulate(&cfg).unwrap()
    };
    let h = 0.01;
    let (a, b, c) = (run(h, 4, 3), run(h / 2.0, 2, 3), run(h / 4.0, 1, 3));
    let err = |p: &spdelab_core::solver::Ensemble, q: &spdelab_core::solver::Ensemble| {
        p.trajectories
            .iter()
            .zip(&q.trajectories)
            .map(|(x, y)| x.states[0].sub(&y.states[0]).norm().powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let ratio = err(&a, &b) / err(&b, &c);
    assert!(ratio >= 1.7, "ratio {ratio}");
}

#[test]
fn step_matches_explicit_composition_of_fine_increments() {
    let mut cfg = sine_cfg(2, 0.1, 0.01);
    cfg.noise_substeps = 2;
    let st = Stepper::from_config(&cfg).unwrap();
    let s = NoiseStream::new(5, 0);
    let mut x = vec![0.0, 0.0];
    st.advance(&mut x, &s, 3, &mut Default::default(), &mut Vec::new()).unwrap();
    let l = std::f64::consts::PI.powi(2);
    let sd = convolution_variance(l, 0.0, 0.005).unwrap().sqrt();
    let want = (-l * 0.005).exp() * sd * s.gaussian(6, 1) + sd * s.gaussian(7, 1);
    assert!((x[0] - want).abs() < 1e-15);
}

#[test]
fn galerkin_zero_drift_closed_form() {
    let mut cfg = sine_cfg(1, 0.1, 0.01);
    cfg.initial.coeffs = vec![1.0, 0.5, 0.25, 0.125, 0.1, 0.1, 0.1, 0.1];
    cfg.save_times = vec![0.01, 0.05, 0.1];
    cfg.ensemble = 1000;
    let r = galerkin_study(&cfg, &[2, 4, 8, 32]).unwrap();
    for lv in &r.levels {
        let cf = lv.closed_form_sq.as_ref().unwrap();
        for i in 0..3 {
            assert!((lv.mean_sq_error[i] - cf[i]).abs() <= 4.0 * lv.sq_error_se[i] + 1e-15, "n={} i={i}", lv.n);
        }
    }
    assert_eq!(r.levels[3].sup_error, 0.0);
    assert!(r.levels[0].analytic_tail > r.levels[1].analytic_tail);
}

#[test]
fn rough_data_weight_keeps_profile_interior() {
    let mut cfg = sine_cfg(1, 0.02, 1e-5);
    // x_k = k^{0.1} lies in D(A^{-1/2}) but not in H
    cfg.initial.coeffs = (1..=64).map(|k| (k as f64).powf(0.1)).collect();
    cfg.initial.sobolev_index = -0.5;
    cfg.save_times = vec![1e-5, 1e-4, 1e-3, 5e-3, 0.02];
    cfg.ensemble = 100;
    let r = galerkin_study(&cfg, &[4, 64]).unwrap();
    assert_eq!(r.weight_exponent, 0.5);
    let lv = &r.levels[0];
    let closed: Vec<f64> = lv
        .closed_form_sq
        .as_ref()
        .unwrap()
        .iter()
        .zip(&r.times)
        .map(|(e, t)| t.sqrt() * e.sqrt())
        .collect();
    let argmax = |v: &[f64]| (0..v.len()).max_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap();
    assert!(argmax(&closed) > 0 && argmax(&closed) < closed.len() - 1, "{closed:?}");
    assert!(argmax(&lv.mean_error) > 0, "{:?}", lv.mean_error);
    assert_eq!(lv.sup_error, lv.mean_error[argmax(&lv.mean_error)]);
}

#[test]
fn coupling_same_start_is_exactly_zero() {
    let mut cfg = sine_cfg(8, 0.05, 1e-3);
    cfg.drift = DriftSpec::burgers(0.25, 0.25);
    cfg.ensemble = 4;
    cfg.save_times = vec![0.01, 0.05];
    let x = ModeVector::new(vec![0.3, -0.2]);
    let r = couple(&cfg, &x, &x).unwrap();
    assert!(r.rms.iter().all(|v| v.to_bits() == 0));
    assert_eq!(r.ratio, None);
    assert!(r.draws_match);
}

#[test]
fn coupling_zero_drift_contracts() {
    let mut cfg = sine_cfg(8, 0.1, 1e-2);
    cfg.ensemble = 8;
    cfg.save_times = vec![0.0, 0.05, 0.1];
    let r = couple(&cfg, &ModeVector::new(vec![1.0, 1.0]), &ModeVector::new(vec![0.0, 1.5])).unwrap();
    assert!(r.ratio.unwrap() <= 1.0);
    assert_eq!(r.rms[0], r.initial_distance);
}
