use num::{One, Signed};
use proptest::prelude::*;

use spdelab_core::drift::{self, ScalarFn};
use spdelab_core::regime::{admissible_rho, check, q, RegimeVerdict, RhoInterval, Q};
use spdelab_core::spectral::Trace;
use spdelab_core::{Basis, DriftSpec, ExampleClass, ModeVector, RegimeParams, SpectralOperator};

fn rational(num: std::ops::RangeInclusive<i64>, den: std::ops::RangeInclusive<i64>) -> impl Strategy<Value = Q> {
    (num, den).prop_map(|(n, d)| q(n, d))
}

fn tuple() -> impl Strategy<Value = RegimeParams> {
    (
        1u32..=3,
        rational(1..=8, 1..=4),
        (1i64..=15).prop_map(|n| q(n, 16)),
        rational(0..=6, 1..=8),
        rational(0..=6, 1..=8),
        rational(-8..=16, 1..=16),
        0u8..3,
    )
        .prop_map(|(d, gamma, theta, mu, nu, rho, kind)| {
            let p = RegimeParams::heat(d, gamma, theta, mu, nu, rho);
            match kind {
                0 => p,
                1 => RegimeParams { drift_bounded: false, ..p },
                _ => p.with_class(ExampleClass::Burgers),
            }
        })
}

/// Bounded heat tuples dense enough in the pathwise region for conditional properties.
fn heat_tuple() -> impl Strategy<Value = RegimeParams> {
    (1u32..=3, 4i64..=16, 1i64..=15, 0i64..=4, 0i64..=4, 0i64..=16).prop_map(|(d, g, th, mu, nu, rho)| {
        RegimeParams::heat(d, q(g, 4), q(th, 16), q(mu, 16), q(nu, 16), q(rho, 32))
    })
}

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, max_global_rejects: 100_000, ..ProptestConfig::default() }
}

fn with_rho(p: &RegimeParams, rho: Q) -> RegimeParams {
    RegimeParams { rho, ..p.clone() }
}

fn levels(v: &RegimeVerdict) -> [bool; 4] {
    [v.weak_d_a_alpha, v.weak_h, v.pathwise_d_a_alpha, v.pathwise_h]
}

proptest! {
    #![proptest_config(cfg(10_000))]

    #[test]
    fn pathwise_implies_weak(p in tuple()) {
        let v = check(&p).unwrap();
        prop_assert!(!v.pathwise_d_a_alpha || v.weak_d_a_alpha);
        prop_assert!(!v.pathwise_h || v.weak_h);
        prop_assert!(!v.pathwise_h || v.pathwise_d_a_alpha);
        prop_assert!(!v.weak_h || v.weak_d_a_alpha);
    }
}

proptest! {
    #![proptest_config(cfg(1_000))]

    #[test]
    fn rho_intervals_agree_with_check(p in tuple()) {
        let iv = admissible_rho(&p).unwrap();
        let tiny = q(1, 1_000_000);
        for (level, interval) in [&iv.weak_d_a_alpha, &iv.weak_h, &iv.pathwise_d_a_alpha, &iv.pathwise_h].into_iter().enumerate() {
            match interval {
                RhoInterval::Empty => {
                    for k in -8..=16 {
                        let v = check(&with_rho(&p, q(k, 16))).unwrap();
                        prop_assert!(!levels(&v)[level], "level {level} holds at rho={k}/16 for empty interval");
                    }
                }
                RhoInterval::Interval { lower, upper } => {
                    let width = &upper.value - &lower.value;
                    for i in 0..100 {
                        let rho = &lower.value + &width * q(2 * i + 1, 200);
                        prop_assert!(levels(&check(&with_rho(&p, rho.clone())).unwrap())[level], "level {level} fails inside at {rho}");
                    }
                    let below = &lower.value - &tiny;
                    let above = &upper.value + &tiny;
                    prop_assert!(!levels(&check(&with_rho(&p, below)).unwrap())[level]);
                    prop_assert!(!levels(&check(&with_rho(&p, above)).unwrap())[level]);
                    prop_assert_eq!(levels(&check(&with_rho(&p, lower.value.clone())).unwrap())[level], lower.closed);
                    prop_assert_eq!(levels(&check(&with_rho(&p, upper.value.clone())).unwrap())[level], upper.closed);
                }
            }
        }
    }

    #[test]
    fn pathwise_balance_is_monotone_in_theta(p in heat_tuple()) {
        let v = check(&p).unwrap();
        prop_assume!(v.pathwise_d_a_alpha && !p.rho.is_negative() && p.mu <= &p.gamma / q(2, 1));
        let d4 = q(p.d as i64, 4);
        let cap = std::cmp::min(&p.gamma / q(2, 1) - d4 - &p.nu, p.mu.clone());
        for k in 0..64 {
            let theta = &p.theta + (Q::one() - &p.theta) * q(k, 64);
            let lhs = (Q::one() - &theta) * &p.rho;
            let rhs = &cap + &p.gamma * &theta / q(2, 1) - &theta * &p.mu;
            prop_assert!(lhs < rhs, "theta = {theta}");
        }
    }
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn operator() -> impl Strategy<Value = SpectralOperator> {
    (prop_oneof![Just(Basis::DirichletSine), Just(Basis::NeumannShiftedCosine)], 1usize..40, 0.25f64..2.5)
        .prop_map(|(b, n, p)| SpectralOperator::new(b, n, p).unwrap())
}

proptest! {
    #![proptest_config(cfg(256))]

    #[test]
    fn eigenvalues_strictly_increase(op in operator()) {
        prop_assert!(op.eigenvalues().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fractional_powers_compose(op in operator(), s1 in -1.5f64..1.5, s2 in -1.5f64..1.5, c in coeffs(40)) {
        let v = ModeVector::new(c[..op.n_modes()].to_vec());
        let two = op.frac_apply(s1, &op.frac_apply(s2, &v).unwrap()).unwrap();
        let one = op.frac_apply(s1 + s2, &v).unwrap();
        for (a, b) in two.coeffs.iter().zip(&one.coeffs) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn duality_pairing_reassociates(op in operator(), s in -1.5f64..1.5, a in coeffs(40), b in coeffs(40)) {
        let n = op.n_modes();
        let u = ModeVector::new(a[..n].to_vec());
        let v = ModeVector::new(b[..n].to_vec());
        let lhs = u.dot(&v);
        let rhs = op.frac_apply(-s, &u).unwrap().dot(&op.frac_apply(s, &v).unwrap());
        let scale: f64 = u.coeffs.iter().zip(&v.coeffs).map(|(x, y)| (x * y).abs()).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-14 * scale.max(1.0));
    }

    #[test]
    fn burgers_nonlinearity_conserves_energy(c in coeffs(12)) {
        let op = SpectralOperator::dirichlet(12, 1.0).unwrap();
        let u = ModeVector::new(c);
        let b = drift::burgers_nonlinearity(&op, &u).unwrap();
        prop_assert!(b.dot(&u).abs() < 1e-9);
    }

    #[test]
    fn composition_pairing_matches_quadrature(c in coeffs(8), z in coeffs(8), mu in 0.0f64..0.5, nu in 0.0f64..0.5) {
        // smooth data: decaying coefficients keep the dealiased projection exact to 1e-8
        let n = 8;
        let op = SpectralOperator::dirichlet(n, 1.0).unwrap();
        let smooth = |v: &[f64], a: f64| ModeVector::new(v.iter().enumerate().map(|(i, c)| a * c / ((i + 1) as f64).powi(4)).collect());
        let x = smooth(&c, 0.5);
        let z = smooth(&z, 1.0);
        let spec = DriftSpec::composition(ScalarFn::Sine, mu, nu);
        let lhs = drift::eval(&spec, &op, &x).unwrap().dot(&z);
        let fine = op.collocation(32 * n).unwrap();
        let inner = fine.values(&op.frac_apply(mu, &x).unwrap().coeffs, 0);
        let f: Vec<f64> = inner.iter().map(|u| u.sin()).collect();
        let g = fine.values(&op.frac_apply(nu, &z).unwrap().coeffs, 0);
        prop_assert!((lhs - fine.inner(&f, &g)).abs() < 1e-8, "{} vs {}", lhs, fine.inner(&f, &g));
    }
}

fn partial_sum(op: &SpectralOperator, sigma: f64, from: usize, to: usize) -> f64 {
    let c = match op.basis() {
        Basis::DirichletSine => |k: usize| std::f64::consts::PI.powi(2) * (k * k) as f64,
        _ => |k: usize| 1.0 + std::f64::consts::PI.powi(2) * ((k - 1) * (k - 1)) as f64,
    };
    ((from + 1)..=to).map(|k| c(k).powf(-sigma * op.power())).sum()
}

#[test]
fn trace_decision_matches_partial_sum_doubling() {
    let tail_tol = 1e-3;
    for op in [SpectralOperator::dirichlet(1, 1.0).unwrap(), SpectralOperator::neumann(1, 1.0).unwrap()] {
        for sigma in [0.3, 0.5, 0.75, 1.0, 1.5, 2.0] {
            let change = partial_sum(&op, sigma, 1_000_000, 2_000_000);
            match op.trace_power(sigma, tail_tol) {
                Trace::Finite { tail_bound, terms, .. } => {
                    assert!(tail_bound < tail_tol && terms <= 1_000_000, "sigma {sigma}");
                    assert!(change < tail_tol, "sigma {sigma}: change {change}");
                }
                Trace::Divergent => assert!(change > tail_tol, "sigma {sigma}: change {change}"),
            }
        }
    }
}

#[test]
fn stationary_variance_trace_matches_colour() {
    // Σ v_k(∞) = ½ Tr A^{-(1+2δ)} is finite exactly when δ > -1/4
    let op = SpectralOperator::dirichlet(1, 1.0).unwrap();
    for delta in [-0.25 + 0.01, 0.0, 0.25, 0.5] {
        let sigma = 1.0 + 2.0 * delta;
        let tol = if delta < 0.0 { 1.0 } else { 1e-6 };
        match op.trace_power(sigma, tol) {
            Trace::Finite { value, terms, tail_bound } => {
                let head = partial_sum(&op, sigma, 0, terms);
                assert!(value >= head && value - head <= tail_bound, "delta {delta}");
            }
            Trace::Divergent => panic!("delta {delta} declared divergent"),
        }
    }
    assert!(matches!(op.trace_power(1.0 + 2.0 * -0.25, 1e-2), Trace::Divergent));
}
