//! Fixtures shared by the benchmarks.

pub use spdelab_core;

use spdelab_core::drift::ScalarFn;
use spdelab_core::kolmogorov::{Forcing, KRegime, KolmogorovProblem, Sampler, SolveOptions};
use spdelab_core::solver::{InitialData, OperatorSpec, SimConfig};
use spdelab_core::{Basis, DriftSpec, ModeVector, SpectralOperator};

pub fn smooth_state(n: usize) -> ModeVector {
    ModeVector::new((1..=n).map(|k| 1.0 / (k * k) as f64).collect())
}

pub fn burgers_config(n_modes: usize, ensemble: usize) -> SimConfig {
    let mut cfg = SimConfig::new(OperatorSpec { basis: Basis::DirichletSine, n_modes, power: 1.0 }, 0.05, 1e-3);
    cfg.drift = DriftSpec::burgers(0.25, 0.25);
    cfg.delta = 0.1;
    cfg.ensemble = ensemble;
    cfg.initial = InitialData { coeffs: smooth_state(n_modes).coeffs, sobolev_index: 0.0 };
    cfg
}

pub fn holder_problem(n: usize) -> KolmogorovProblem {
    let op = SpectralOperator::dirichlet(n, 1.0).expect("operator");
    let drift = DriftSpec::composition(ScalarFn::BoundedHolder { theta: 0.5 }, 0.0, 0.0);
    KolmogorovProblem::new(&op, 0.0, &drift, Forcing::Square(1), 1, None, 2.0, 1.0, KRegime::SubCritical).expect("problem")
}

pub fn small_solve() -> SolveOptions {
    SolveOptions {
        radius: 1.0,
        nodes_per_axis: 5,
        time_nodes: 32,
        tol: 1e-8,
        max_iter: 30,
        sampler: Sampler::MonteCarlo { samples: 256, antithetic: true, seed: 1 },
    }
}
