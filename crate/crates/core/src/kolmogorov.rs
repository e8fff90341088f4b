//! Finite-dimensional Kolmogorov equations on `H_n`: Gaussian expectations and
//! their derivatives under the Ornstein–Uhlenbeck semigroup, the lower bounds on
//! `c̄`, a Picard solver on tensor grids and monitors of the uniform estimates.

use std::fmt;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::{GaussHermite, GaussLegendre};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::drift::{DriftEvaluator, DriftKind, DriftSpec};
use crate::error::{Error, Result};
use crate::noise::{variance_unchecked, NoiseStream};
use crate::spectral::SpectralOperator;

pub const MAX_MODES: usize = 4;

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Right-hand side `g` of the Kolmogorov equation. Indices are 1-based.
#[derive(Clone)]
pub enum Forcing {
    One,
    Linear(usize),
    Square(usize),
    /// `g(x) = ⟨B(x), e_k⟩`.
    Drift,
    Custom(PointFn),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::One => write!(f, "One"),
            Forcing::Linear(j) => write!(f, "Linear({j})"),
            Forcing::Square(j) => write!(f, "Square({j})"),
            Forcing::Drift => write!(f, "Drift"),
            Forcing::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ForcingSpec {
    One,
    Linear { j: usize },
    Square { j: usize },
    Drift,
}

impl From<ForcingSpec> for Forcing {
    fn from(s: ForcingSpec) -> Self {
        match s {
            ForcingSpec::One => Forcing::One,
            ForcingSpec::Linear { j } => Forcing::Linear(j),
            ForcingSpec::Square { j } => Forcing::Square(j),
            ForcingSpec::Drift => Forcing::Drift,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KRegime {
    SubCritical,
    /// `β + δ = 1/2`: OU process with constant drift `z0`, perturbation `B − z0`
    /// bounded by `c_b_tilde`.
    Critical { z0: Vec<f64>, c_b_tilde: f64 },
}

/// Inputs to the lower bound on `c̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CbarInput {
    pub lambda1: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub theta: f64,
    pub c_b: f64,
    /// Interpolation constant `M`; 1 unless configured.
    pub m: f64,
    /// `Some(C_B̃)` selects the critical bound.
    pub c_b_tilde: Option<f64>,
}

const CRITICAL_TOL: f64 = 1e-12;

/// Largest admissible `C_B̃` in the critical regime.
pub fn critical_threshold(inp: &CbarInput) -> f64 {
    let t = inp.theta;
    t * (1.0 - t) * (1.0 - inp.beta - inp.alpha) / (4.0 * inp.m * (2.0 - t))
}

/// Lower bound on `c̄` without safety factor.
pub fn cbar_bound(inp: &CbarInput) -> Result<f64> {
    if !(inp.lambda1 > 0.0 && inp.m > 0.0 && inp.c_b >= 0.0) {
        return Err(Error::Parameter("cbar needs lambda1 > 0, m > 0, C_B >= 0".into()));
    }
    if !(inp.theta > 0.0 && inp.theta < 1.0) {
        return Err(Error::Parameter(format!("theta must lie in (0,1), got {}", inp.theta)));
    }
    let e = 0.5 - inp.beta - inp.delta;
    let l1 = inp.lambda1;
    match inp.c_b_tilde {
        None => {
            if e.abs() < CRITICAL_TOL {
                return Err(Error::Regime("beta + delta = 1/2 requires the critical regime".into()));
            }
            if e < 0.0 {
                return Err(Error::Parameter(format!("beta + delta must be below 1/2, got {}", 0.5 - e)));
            }
            let a = 4.0 * inp.c_b / l1;
            let b = (4.0 * inp.m * inp.c_b * gamma(e)).powf(1.0 / e) / l1;
            Ok(a.max(b))
        }
        Some(cbt) => {
            if e.abs() >= CRITICAL_TOL {
                return Err(Error::Regime(format!(
                    "critical regime needs beta + delta = 1/2, got {}",
                    0.5 - e
                )));
            }
            let thr = critical_threshold(inp);
            if !(cbt >= 0.0 && cbt < thr) {
                return Err(Error::Regime(format!("C_B~ = {cbt} violates the smallness threshold {thr}")));
            }
            let t = inp.theta;
            let a = t * (1.0 - inp.beta);
            let s = cbt + inp.c_b;
            let inner = 16.0 * inp.m * gamma(a) * s
                * (1.0 + 2.0 * inp.m * (2.0 - t) * s / (t * (1.0 - t) * (1.0 - inp.beta)));
            Ok(inner.powf(1.0 / a) / l1 + 8.0 * inp.c_b / l1)
        }
    }
}

/// `safety ·` [`cbar_bound`].
pub fn cbar(inp: &CbarInput, safety: f64) -> Result<f64> {
    Ok(safety * cbar_bound(inp)?)
}

/// Gaussian expectation rule: Monte Carlo or tensor Gauss–Hermite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Sampler {
    MonteCarlo {
        samples: usize,
        #[serde(default = "yes")]
        antithetic: bool,
        #[serde(default)]
        seed: u64,
    },
    Hermite { points: usize },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradEstimate {
    pub value: Vec<f64>,
    pub se: Vec<f64>,
}

/// Standard normal points in `R^n` with weights.
#[derive(Debug, Clone)]
struct Rule {
    n: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    kind: RuleKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RuleKind {
    Quadrature,
    Plain,
    Antithetic,
}

impl Rule {
    fn len(&self) -> usize {
        self.weights.len()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    fn hermite(n: usize, points: usize) -> Result<Rule> {
        let p = NonZeroUsize::new(points).ok_or_else(|| Error::Parameter("Hermite rule needs points >= 1".into()))?;
        let gh = GaussHermite::new(p);
        let nodes: Vec<(f64, f64)> = gh
            .as_node_weight_pairs()
            .iter()
            .map(|(x, w)| (x * std::f64::consts::SQRT_2, w / std::f64::consts::PI.sqrt()))
            .collect();
        let total = points.pow(n as u32);
        let mut pts = Vec::with_capacity(total * n);
        let mut ws = Vec::with_capacity(total);
        for idx in 0..total {
            let mut r = idx;
            let mut w = 1.0;
            for _ in 0..n {
                let (x, wi) = nodes[r % points];
                pts.push(x);
                w *= wi;
                r /= points;
            }
            ws.push(w);
        }
        Ok(Rule { n, points: pts, weights: ws, kind: RuleKind::Quadrature })
    }

    /// `count` standard normal draws from steps `offset..offset+count`.
    fn monte_carlo(n: usize, count: usize, antithetic: bool, seed: u64, offset: u64) -> Rule {
        let stream = NoiseStream::new(seed, 0);
        let mut pts = vec![0.0; count * n];
        for (i, chunk) in pts.chunks_mut(n.max(1)).enumerate() {
            stream.gaussians_into(offset + i as u64, chunk);
        }
        Rule {
            n,
            points: pts,
            weights: vec![1.0; count],
            kind: if antithetic { RuleKind::Antithetic } else { RuleKind::Plain },
        }
    }

    fn from_sampler(n: usize, s: &Sampler, offset: u64) -> Result<Rule> {
        match *s {
            Sampler::Hermite { points } => Rule::hermite(n, points),
            Sampler::MonteCarlo { samples, antithetic, seed } => {
                if samples < 2 {
                    return Err(Error::Parameter("Monte Carlo needs at least 2 samples".into()));
                }
                let count = if antithetic { samples / 2 } else { samples };
                Ok(Rule::monte_carlo(n, count, antithetic, seed, offset))
            }
        }
    }
}

/// Running mean and variance of per-sample contributions.
#[derive(Default, Clone, Copy)]
struct Acc {
    sum: f64,
    sum_sq: f64,
}

impl Acc {
    fn add(&mut self, w: f64, v: f64) {
        self.sum += w * v;
        self.sum_sq += w * v * v;
    }

    /// Estimate and the variance of that estimate. Monte Carlo rules carry unit
    /// weights and are averaged here.
    fn finish(&self, kind: RuleKind, count: usize) -> (f64, f64) {
        match kind {
            RuleKind::Quadrature => (self.sum, 0.0),
            _ => {
                let m = count as f64;
                let mean = self.sum / m;
                let var = ((self.sum_sq / m - mean * mean) * m / (m - 1.0).max(1.0)).max(0.0);
                (mean, var / m)
            }
        }
    }
}

/// Problem data for `c̄λ_k u − L_n u − ⟨B_n, Du⟩ = g` on `H_n`.
#[derive(Debug, Clone)]
pub struct KolmogorovProblem {
    op: SpectralOperator,
    delta: f64,
    drift: DriftEvaluator,
    drift_zero: bool,
    forcing: Forcing,
    k: usize,
    cbar: f64,
    regime: KRegime,
    bound: CbarInput,
}

/// Serializable description of a [`KolmogorovProblem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub operator: crate::solver::OperatorSpec,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "zero_drift")]
    pub drift: DriftSpec,
    pub forcing: ForcingSpec,
    pub k: usize,
    /// Explicit `c̄`; default is `safety ·` the lower bound.
    #[serde(default)]
    pub cbar: Option<f64>,
    #[serde(default = "two")]
    pub safety: f64,
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "subcritical")]
    pub regime: KRegime,
}

fn zero_drift() -> DriftSpec {
    DriftSpec::zero()
}
fn two() -> f64 {
    2.0
}
fn one() -> f64 {
    1.0
}
fn subcritical() -> KRegime {
    KRegime::SubCritical
}

impl ProblemConfig {
    pub fn build(&self) -> Result<KolmogorovProblem> {
        let op = self.operator.build()?;
        KolmogorovProblem::new(&op, self.delta, &self.drift, self.forcing.into(), self.k, self.cbar, self.safety, self.m, self.regime.clone())
    }
}

impl KolmogorovProblem {
    /// Validates dimensions, drift boundedness and `c̄` against its lower bound.
    /// With `cbar = None` the bound times `safety` is used.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        op: &SpectralOperator,
        delta: f64,
        drift: &DriftSpec,
        forcing: Forcing,
        k: usize,
        cbar: Option<f64>,
        safety: f64,
        m: f64,
        regime: KRegime,
    ) -> Result<Self> {
        let n = op.n_modes();
        if n == 0 || n > MAX_MODES {
            return Err(Error::Dimension(format!("Kolmogorov problems need 1..={MAX_MODES} modes, got {n}")));
        }
        if k == 0 || k > n {
            return Err(Error::Parameter(format!("mode index k={k} outside 1..={n}")));
        }
        match &forcing {
            Forcing::Linear(j) | Forcing::Square(j) if *j == 0 || *j > n => {
                return Err(Error::Parameter(format!("forcing index {j} outside 1..={n}")));
            }
            _ => {}
        }
        let meta = drift.metadata(op);
        if !meta.bounded {
            return Err(Error::Parameter("the Kolmogorov solver needs a bounded drift".into()));
        }
        if let KRegime::Critical { z0, .. } = &regime {
            if z0.len() != n {
                return Err(Error::Dimension(format!("z0 has {} entries, expected {n}", z0.len())));
            }
        }
        let drift_zero = drift.kind == DriftKind::Zero;
        let c_b = if drift_zero { 0.0 } else { meta.c_b.unwrap_or(1.0).max(1.0) };
        let bound = CbarInput {
            lambda1: op.lambda(1),
            alpha: meta.alpha,
            beta: meta.beta,
            delta,
            theta: meta.theta.unwrap_or(0.5),
            c_b,
            m,
            c_b_tilde: match &regime {
                KRegime::SubCritical => None,
                KRegime::Critical { c_b_tilde, .. } => Some(*c_b_tilde),
            },
        };
        let lower = cbar_bound(&bound)?;
        let cbar = match cbar {
            Some(c) if c > lower && c > 0.0 => c,
            Some(c) => {
                return Err(Error::Parameter(format!("cbar = {c} does not exceed the lower bound {lower}")));
            }
            None if lower > 0.0 => safety * lower,
            None => return Err(Error::Parameter("cbar must be given when the drift vanishes".into())),
        };
        Ok(KolmogorovProblem {
            op: op.clone(),
            delta,
            drift: drift.evaluator(op)?,
            drift_zero,
            forcing,
            k,
            cbar,
            regime,
            bound,
        })
    }

    pub fn n(&self) -> usize {
        self.op.n_modes()
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn cbar(&self) -> f64 {
        self.cbar
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn operator(&self) -> &SpectralOperator {
        &self.op
    }
    pub fn bound_input(&self) -> &CbarInput {
        &self.bound
    }
    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    /// `c̄λ_k`.
    pub fn rate(&self) -> f64 {
        self.cbar * self.op.lambda(self.k)
    }

    /// `q_j(t) = λ_j^{-1-2δ}(1 − e^{-2tλ_j})/2`, `j` 1-based.
    pub fn q(&self, j: usize, t: f64) -> f64 {
        variance_unchecked(self.op.lambda(j), self.delta, t)
    }

    /// Mean of the Gaussian law at time `t` started from `x`, including the
    /// critical shift `ζ_t`.
    pub fn mean_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let l = self.op.eigenvalues();
        for j in 0..out.len() {
            out[j] = (-t * l[j]).exp() * x[j];
        }
        if let KRegime::Critical { z0, .. } = &self.regime {
            for j in 0..out.len() {
                out[j] += -(-t * l[j]).exp_m1() / l[j] * z0[j];
            }
        }
    }

    /// `‖g‖` used to normalize the monitored constants.
    pub fn forcing_norm(&self, radius: f64) -> f64 {
        match self.forcing {
            Forcing::One => 1.0,
            Forcing::Linear(_) => radius,
            Forcing::Square(_) => radius * radius,
            Forcing::Drift => self.bound.c_b * self.op.lambda(self.k).powf(self.bound.beta),
            Forcing::Custom(_) => f64::NAN,
        }
    }

    pub fn g(&self, z: &[f64], scratch: &mut [f64]) -> f64 {
        match &self.forcing {
            Forcing::One => 1.0,
            Forcing::Linear(j) => z[j - 1],
            Forcing::Square(j) => z[j - 1] * z[j - 1],
            Forcing::Drift => {
                self.drift.eval_into(z, scratch);
                scratch[self.k - 1]
            }
            Forcing::Custom(f) => f(z),
        }
    }

    /// `⟨B_n(z) − z0, du⟩`.
    pub fn drift_pairing(&self, z: &[f64], du: &[f64], scratch: &mut [f64]) -> f64 {
        let mut s = 0.0;
        if !self.drift_zero {
            self.drift.eval_into(z, scratch);
            s = scratch.iter().zip(du).map(|(b, d)| b * d).sum();
        }
        if let KRegime::Critical { z0, .. } = &self.regime {
            s -= z0.iter().zip(du).map(|(a, d)| a * d).sum::<f64>();
        }
        s
    }

    pub fn drift_is_zero(&self) -> bool {
        self.drift_zero && !matches!(self.regime, KRegime::Critical { .. })
    }

    fn check_point(&self, t: f64, x: &[f64]) -> Result<()> {
        if !(t > 0.0) {
            return Err(Error::Parameter(format!("t must be positive, got {t}")));
        }
        if x.len() != self.n() {
            return Err(Error::Dimension(format!("point has {} coordinates, expected {}", x.len(), self.n())));
        }
        Ok(())
    }
}

/// `E φ(e^{-tA_n}x + Y)`, `Y ~ N(0, Q_t)`.
pub fn ou_expect(problem: &KolmogorovProblem, t: f64, phi: &dyn Fn(&[f64]) -> f64, x: &[f64], sampler: &Sampler) -> Result<Estimate> {
    problem.check_point(t, x)?;
    let n = problem.n();
    let rule = Rule::from_sampler(n, sampler, 0)?;
    let mut m = vec![0.0; n];
    problem.mean_into(t, x, &mut m);
    let sd: Vec<f64> = (1..=n).map(|j| problem.q(j, t).sqrt()).collect();
    let mut z = vec![0.0; n];
    let mut acc = Acc::default();
    for i in 0..rule.len() {
        let y = rule.point(i);
        for j in 0..n {
            z[j] = m[j] + sd[j] * y[j];
        }
        let mut v = phi(&z);
        if rule.kind == RuleKind::Antithetic {
            for j in 0..n {
                z[j] = m[j] - sd[j] * y[j];
            }
            v = 0.5 * (v + phi(&z));
        }
        acc.add(rule.weights[i], v);
    }
    let (value, var) = acc.finish(rule.kind, rule.len());
    Ok(Estimate { value, se: var.sqrt() })
}

/// `A_n^γ D(R_{n,t}φ)(x)` via Gaussian integration by parts.
pub fn ou_gradient(
    problem: &KolmogorovProblem,
    t: f64,
    phi: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    gamma: f64,
    sampler: &Sampler,
) -> Result<GradEstimate> {
    problem.check_point(t, x)?;
    let n = problem.n();
    let rule = Rule::from_sampler(n, sampler, 0)?;
    let mut m = vec![0.0; n];
    problem.mean_into(t, x, &mut m);
    let l = problem.op.eigenvalues();
    let sd: Vec<f64> = (1..=n).map(|j| problem.q(j, t).sqrt()).collect();
    let c: Vec<f64> = (0..n).map(|j| l[j].powf(gamma) * (-t * l[j]).exp() / sd[j]).collect();
    let base = phi(&m);
    let mut z = vec![0.0; n];
    let mut acc = vec![Acc::default(); n];
    for i in 0..rule.len() {
        let y = rule.point(i);
        for j in 0..n {
            z[j] = m[j] + sd[j] * y[j];
        }
        let plus = phi(&z);
        let diff = match rule.kind {
            RuleKind::Quadrature => plus,
            RuleKind::Plain => plus - base,
            RuleKind::Antithetic => {
                for j in 0..n {
                    z[j] = m[j] - sd[j] * y[j];
                }
                0.5 * (plus - phi(&z))
            }
        };
        for j in 0..n {
            acc[j].add(rule.weights[i], y[j] * diff);
        }
    }
    let mut value = Vec::with_capacity(n);
    let mut se = Vec::with_capacity(n);
    for j in 0..n {
        let (v, var) = acc[j].finish(rule.kind, rule.len());
        value.push(c[j] * v);
        se.push(c[j] * var.sqrt());
    }
    Ok(GradEstimate { value, se })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOptions {
    /// Half-width of the box `[−R, R]^n`.
    pub radius: f64,
    pub nodes_per_axis: usize,
    #[serde(default = "time_nodes")]
    pub time_nodes: usize,
    pub tol: f64,
    #[serde(default = "max_iter")]
    pub max_iter: usize,
    pub sampler: Sampler,
}

fn time_nodes() -> usize {
    64
}
fn max_iter() -> usize {
    50
}

impl SolveOptions {
    pub fn new(radius: f64, nodes_per_axis: usize, tol: f64, sampler: Sampler) -> Self {
        SolveOptions { radius, nodes_per_axis, time_nodes: 64, tol, max_iter: 50, sampler }
    }
}

/// Values of `u` and `Du` on the tensor grid with iteration history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KolmogorovIterate {
    pub n: usize,
    pub k: usize,
    pub cbar: f64,
    pub radius: f64,
    pub nodes_per_axis: usize,
    pub t_max: f64,
    pub u: Vec<f64>,
    /// `du[j][node]` = `∂_j u` at the node.
    pub du: Vec<Vec<f64>>,
    /// Sup-norm change of `u` per sweep.
    pub deltas: Vec<f64>,
    pub ratios: Vec<f64>,
    pub converged: bool,
    /// Largest Monte Carlo standard error of `u` over nodes in the last sweep.
    pub max_se: f64,
}

impl KolmogorovIterate {
    pub fn n_nodes(&self) -> usize {
        self.u.len()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / (self.nodes_per_axis - 1) as f64
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        node_coords(idx, self.n, self.nodes_per_axis, self.radius)
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        let mut r = idx;
        (0..self.n)
            .map(|_| {
                let i = r % self.nodes_per_axis;
                r /= self.nodes_per_axis;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, mi: &[usize]) -> usize {
        mi.iter().rev().fold(0, |acc, &i| acc * self.nodes_per_axis + i)
    }

    pub fn interp_u(&self, x: &[f64]) -> f64 {
        interp(&self.u, x, self.n, self.nodes_per_axis, self.radius)
    }

    pub fn interp_du(&self, x: &[f64], out: &mut [f64]) {
        for j in 0..self.n {
            out[j] = interp(&self.du[j], x, self.n, self.nodes_per_axis, self.radius);
        }
    }

    pub fn sup_u(&self) -> f64 {
        self.u.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

fn node_coords(idx: usize, n: usize, npa: usize, r: f64) -> Vec<f64> {
    let h = 2.0 * r / (npa - 1) as f64;
    let mut rem = idx;
    (0..n)
        .map(|_| {
            let i = rem % npa;
            rem /= npa;
            -r + h * i as f64
        })
        .collect()
}

/// Multilinear interpolation, clamped to the box.
fn interp(vals: &[f64], x: &[f64], n: usize, npa: usize, r: f64) -> f64 {
    let h = 2.0 * r / (npa - 1) as f64;
    let mut base = 0usize;
    let mut stride = 1usize;
    let mut strides = [0usize; MAX_MODES];
    let mut frac = [0.0; MAX_MODES];
    for j in 0..n {
        let s = ((x[j].clamp(-r, r) + r) / h).min((npa - 1) as f64);
        let i = (s.floor() as usize).min(npa - 2);
        frac[j] = s - i as f64;
        base += i * stride;
        strides[j] = stride;
        stride *= npa;
    }
    let mut total = 0.0;
    for corner in 0..(1usize << n) {
        let mut w = 1.0;
        let mut idx = base;
        for j in 0..n {
            if corner >> j & 1 == 1 {
                w *= frac[j];
                idx += strides[j];
            } else {
                w *= 1.0 - frac[j];
            }
        }
        if w != 0.0 {
            total += w * vals[idx];
        }
    }
    total
}

/// Time nodes `t_i = t_max s_i²` and weights of `∫₀^{t_max} · dt` from Gauss–Legendre in `s`.
pub fn time_rule(t_max: f64, nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = NonZeroUsize::new(nodes).ok_or_else(|| Error::Parameter("time quadrature needs nodes >= 1".into()))?;
    let gl = GaussLegendre::new(p);
    let mut ts = Vec::with_capacity(nodes);
    let mut ws = Vec::with_capacity(nodes);
    for &(x, w) in gl.as_node_weight_pairs() {
        let s = 0.5 * (x + 1.0);
        ts.push(t_max * s * s);
        ws.push(w * t_max * s);
    }
    Ok((ts, ws))
}

/// `t_max` with `e^{-c̄λ_k t_max} = tol/10`.
pub fn horizon(problem: &KolmogorovProblem, tol: f64) -> f64 {
    (10.0 / tol).ln() / problem.rate()
}

struct TimeSlice {
    t: f64,
    weight: f64,
    rule: Rule,
    sd: Vec<f64>,
    /// `e^{-tλ_j}/√q_j`
    grad: Vec<f64>,
}

/// Picard iteration `u ← 𝒱u` on the tensor grid.
pub fn solve_u(problem: &KolmogorovProblem, opts: &SolveOptions) -> Result<KolmogorovIterate> {
    let n = problem.n();
    if opts.nodes_per_axis < 2 || !(opts.radius > 0.0) {
        return Err(Error::Parameter("grid needs radius > 0 and at least 2 nodes per axis".into()));
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::Parameter("tol must lie in (0,1)".into()));
    }
    let t_max = horizon(problem, opts.tol);
    let (ts, ws) = time_rule(t_max, opts.time_nodes)?;
    let l = problem.op.eigenvalues().to_vec();
    let rate = problem.rate();
    // common random numbers: each time node gets its own fixed block of draws
    let per_time = match opts.sampler {
        Sampler::MonteCarlo { samples, antithetic, seed } => {
            Some(Sampler::MonteCarlo { samples: (samples / opts.time_nodes).max(2), antithetic, seed })
        }
        s @ Sampler::Hermite { .. } => {
            let _ = s;
            None
        }
    };
    let shared = match opts.sampler {
        Sampler::Hermite { .. } => Some(Rule::from_sampler(n, &opts.sampler, 0)?),
        _ => None,
    };
    let slices: Vec<TimeSlice> = ts
        .iter()
        .zip(&ws)
        .enumerate()
        .map(|(i, (&t, &w))| {
            let rule = match (&shared, &per_time) {
                (Some(r), _) => r.clone(),
                (None, Some(s)) => {
                    let r = Rule::from_sampler(n, s, 0)?;
                    Rule::from_sampler(n, s, (i * r.len()) as u64)?
                }
                _ => unreachable!(),
            };
            let sd: Vec<f64> = (1..=n).map(|j| problem.q(j, t).sqrt()).collect();
            let grad = (0..n).map(|j| (-t * l[j]).exp() / sd[j]).collect();
            Ok(TimeSlice { t, weight: w * (-rate * t).exp(), rule, sd, grad })
        })
        .collect::<Result<_>>()?;

    let npa = opts.nodes_per_axis;
    let n_nodes = npa.pow(n as u32);
    let mut it = KolmogorovIterate {
        n,
        k: problem.k,
        cbar: problem.cbar,
        radius: opts.radius,
        nodes_per_axis: npa,
        t_max,
        u: vec![0.0; n_nodes],
        du: vec![vec![0.0; n_nodes]; n],
        deltas: Vec::new(),
        ratios: Vec::new(),
        converged: false,
        max_se: 0.0,
    };
    let mut above_one = 0;
    for sweep in 0..opts.max_iter {
        let prev = &it;
        let results: Vec<(f64, Vec<f64>, f64)> = (0..n_nodes)
            .into_par_iter()
            .map_init(
                || (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]),
                |(x, m, z, du, scratch), idx| {
                    let xc = node_coords(idx, n, npa, opts.radius);
                    x.copy_from_slice(&xc);
                    node_update(problem, prev, &slices, x, m, z, du, scratch, sweep == 0)
                },
            )
            .collect();
        let mut delta: f64 = 0.0;
        let mut max_se: f64 = 0.0;
        let mut new_du = vec![vec![0.0; n_nodes]; n];
        let mut new_u = vec![0.0; n_nodes];
        for (idx, (u, g, se)) in results.into_iter().enumerate() {
            delta = delta.max((u - it.u[idx]).abs());
            max_se = max_se.max(se);
            new_u[idx] = u;
            for j in 0..n {
                new_du[j][idx] = g[j];
            }
        }
        if !delta.is_finite() {
            return Err(Error::Divergence(format!("non-finite update in sweep {}", sweep + 1)));
        }
        it.u = new_u;
        it.du = new_du;
        it.max_se = max_se;
        let floor = 64.0 * f64::EPSILON * it.sup_u();
        if let Some(&last) = it.deltas.last() {
            if last > floor {
                let r = delta / last;
                it.ratios.push(r);
                above_one = if r >= 1.0 { above_one + 1 } else { 0 };
                if above_one >= 3 {
                    return Err(Error::Divergence(format!(
                        "contraction ratio >= 1 for 3 consecutive sweeps (last {r:.3}); increase cbar"
                    )));
                }
            }
        }
        it.deltas.push(delta);
        if delta < opts.tol.max(floor) {
            it.converged = true;
            break;
        }
    }
    Ok(it)
}

#[allow(clippy::too_many_arguments)]
fn node_update(
    problem: &KolmogorovProblem,
    prev: &KolmogorovIterate,
    slices: &[TimeSlice],
    x: &[f64],
    m: &mut [f64],
    z: &mut [f64],
    du: &mut [f64],
    scratch: &mut [f64],
    first: bool,
) -> (f64, Vec<f64>, f64) {
    let n = x.len();
    let use_drift = !problem.drift_is_zero() && !first;
    let f = |z: &[f64], du: &mut [f64], scratch: &mut [f64]| {
        let mut v = problem.g(z, scratch);
        if use_drift {
            prev.interp_du(z, du);
            v += problem.drift_pairing(z, du, scratch);
        }
        v
    };
    let mut u = 0.0;
    let mut var = 0.0;
    let mut grad = vec![0.0; n];
    for s in slices {
        problem.mean_into(s.t, x, m);
        let rule = &s.rule;
        let mut acc = Acc::default();
        let mut gacc = [Acc::default(); MAX_MODES];
        let base = if rule.kind == RuleKind::Plain { f(m, du, scratch) } else { 0.0 };
        for i in 0..rule.len() {
            let y = rule.point(i);
            for j in 0..n {
                z[j] = m[j] + s.sd[j] * y[j];
            }
            let plus = f(z, du, scratch);
            let (val, diff) = match rule.kind {
                RuleKind::Quadrature => (plus, plus),
                RuleKind::Plain => (plus, plus - base),
                RuleKind::Antithetic => {
                    for j in 0..n {
                        z[j] = m[j] - s.sd[j] * y[j];
                    }
                    let minus = f(z, du, scratch);
                    (0.5 * (plus + minus), 0.5 * (plus - minus))
                }
            };
            let w = rule.weights[i];
            acc.add(w, val);
            for j in 0..n {
                gacc[j].add(w, y[j] * diff);
            }
        }
        let (e, v) = acc.finish(rule.kind, rule.len());
        u += s.weight * e;
        var += s.weight * s.weight * v;
        for j in 0..n {
            grad[j] += s.weight * s.grad[j] * gacc[j].finish(rule.kind, rule.len()).0;
        }
    }
    (u, grad, var.sqrt())
}

/// Closed-form `u` for zero drift and polynomial forcing.
pub fn closed_form(problem: &KolmogorovProblem, x: &[f64]) -> Option<f64> {
    if !problem.drift_is_zero() {
        return None;
    }
    let r = problem.rate();
    match problem.forcing {
        Forcing::One => Some(1.0 / r),
        Forcing::Linear(j) => Some(x[j - 1] / (r + problem.op.lambda(j))),
        Forcing::Square(j) => {
            let l = problem.op.lambda(j);
            let c = l.powf(-1.0 - 2.0 * problem.delta) / 2.0;
            Some(x[j - 1].powi(2) / (r + 2.0 * l) + c * (1.0 / r - 1.0 / (r + 2.0 * l)))
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub max_abs: f64,
    pub rms: f64,
    pub interior_nodes: usize,
}

/// Finite-difference residual of
/// `c̄λ_k u − ½Σλ_j^{-2δ}∂²_j u + Σλ_j x_j ∂_j u − ⟨B_n − z0, Du⟩ − g` at interior nodes.
pub fn generator_residual(problem: &KolmogorovProblem, it: &KolmogorovIterate) -> Result<Residual> {
    let n = it.n;
    if it.nodes_per_axis < 3 {
        return Err(Error::Parameter("residual needs at least 3 nodes per axis".into()));
    }
    let h = it.spacing();
    let l = problem.op.eigenvalues();
    let mut scratch = vec![0.0; n];
    let mut d1 = vec![0.0; n];
    let (mut max_abs, mut sum_sq, mut count) = (0.0f64, 0.0, 0usize);
    for idx in 0..it.n_nodes() {
        let mi = it.multi_index(idx);
        if mi.iter().any(|&i| i == 0 || i == it.nodes_per_axis - 1) {
            continue;
        }
        let x = it.node(idx);
        let u0 = it.u[idx];
        let mut lap = 0.0;
        let mut transport = 0.0;
        for j in 0..n {
            let mut p = mi.clone();
            p[j] += 1;
            let up = it.u[it.flat_index(&p)];
            p[j] -= 2;
            let um = it.u[it.flat_index(&p)];
            d1[j] = (up - um) / (2.0 * h);
            lap += 0.5 * l[j].powf(-2.0 * problem.delta) * (up - 2.0 * u0 + um) / (h * h);
            transport += l[j] * x[j] * d1[j];
        }
        let r = problem.rate() * u0 - lap + transport
            - problem.drift_pairing(&x, &d1, &mut scratch)
            - problem.g(&x, &mut scratch);
        max_abs = max_abs.max(r.abs());
        sum_sq += r * r;
        count += 1;
    }
    Ok(Residual { max_abs, rms: (sum_sq / count.max(1) as f64).sqrt(), interior_nodes: count })
}

/// Setup shared by all `(n, k)` in a monitor sweep; forcing is `g_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSetup {
    pub basis: crate::spectral::Basis,
    #[serde(default = "one")]
    pub power: f64,
    #[serde(default)]
    pub delta: f64,
    pub drift: DriftSpec,
    #[serde(default = "two")]
    pub safety: f64,
    #[serde(default = "one")]
    pub m: f64,
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    #[serde(default = "zero_list")]
    pub gammas1: Vec<f64>,
    #[serde(default)]
    pub gammas2: Vec<f64>,
    pub solve: SolveOptions,
}

fn zero_list() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorCase {
    pub n: usize,
    pub k: usize,
    pub cbar: f64,
    pub sweeps: usize,
    pub ratios: Vec<f64>,
    pub est0: f64,
    /// `(γ, constant)` pairs.
    pub est1: Vec<(f64, f64)>,
    pub est2: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorReport {
    pub theta: f64,
    pub beta: f64,
    pub delta: f64,
    pub m: f64,
    pub exponent1: Vec<(f64, f64)>,
    pub exponent2: Vec<(f64, f64)>,
    pub cases: Vec<MonitorCase>,
    /// Largest over smallest constant across `n`, per estimate, `k` and `γ`.
    pub spreads: Vec<Spread>,
    pub nonuniform: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spread {
    pub estimate: String,
    pub k: usize,
    pub gamma: f64,
    pub ratio: f64,
}

/// `(1+θ)/2 − γ − (1−θ)δ`, for `γ ∈ [0, β]`.
pub fn est1_exponent(theta: f64, beta: f64, delta: f64, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0 && gamma <= beta + 1e-15) {
        return Err(Error::Range(format!("est1 needs gamma in [0, beta] = [0, {beta}], got {gamma}")));
    }
    Ok((1.0 + theta) / 2.0 - gamma - (1.0 - theta) * delta)
}

/// `θ/2 − γ − δ(2−θ)`, for `(1−θ)δ < θ/2` and `γ ∈ [−δ, θ/2 − δ(2−θ))`.
pub fn est2_exponent(theta: f64, delta: f64, gamma: f64) -> Result<f64> {
    if (1.0 - theta) * delta >= theta / 2.0 {
        return Err(Error::Range(format!("est2 needs (1-theta)delta < theta/2, got theta={theta}, delta={delta}")));
    }
    let e = theta / 2.0 - gamma - delta * (2.0 - theta);
    if gamma < -delta || e <= 0.0 {
        return Err(Error::Range(format!(
            "est2 needs gamma in [{}, {}), got {gamma}",
            -delta,
            theta / 2.0 - delta * (2.0 - theta)
        )));
    }
    Ok(e)
}

/// Operator 2-norm of a small square matrix (row-major) by power iteration on `MᵀM`.
fn spectral_norm(a: &[f64], n: usize) -> f64 {
    let mut v = vec![1.0; n];
    let mut s = 0.0;
    for _ in 0..50 {
        let av: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect();
        let w: Vec<f64> = (0..n).map(|j| (0..n).map(|i| a[i * n + j] * av[i]).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        s = norm.sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    s
}

/// Empirical constants of the uniform estimates across an `(n, k)` sweep.
pub fn estimate_monitor(setup: &MonitorSetup) -> Result<MonitorReport> {
    if setup.ns.is_empty() || setup.ks.is_empty() {
        return Err(Error::Parameter("monitor sweep needs at least one n and one k".into()));
    }
    let probe = SpectralOperator::new(setup.basis, *setup.ns.iter().max().unwrap(), setup.power)?;
    let meta = setup.drift.metadata(&probe);
    let theta = meta.theta.unwrap_or(0.5);
    let beta = meta.beta;
    let delta = setup.delta;
    let exponent1: Vec<(f64, f64)> = setup
        .gammas1
        .iter()
        .map(|&g| est1_exponent(theta, beta, delta, g).map(|e| (g, e)))
        .collect::<Result<_>>()?;
    let exponent2: Vec<(f64, f64)> = setup
        .gammas2
        .iter()
        .map(|&g| est2_exponent(theta, delta, g).map(|e| (g, e)))
        .collect::<Result<_>>()?;
    let mut cases = Vec::new();
    for &n in &setup.ns {
        let op = SpectralOperator::new(setup.basis, n, setup.power)?;
        for &k in setup.ks.iter().filter(|&&k| k <= n) {
            let p = KolmogorovProblem::new(&op, delta, &setup.drift, Forcing::Drift, k, None, setup.safety, setup.m, KRegime::SubCritical)?;
            let it = solve_u(&p, &setup.solve)?;
            let g_norm = p.forcing_norm(setup.solve.radius);
            let ck = p.rate();
            let l = op.eigenvalues();
            let est0 = it.sup_u() / g_norm;
            let est1 = exponent1
                .iter()
                .map(|&(g, e)| {
                    let sup = (0..it.n_nodes())
                        .map(|idx| (0..n).map(|j| (l[j].powf(g) * it.du[j][idx]).powi(2)).sum::<f64>().sqrt())
                        .fold(0.0, f64::max);
                    (g, sup * ck.powf(e) / g_norm)
                })
                .collect();
            let est2 = exponent2.iter().map(|&(g, e)| (g, second_derivative_sup(&it, l, g) * ck.powf(e) / g_norm)).collect();
            cases.push(MonitorCase {
                n,
                k,
                cbar: p.cbar(),
                sweeps: it.deltas.len(),
                ratios: it.ratios.clone(),
                est0,
                est1,
                est2,
            });
        }
    }
    let mut spreads = Vec::new();
    for &k in &setup.ks {
        let sel: Vec<&MonitorCase> = cases.iter().filter(|c| c.k == k).collect();
        if sel.len() < 2 {
            continue;
        }
        let mut push = |name: &str, gamma: f64, vals: Vec<f64>| {
            let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
            let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
            spreads.push(Spread { estimate: name.into(), k, gamma, ratio: if lo > 0.0 { hi / lo } else { f64::INFINITY } });
        };
        push("est0", 0.0, sel.iter().map(|c| c.est0).collect());
        for (i, &(g, _)) in exponent1.iter().enumerate() {
            push("est1", g, sel.iter().map(|c| c.est1[i].1).collect());
        }
        for (i, &(g, _)) in exponent2.iter().enumerate() {
            push("est2", g, sel.iter().map(|c| c.est2[i].1).collect());
        }
    }
    let nonuniform = spreads.iter().any(|s| s.ratio > 2.0);
    Ok(MonitorReport { theta, beta, delta, m: setup.m, exponent1, exponent2, cases, spreads, nonuniform })
}

/// `sup ‖D(A^γ Du)‖` over interior nodes by central differences of stored `Du`.
fn second_derivative_sup(it: &KolmogorovIterate, l: &[f64], gamma: f64) -> f64 {
    let n = it.n;
    let h = it.spacing();
    let mut sup: f64 = 0.0;
    let mut mat = vec![0.0; n * n];
    for idx in 0..it.n_nodes() {
        let mi = it.multi_index(idx);
        if mi.iter().any(|&i| i == 0 || i == it.nodes_per_axis - 1) {
            continue;
        }
        for c in 0..n {
            let mut p = mi.clone();
            p[c] += 1;
            let ip = it.flat_index(&p);
            p[c] -= 2;
            let im = it.flat_index(&p);
            for r in 0..n {
                mat[r * n + c] = l[r].powf(gamma) * (it.du[r][ip] - it.du[r][im]) / (2.0 * h);
            }
        }
        sup = sup.max(spectral_norm(&mat, n));
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::ScalarFn;
    use std::f64::consts::PI;

    fn heat(n: usize, delta: f64, forcing: Forcing, k: usize, cbar: f64) -> KolmogorovProblem {
        let op = SpectralOperator::dirichlet(n, 1.0).unwrap();
        KolmogorovProblem::new(&op, delta, &DriftSpec::zero(), forcing, k, Some(cbar), 2.0, 1.0, KRegime::SubCritical).unwrap()
    }

    fn base_input() -> CbarInput {
        CbarInput { lambda1: PI * PI, alpha: 0.0, beta: 0.0, delta: 0.0, theta: 0.5, c_b: 1.0, m: 1.0, c_b_tilde: None }
    }

    #[test]
    fn cbar_subcritical_example() {
        let b = cbar_bound(&base_input()).unwrap();
        // max{4/π², (4√π)²/π²} = 16/π
        assert!((b - 16.0 / PI).abs() < 1e-12);
        assert!((b - 5.093).abs() < 1e-3);
        assert!((cbar(&base_input(), 2.0).unwrap() - 2.0 * b).abs() < 1e-12);
        let tiny = CbarInput { c_b: 1e-9, ..base_input() };
        assert!(cbar_bound(&tiny).unwrap() < 1e-8);
    }

    #[test]
    fn cbar_regime_mismatch() {
        let crit = CbarInput { delta: 0.5, ..base_input() };
        assert!(matches!(cbar_bound(&crit), Err(Error::Regime(_))));
        let thr = critical_threshold(&crit);
        assert!((thr - 0.25 / (4.0 * 1.5)).abs() < 1e-15);
        let ok = CbarInput { c_b_tilde: Some(0.99 * thr), ..crit };
        let v = cbar_bound(&ok).unwrap();
        assert!(v.is_finite() && v > 8.0 / (PI * PI));
        assert!(matches!(cbar_bound(&CbarInput { c_b_tilde: Some(thr), ..crit }), Err(Error::Regime(_))));
        assert!(matches!(cbar_bound(&CbarInput { c_b_tilde: Some(0.0), ..base_input() }), Err(Error::Regime(_))));
    }

    #[test]
    fn expectation_examples() {
        let p = heat(2, 0.0, Forcing::One, 1, 1.0);
        let mc = Sampler::MonteCarlo { samples: 4000, antithetic: true, seed: 3 };
        let x = [0.7, -0.4];
        let e = ou_expect(&p, 0.1, &|_| 1.0, &x, &mc).unwrap();
        assert_eq!((e.value, e.se), (1.0, 0.0));
        let e = ou_expect(&p, 0.1, &|y| y[1], &x, &mc).unwrap();
        assert!((e.value - (-0.1 * 4.0 * PI * PI).exp() * -0.4).abs() < 1e-14);
        let plain = Sampler::MonteCarlo { samples: 4000, antithetic: false, seed: 3 };
        let want = (-0.2 * PI * PI).exp() * 0.49 + p.q(1, 0.1);
        for s in [mc, plain] {
            let e = ou_expect(&p, 0.1, &|y| y[0] * y[0], &x, &s).unwrap();
            assert!((e.value - want).abs() < 4.0 * e.se, "{e:?} vs {want}");
        }
        let gh = ou_expect(&p, 0.1, &|y| y[0] * y[0], &x, &Sampler::Hermite { points: 3 }).unwrap();
        assert!((gh.value - want).abs() < 1e-14);
        assert!(ou_expect(&p, 0.0, &|_| 1.0, &x, &mc).is_err());
        assert!(ou_expect(&p, 0.1, &|_| 1.0, &x, &Sampler::MonteCarlo { samples: 1, antithetic: false, seed: 0 }).is_err());
    }

    #[test]
    fn gradient_examples() {
        let p = heat(3, 0.2, Forcing::One, 1, 1.0);
        let x = [0.1, 0.2, 0.3];
        let mc = Sampler::MonteCarlo { samples: 1000, antithetic: true, seed: 1 };
        let g = ou_gradient(&p, 0.05, &|_| 2.5, &x, 0.0, &mc).unwrap();
        assert!(g.value.iter().all(|v| *v == 0.0));
        let g = ou_gradient(&p, 0.05, &|y| y[1], &x, 0.0, &mc).unwrap();
        let want = (-0.05 * 4.0 * PI * PI).exp();
        assert!((g.value[1] - want).abs() < 4.0 * g.se[1] + 1e-12);
        assert!(g.value[0].abs() <= 4.0 * g.se[0] + 1e-12);
        let h = ou_gradient(&p, 0.05, &|y| y[1], &x, 0.5, &Sampler::Hermite { points: 2 }).unwrap();
        assert!((h.value[1] - 2.0 * PI * want).abs() < 1e-12);
        assert!(h.value[0].abs() < 1e-12 && h.value[2].abs() < 1e-12);
    }

    #[test]
    fn time_rule_integrates_exponentials() {
        let (ts, ws) = time_rule(2.0, 64).unwrap();
        let got: f64 = ts.iter().zip(&ws).map(|(t, w)| w * (-3.0 * t).exp()).sum();
        assert!((got - (1.0 - (-6.0f64).exp()) / 3.0).abs() < 1e-13);
        let sing: f64 = ts.iter().zip(&ws).map(|(t, w)| w / t.sqrt()).sum();
        assert!((sing - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn interpolation_reproduces_multilinear() {
        let npa = 5;
        let r = 2.0;
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1];
        let vals: Vec<f64> = (0..npa * npa).map(|i| f(&node_coords(i, 2, npa, r))).collect();
        for x in [[0.3, -1.7], [2.0, 2.0], [-0.05, 0.9]] {
            assert!((interp(&vals, &x, 2, npa, r) - f(&x)).abs() < 1e-12);
        }
        assert!((interp(&vals, &[5.0, 0.0], 2, npa, r) - f(&[2.0, 0.0])).abs() < 1e-12);
    }

    #[test]
    fn linear_forcing_closed_form() {
        let p = heat(2, 0.0, Forcing::Linear(2), 1, 1.5);
        let opts = SolveOptions::new(1.0, 5, 1e-8, Sampler::Hermite { points: 2 });
        let it = solve_u(&p, &opts).unwrap();
        assert!(it.converged);
        for idx in 0..it.n_nodes() {
            let x = it.node(idx);
            let want = closed_form(&p, &x).unwrap();
            assert!((it.u[idx] - want).abs() < 1e-8, "{x:?}");
            assert!((it.du[1][idx] - 1.0 / (p.rate() + 4.0 * PI * PI)).abs() < 1e-8);
        }
    }

    #[test]
    fn even_forcing_gives_even_solution() {
        let p = heat(2, 0.25, Forcing::Square(1), 2, 1.0);
        let it = solve_u(&p, &SolveOptions::new(1.0, 5, 1e-8, Sampler::MonteCarlo { samples: 640, antithetic: true, seed: 9 })).unwrap();
        for idx in 0..it.n_nodes() {
            let mut mi = it.multi_index(idx);
            mi[0] = it.nodes_per_axis - 1 - mi[0];
            assert!((it.u[idx] - it.u[it.flat_index(&mi)]).abs() < 1e-12);
        }
    }

    #[test]
    fn monitor_ranges() {
        assert!(est1_exponent(0.5, 0.0, 0.0, 0.1).is_err());
        assert!((est1_exponent(0.5, 0.25, 0.2, 0.25).unwrap() - (0.75 - 0.25 - 0.1)).abs() < 1e-15);
        assert!(matches!(est2_exponent(0.5, 0.0, 0.25), Err(Error::Range(_))));
        assert!(matches!(est2_exponent(0.2, 0.2, 0.0), Err(Error::Range(_))));
        assert!((est2_exponent(0.5, 0.0, 0.1).unwrap() - 0.15).abs() < 1e-15);
    }

    #[test]
    fn problem_validation() {
        let op = SpectralOperator::dirichlet(5, 1.0).unwrap();
        let z = DriftSpec::zero();
        let mk = |op: &SpectralOperator, d: &DriftSpec, c: Option<f64>| {
            KolmogorovProblem::new(op, 0.0, d, Forcing::One, 1, c, 2.0, 1.0, KRegime::SubCritical)
        };
        assert!(matches!(mk(&op, &z, Some(1.0)), Err(Error::Dimension(_))));
        let op = SpectralOperator::dirichlet(2, 1.0).unwrap();
        assert!(mk(&op, &z, None).is_err());
        let bh = DriftSpec::composition(ScalarFn::BoundedHolder { theta: 0.5 }, 0.0, 0.0);
        let p = mk(&op, &bh, None).unwrap();
        let c_b = 1.0 + 2f64.sqrt();
        let want = 2.0 * (4.0 * c_b * PI.sqrt()).powi(2) / (PI * PI);
        assert!((p.cbar() - want).abs() < 1e-9 * want);
        assert!(mk(&op, &bh, Some(want / 4.0)).is_err());
        let ph = DriftSpec::composition(ScalarFn::PowerHolder { theta: 0.5 }, 0.0, 0.0);
        assert!(mk(&op, &ph, Some(100.0)).is_err());
    }
}
