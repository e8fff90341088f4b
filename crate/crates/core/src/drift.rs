//! Drift catalog: compositions `A_D^ν F(A_D^μ ·)`, Burgers, Cahn–Hilliard and
//! reaction–diffusion nonlinearities, with regime metadata.
//!
//! The drift `B` enters as `dX = (−AX + B(X)) dt + A^{-δ} dW`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseStream;
use crate::spectral::{Basis, Collocation, ModeVector, SpectralOperator};

/// Scalar functions applied pointwise on the collocation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFn {
    /// `sign(u)|u|^θ`
    PowerHolder { theta: f64 },
    /// `sign(u)·min(1, |u|^θ)`
    BoundedHolder { theta: f64 },
    Sine,
    Const { c: f64 },
}

impl ScalarFn {
    #[inline]
    pub fn apply(&self, u: f64) -> f64 {
        match *self {
            ScalarFn::PowerHolder { theta } => u.signum() * u.abs().powf(theta),
            ScalarFn::BoundedHolder { theta } => u.signum() * u.abs().powf(theta).min(1.0),
            ScalarFn::Sine => u.sin(),
            ScalarFn::Const { c } => c,
        }
    }

    pub fn bounded(&self) -> bool {
        !matches!(self, ScalarFn::PowerHolder { .. })
    }

    /// Hölder exponent; `None` means any exponent works (constant).
    pub fn theta(&self) -> Option<f64> {
        match *self {
            ScalarFn::PowerHolder { theta } | ScalarFn::BoundedHolder { theta } => Some(theta),
            ScalarFn::Sine => Some(1.0),
            ScalarFn::Const { .. } => None,
        }
    }

    /// `(sup |F|, [F]_θ)` where known in closed form.
    pub fn bounds(&self) -> (Option<f64>, f64) {
        match *self {
            ScalarFn::PowerHolder { theta } => (None, 2f64.powf(1.0 - theta)),
            ScalarFn::BoundedHolder { theta } => (Some(1.0), 2f64.powf(1.0 - theta)),
            ScalarFn::Sine => (Some(1.0), 1.0),
            ScalarFn::Const { c } => (Some(c.abs()), 0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ScalarFn::PowerHolder { theta } | ScalarFn::BoundedHolder { theta }
                if !(theta > 0.0 && theta < 1.0) =>
            {
                Err(Error::Config(format!("Hölder exponent must lie in (0,1), got {theta}")))
            }
            ScalarFn::Const { c } if !c.is_finite() => Err(Error::Config("non-finite constant".into())),
            _ => Ok(()),
        }
    }
}

/// Which field a pointwise perturbation `F₂` is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Argument {
    #[default]
    Value,
    Gradient,
    Laplacian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    Zero,
    Composition,
    Burgers1d,
    CahnHilliard1d,
    ReactionDiffusion1d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub kind: DriftKind,
    /// Composition: the function `F`. PDE kinds: optional bounded perturbation `F₂`.
    #[serde(default)]
    pub f: Option<ScalarFn>,
    #[serde(default)]
    pub f_argument: Argument,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub nu: f64,
    /// Polynomial `F₁(u) = Σ c_i u^i` (Cahn–Hilliard, reaction–diffusion).
    #[serde(default)]
    pub f1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftMetadata {
    pub alpha: f64,
    pub beta: f64,
    /// `None`: any exponent in (0,1) applies.
    pub theta: Option<f64>,
    pub bounded: bool,
    pub sup_bound: Option<f64>,
    pub seminorm_bound: Option<f64>,
    /// `‖B‖_{C^θ_b}` bound (sup + seminorm) where analytic.
    pub c_b: Option<f64>,
    pub note: Option<String>,
}

impl DriftSpec {
    pub fn zero() -> Self {
        DriftSpec {
            kind: DriftKind::Zero,
            f: None,
            f_argument: Argument::Value,
            mu: 0.0,
            nu: 0.0,
            f1: Vec::new(),
        }
    }

    pub fn composition(f: ScalarFn, mu: f64, nu: f64) -> Self {
        DriftSpec { kind: DriftKind::Composition, f: Some(f), mu, nu, ..Self::zero() }
    }

    /// Burgers transport with the regime exponents `(μ, ν)` chosen for the analysis.
    pub fn burgers(mu: f64, nu: f64) -> Self {
        DriftSpec { kind: DriftKind::Burgers1d, mu, nu, ..Self::zero() }
    }

    pub fn cahn_hilliard(f1: Vec<f64>) -> Self {
        DriftSpec { kind: DriftKind::CahnHilliard1d, f1, ..Self::zero() }
    }

    pub fn reaction_diffusion(f1: Vec<f64>) -> Self {
        DriftSpec { kind: DriftKind::ReactionDiffusion1d, f1, ..Self::zero() }
    }

    pub fn with_perturbation(mut self, f: ScalarFn, arg: Argument) -> Self {
        self.f = Some(f);
        self.f_argument = arg;
        self
    }

    pub fn validate(&self, op: &SpectralOperator) -> Result<()> {
        let basis = op.basis();
        if let Some(f) = &self.f {
            f.validate()?;
        }
        if !(self.mu >= 0.0 && self.nu >= 0.0) {
            return Err(Error::Config("mu and nu must be nonnegative".into()));
        }
        let need = |b: Basis, what: &str| {
            if basis != b {
                Err(Error::Config(format!("{what} requires the {b:?} basis, got {basis:?}")))
            } else {
                Ok(())
            }
        };
        match self.kind {
            DriftKind::Zero => Ok(()),
            DriftKind::Composition => {
                if self.f.is_none() {
                    return Err(Error::Config("composition drift needs f".into()));
                }
                if matches!(basis, Basis::Custom { .. }) {
                    return Err(Error::Config("composition drift needs a collocation basis".into()));
                }
                Ok(())
            }
            DriftKind::Burgers1d => {
                need(Basis::DirichletSine, "burgers_1d")?;
                self.check_perturbation()?;
                if !(self.mu > 0.0 && self.nu >= (0.75 - 2.0 * self.mu).max(0.0)) {
                    return Err(Error::Config(format!(
                        "burgers_1d exponents need mu > 0 and nu >= max(0, 3/4 - 2mu); got mu={}, nu={}",
                        self.mu, self.nu
                    )));
                }
                Ok(())
            }
            DriftKind::CahnHilliard1d => {
                need(Basis::NeumannShiftedCosine, "cahn_hilliard_1d")?;
                self.check_perturbation()?;
                if (op.power() - 2.0).abs() > 1e-12 {
                    return Err(Error::Config("cahn_hilliard_1d requires operator power 2".into()));
                }
                Ok(())
            }
            DriftKind::ReactionDiffusion1d => {
                need(Basis::DirichletSine, "reaction_diffusion_1d")?;
                self.check_perturbation()?;
                let deg = poly_degree(&self.f1);
                let odd = self.f1.iter().enumerate().all(|(i, c)| i % 2 == 1 || *c == 0.0);
                match deg {
                    Some(d) if d >= 3 && odd && self.f1[d] < 0.0 => Ok(()),
                    _ => Err(Error::Config(
                        "reaction_diffusion_1d needs an odd polynomial of degree >= 3 with negative leading coefficient"
                            .into(),
                    )),
                }
            }
        }
    }

    fn check_perturbation(&self) -> Result<()> {
        match self.f {
            Some(f) if !f.bounded() => Err(Error::Config("perturbation F2 must be bounded".into())),
            _ => Ok(()),
        }
    }

    pub fn metadata(&self, op: &SpectralOperator) -> DriftMetadata {
        let g = op.power();
        let pert = self.f.map(|f| f.bounds());
        match self.kind {
            DriftKind::Zero => DriftMetadata {
                alpha: 0.0,
                beta: 0.0,
                theta: None,
                bounded: true,
                sup_bound: Some(0.0),
                seminorm_bound: Some(0.0),
                c_b: Some(0.0),
                note: None,
            },
            DriftKind::Composition => {
                let f = self.f.unwrap_or(ScalarFn::Const { c: 0.0 });
                let (sup, semi) = f.bounds();
                DriftMetadata {
                    alpha: self.mu / g,
                    beta: self.nu / g,
                    theta: f.theta(),
                    bounded: f.bounded(),
                    sup_bound: sup,
                    seminorm_bound: Some(semi),
                    c_b: sup.map(|s| s + semi),
                    note: None,
                }
            }
            DriftKind::Burgers1d => DriftMetadata {
                alpha: self.mu / g,
                beta: self.nu / g,
                theta: None,
                bounded: false,
                sup_bound: None,
                seminorm_bound: None,
                c_b: None,
                note: Some("transport term is locally Lipschitz between the chosen spaces".into()),
            },
            DriftKind::CahnHilliard1d => DriftMetadata {
                alpha: 0.5,
                beta: 0.0,
                theta: None,
                bounded: false,
                sup_bound: None,
                seminorm_bound: pert.map(|p| p.1),
                c_b: None,
                note: Some("polynomial part is locally Lipschitz; perturbation is bounded".into()),
            },
            DriftKind::ReactionDiffusion1d => {
                let p = poly_degree(&self.f1).unwrap_or(0) as f64 + 1.0;
                let r = (p - 1.0).max(2.0);
                DriftMetadata {
                    alpha: (r - 2.0) / (4.0 * r),
                    beta: (2.0 * (p - 1.0) - r) / (4.0 * r),
                    theta: None,
                    bounded: false,
                    sup_bound: None,
                    seminorm_bound: pert.map(|p| p.1),
                    c_b: None,
                    note: Some(format!("exponents for d=1 with p = {p}, r = max(2, p-1) = {r}")),
                }
            }
        }
    }

    pub fn evaluator(&self, op: &SpectralOperator) -> Result<DriftEvaluator> {
        DriftEvaluator::new(self.clone(), op)
    }
}

fn poly_degree(c: &[f64]) -> Option<usize> {
    c.iter().rposition(|x| *x != 0.0)
}

fn poly_eval(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * u + a)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, a)| a * i as f64).collect()
}

/// Drift bound to an operator, with the collocation tables precomputed.
#[derive(Debug, Clone)]
pub struct DriftEvaluator {
    spec: DriftSpec,
    op: SpectralOperator,
    colloc: Option<Collocation>,
    const_coeffs: Option<Vec<f64>>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

fn constant_coefficients(basis: Basis, n: usize, c: f64) -> Vec<f64> {
    (1..=n)
        .map(|k| match basis {
            Basis::DirichletSine => {
                if k % 2 == 1 {
                    c * 2.0 * SQRT_2 / (k as f64 * PI)
                } else {
                    0.0
                }
            }
            _ => {
                if k == 1 {
                    c
                } else {
                    0.0
                }
            }
        })
        .collect()
}

impl DriftEvaluator {
    pub fn new(spec: DriftSpec, op: &SpectralOperator) -> Result<Self> {
        spec.validate(op)?;
        let n = op.n_modes();
        let const_coeffs = match (spec.kind, spec.f) {
            (DriftKind::Composition, Some(ScalarFn::Const { c })) => {
                let mut v = constant_coefficients(op.basis(), n, c);
                for (x, l) in v.iter_mut().zip(op.base_eigenvalues()) {
                    *x *= l.powf(spec.nu);
                }
                Some(v)
            }
            _ => None,
        };
        let colloc = match spec.kind {
            DriftKind::Zero => None,
            _ if const_coeffs.is_some() => None,
            _ => Some(op.collocation(2 * n)?),
        };
        let d1 = poly_deriv(&spec.f1);
        let d2 = poly_deriv(&d1);
        Ok(DriftEvaluator { spec, op: op.clone(), colloc, const_coeffs, d1, d2 })
    }

    pub fn spec(&self) -> &DriftSpec {
        &self.spec
    }

    pub fn operator(&self) -> &SpectralOperator {
        &self.op
    }

    pub fn n_points(&self) -> usize {
        self.colloc.as_ref().map_or(0, |c| c.n_points())
    }

    /// `P_n B(x)`.
    pub fn eval(&self, x: &ModeVector) -> Result<ModeVector> {
        let n = self.op.n_modes();
        if x.len() != n {
            return Err(Error::Dimension(format!("state has {} modes, operator {}", x.len(), n)));
        }
        let mut out = vec![0.0; n];
        self.eval_into(&x.coeffs, &mut out);
        let beta = self.spec.metadata(&self.op).beta;
        Ok(ModeVector { coeffs: out, sobolev_index: -beta })
    }

    /// Allocation-light evaluation on raw coefficient slices of length `n_modes`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        if let Some(c) = &self.const_coeffs {
            out.copy_from_slice(c);
            return;
        }
        let Some(col) = &self.colloc else {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        };
        let base = self.op.base_eigenvalues();
        match self.spec.kind {
            DriftKind::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            DriftKind::Composition => {
                let f = self.spec.f.expect("validated");
                let y: Vec<f64> = if self.spec.mu == 0.0 {
                    x.to_vec()
                } else {
                    x.iter().zip(base).map(|(a, l)| a * l.powf(self.spec.mu)).collect()
                };
                let mut u = col.values(&y, 0);
                u.iter_mut().for_each(|v| *v = f.apply(*v));
                col.project_into(&u, out);
                if self.spec.nu != 0.0 {
                    for (o, l) in out.iter_mut().zip(base) {
                        *o *= l.powf(self.spec.nu);
                    }
                }
            }
            DriftKind::Burgers1d => {
                let w = burgers_field(col, x);
                col.project_into(&w, out);
                out.iter_mut().for_each(|o| *o = -*o);
                self.add_perturbation(col, x, out);
            }
            DriftKind::CahnHilliard1d => {
                let u = col.values(x, 0);
                let u1 = col.values(x, 1);
                let u2 = col.values(x, 2);
                let w: Vec<f64> = (0..u.len())
                    .map(|j| {
                        poly_eval(&self.d2, u[j]) * u1[j] * u1[j] + poly_eval(&self.d1, u[j]) * u2[j]
                    })
                    .collect();
                col.project_into(&w, out);
                // φ − 2Δφ is diagonal: Δ e_k = −(λ°_k − 1) e_k on the shifted cosine basis
                for ((o, a), l) in out.iter_mut().zip(x).zip(base) {
                    *o += a * (1.0 + 2.0 * (l - 1.0));
                }
                self.add_perturbation(col, x, out);
            }
            DriftKind::ReactionDiffusion1d => {
                let mut u = col.values(x, 0);
                u.iter_mut().for_each(|v| *v = poly_eval(&self.spec.f1, *v));
                col.project_into(&u, out);
                self.add_perturbation(col, x, out);
            }
        }
    }

    fn add_perturbation(&self, col: &Collocation, x: &[f64], out: &mut [f64]) {
        let Some(f) = self.spec.f else { return };
        let order = match self.spec.f_argument {
            Argument::Value => 0,
            Argument::Gradient => 1,
            Argument::Laplacian => 2,
        };
        let mut v = col.values(x, order);
        v.iter_mut().for_each(|a| *a = f.apply(*a));
        let p = col.project(&v);
        for (o, a) in out.iter_mut().zip(p) {
            *o += a;
        }
    }
}

fn burgers_field(col: &Collocation, x: &[f64]) -> Vec<f64> {
    let u = col.values(x, 0);
    let ux = col.values(x, 1);
    u.iter().zip(&ux).map(|(a, b)| a * b).collect()
}

/// `P_n(u·u_x)` for `u = Σ x_k e_k` on the Dirichlet sine basis, computed on a
/// grid of `2n` points (exact for the quadratic product).
pub fn burgers_nonlinearity(op: &SpectralOperator, x: &ModeVector) -> Result<ModeVector> {
    if op.basis() != Basis::DirichletSine {
        return Err(Error::Config("burgers nonlinearity needs the Dirichlet sine basis".into()));
    }
    let col = op.collocation(2 * op.n_modes())?;
    let x = x.resized(op.n_modes());
    Ok(ModeVector::new(col.project(&burgers_field(&col, &x.coeffs))))
}

/// One-shot evaluation; prefer [`DriftEvaluator`] in loops.
pub fn eval(spec: &DriftSpec, op: &SpectralOperator, x: &ModeVector) -> Result<ModeVector> {
    spec.evaluator(op)?.eval(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderEstimate {
    /// Largest sampled quotient: a lower bound on the local seminorm.
    pub estimate: f64,
    pub analytic: Option<f64>,
    pub pairs: usize,
}

/// `max ‖B(x) − B(y)‖_{−β} / ‖x − y‖_α^θ` over the supplied pairs.
pub fn holder_quotient(
    ev: &DriftEvaluator,
    theta_test: f64,
    pairs: &[(ModeVector, ModeVector)],
) -> Result<f64> {
    let op = ev.operator();
    let m = ev.spec().metadata(op);
    let mut best: f64 = 0.0;
    for (x, y) in pairs {
        let dx = op.sobolev_norm(m.alpha, &x.sub(y))?;
        if dx == 0.0 {
            continue;
        }
        let db = op.sobolev_norm(-m.beta, &ev.eval(x)?.sub(&ev.eval(y)?))?;
        best = best.max(db / dx.powf(theta_test));
    }
    Ok(best)
}

/// Sample pairs in the `D(A^α)` ball of the given radius: random pairs,
/// pairs against the origin, antipodal pairs and close pairs, in rotation.
pub fn sample_pairs(
    op: &SpectralOperator,
    alpha: f64,
    radius: f64,
    n_pairs: usize,
    stream: &NoiseStream,
) -> Vec<(ModeVector, ModeVector)> {
    let n = op.n_modes();
    let point = |step: u64, scale: f64| {
        let g = stream.gaussians(step, n + 1);
        let norm = g[..n].iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        // radial fraction from the extra draw, via the normal CDF
        let u = 0.5 * (1.0 + statrs::function::erf::erf(g[n] / SQRT_2));
        let r = radius * scale * u.powf(1.0 / n as f64);
        ModeVector::new(
            g[..n]
                .iter()
                .zip(op.eigenvalues())
                .map(|(v, l)| v / norm * r * l.powf(-alpha))
                .collect(),
        )
    };
    (0..n_pairs)
        .map(|i| {
            let s = 3 * i as u64;
            let x = point(s, 1.0);
            match i % 4 {
                0 => (x, point(s + 1, 1.0)),
                1 => (x, ModeVector::zeros(n)),
                2 => {
                    let y = x.scaled(-1.0);
                    (x, y)
                }
                _ => {
                    let h = point(s + 2, 1e-3);
                    let y = x.sub(&h.scaled(-1.0));
                    (x, y)
                }
            }
        })
        .collect()
}

pub fn holder_estimate(
    spec: &DriftSpec,
    op: &SpectralOperator,
    theta_test: f64,
    radius: f64,
    n_pairs: usize,
    stream: &NoiseStream,
) -> Result<HolderEstimate> {
    if !(radius > 0.0) || n_pairs == 0 {
        return Err(Error::Parameter("radius must be positive and n_pairs >= 1".into()));
    }
    let ev = spec.evaluator(op)?;
    let m = spec.metadata(op);
    let pairs = sample_pairs(op, m.alpha, radius, n_pairs, stream);
    let estimate = holder_quotient(&ev, theta_test, &pairs)?;
    let analytic = if spec.kind == DriftKind::Zero {
        Some(0.0)
    } else {
        match (m.theta, m.seminorm_bound) {
            (Some(t), Some(s)) if (t - theta_test).abs() < 1e-12 => Some(s),
            _ => None,
        }
    };
    Ok(HolderEstimate { estimate, analytic, pairs: n_pairs })
}
