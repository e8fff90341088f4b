//! Exponential-Euler Galerkin simulation, truncation studies and coupling runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::{DriftEvaluator, DriftKind, DriftSpec};
use crate::error::{Error, Result};
use crate::noise::{variance_unchecked, DrawTally, NoiseStream};
use crate::regime::{self, ClassExtra, ExampleClass, RegimeParams, RegimeVerdict, Q};
use crate::spectral::{Basis, ModeVector, SpectralOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub basis: Basis,
    pub n_modes: usize,
    #[serde(default = "one")]
    pub power: f64,
}

fn one() -> f64 {
    1.0
}

impl OperatorSpec {
    pub fn build(&self) -> Result<SpectralOperator> {
        SpectralOperator::new(self.basis, self.n_modes, self.power)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub coeffs: Vec<f64>,
    /// Negative values describe rough data in `D(A^{-α̃})`.
    #[serde(default)]
    pub sobolev_index: f64,
}

impl InitialData {
    pub fn vector(&self, n: usize) -> ModeVector {
        let mut v = ModeVector::new(self.coeffs.clone()).resized(n);
        v.sobolev_index = self.sobolev_index;
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub operator: OperatorSpec,
    pub drift: DriftSpec,
    #[serde(default)]
    pub delta: f64,
    /// `false` switches the stochastic forcing off.
    #[serde(default = "yes")]
    pub noise: bool,
    pub horizon: f64,
    pub step: f64,
    /// Noise is generated on a grid `noise_substeps` times finer than `step`
    /// and aggregated exactly, so runs with `h` and `h/2` can share a path.
    #[serde(default = "one_usize")]
    pub noise_substeps: usize,
    pub save_times: Vec<f64>,
    pub initial: InitialData,
    #[serde(default = "one_usize")]
    pub ensemble: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_blowup")]
    pub blowup: f64,
    /// Sobolev index of the norms reported in ensemble statistics.
    #[serde(default)]
    pub norm_index: f64,
}

fn yes() -> bool {
    true
}
fn one_usize() -> usize {
    1
}
fn default_blowup() -> f64 {
    1e6
}

impl SimConfig {
    /// Defaults: no drift, cylindrical noise, save at the horizon.
    pub fn new(operator: OperatorSpec, horizon: f64, step: f64) -> Self {
        SimConfig {
            operator,
            drift: DriftSpec::zero(),
            delta: 0.0,
            noise: true,
            horizon,
            step,
            noise_substeps: 1,
            save_times: vec![horizon],
            initial: InitialData { coeffs: Vec::new(), sobolev_index: 0.0 },
            ensemble: 1,
            seed: 0,
            blowup: default_blowup(),
            norm_index: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::Config(format!("step must be positive, got {}", self.step)));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if self.ensemble == 0 || self.noise_substeps == 0 {
            return Err(Error::Config("ensemble and noise_substeps must be at least 1".into()));
        }
        self.save_indices()?;
        let op = self.operator.build()?;
        self.drift.validate(&op)?;
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    pub fn save_indices(&self) -> Result<Vec<usize>> {
        self.save_times
            .iter()
            .map(|&t| {
                let r = t / self.step;
                let j = r.round();
                if t < 0.0 || t > self.horizon * (1.0 + 1e-12) || (r - j).abs() > 1e-6 {
                    Err(Error::Config(format!(
                        "save time {t} is not a grid multiple of step {} within [0, horizon]",
                        self.step
                    )))
                } else {
                    Ok(j as usize)
                }
            })
            .collect()
    }
}

#[inline]
pub fn phi1(z: f64) -> f64 {
    if z < 1e-8 {
        1.0 - z / 2.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// Precomputed per-mode factors of the exponential-Euler map.
#[derive(Debug, Clone)]
pub struct Stepper {
    op: SpectralOperator,
    drift: DriftEvaluator,
    h: f64,
    substeps: usize,
    decay: Vec<f64>,
    drift_gain: Vec<f64>,
    // per fine substep: decay and noise std
    fine_decay: Vec<f64>,
    fine_std: Vec<f64>,
    noise: bool,
}

impl Stepper {
    pub fn new(op: &SpectralOperator, drift: &DriftSpec, delta: f64, h: f64, substeps: usize, noise: bool) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Parameter(format!("step must be positive, got {h}")));
        }
        let hf = h / substeps as f64;
        let l = op.eigenvalues();
        Ok(Stepper {
            op: op.clone(),
            drift: drift.evaluator(op)?,
            h,
            substeps,
            decay: l.iter().map(|x| (-x * h).exp()).collect(),
            drift_gain: l.iter().map(|x| h * phi1(x * h)).collect(),
            fine_decay: l.iter().map(|x| (-x * hf).exp()).collect(),
            fine_std: l.iter().map(|&x| variance_unchecked(x, delta, hf).sqrt()).collect(),
            noise,
        })
    }

    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        let op = cfg.operator.build()?;
        Self::new(&op, &cfg.drift, cfg.delta, cfg.step, cfg.noise_substeps, cfg.noise)
    }

    pub fn operator(&self) -> &SpectralOperator {
        &self.op
    }

    /// Advances `x` by one step; `step` indexes the coarse grid.
    pub fn advance(&self, x: &mut [f64], stream: &NoiseStream, step: usize, tally: &mut DrawTally, scratch: &mut Vec<f64>) -> Result<()> {
        let n = x.len();
        scratch.resize(n, 0.0);
        self.drift.eval_into(x, scratch);
        for k in 0..n {
            x[k] = self.decay[k] * x[k] + self.drift_gain[k] * scratch[k];
        }
        if self.noise {
            let mut z = vec![0.0; n];
            let mut acc = vec![0.0; n];
            for i in 0..self.substeps {
                stream.gaussians_into((step * self.substeps + i) as u64, &mut z);
                for k in 0..n {
                    tally.record(z[k]);
                    acc[k] = self.fine_decay[k] * acc[k] + self.fine_std[k] * z[k];
                }
            }
            for k in 0..n {
                x[k] += acc[k];
            }
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Simulation { step, message: format!("mode {} became non-finite", k + 1) });
        }
        Ok(())
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }
}

/// One exponential-Euler step of the configured system.
pub fn step(state: &ModeVector, cfg: &SimConfig, stream: &NoiseStream, step_index: usize) -> Result<ModeVector> {
    let st = Stepper::from_config(cfg)?;
    if state.len() != st.op.n_modes() {
        return Err(Error::Dimension(format!(
            "state has {} modes, operator {}",
            state.len(),
            st.op.n_modes()
        )));
    }
    let mut x = state.coeffs.clone();
    st.advance(&mut x, stream, step_index, &mut DrawTally::default(), &mut Vec::new())?;
    Ok(ModeVector { coeffs: x, sobolev_index: state.sobolev_index })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub trajectory_id: u64,
    pub states: Vec<ModeVector>,
    /// Step index at which the blow-up guard fired.
    pub truncated_at: Option<usize>,
    pub draws: u64,
    pub checksum: u64,
}

fn run_trajectory(st: &Stepper, x0: &ModeVector, n_steps: usize, save: &[usize], blowup: f64, stream: NoiseStream) -> Trajectory {
    let mut x = x0.coeffs.clone();
    let mut tally = DrawTally::default();
    let mut scratch = Vec::new();
    let mut states = Vec::with_capacity(save.len());
    let mut truncated_at = None;
    let mut next = 0;
    let record = |j: usize, x: &[f64], states: &mut Vec<ModeVector>, next: &mut usize| {
        while *next < save.len() && save[*next] == j {
            states.push(ModeVector::new(x.to_vec()));
            *next += 1;
        }
    };
    for j in 0..n_steps {
        record(j, &x, &mut states, &mut next);
        if next >= save.len() {
            break;
        }
        let ok = st.advance(&mut x, &stream, j, &mut tally, &mut scratch).is_ok();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !ok || !(norm <= blowup) {
            truncated_at = Some(j);
            break;
        }
    }
    if truncated_at.is_none() {
        record(n_steps, &x, &mut states, &mut next);
    }
    Trajectory {
        trajectory_id: stream.trajectory_id,
        states,
        truncated_at,
        draws: tally.count,
        checksum: tally.checksum,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeStats {
    pub t: f64,
    pub count: usize,
    pub mean_norm: f64,
    pub mean_norm_sq: f64,
    pub var_norm_sq: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Ensemble {
    pub times: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub stats: Vec<TimeStats>,
    pub checksum: u64,
    pub verdict: Option<RegimeVerdict>,
    pub warning: Option<String>,
}

fn combine_checksums(ts: &[Trajectory]) -> u64 {
    let mut tally = DrawTally::default();
    for t in ts {
        tally.record(f64::from_bits(t.checksum));
        for s in &t.states {
            for c in &s.coeffs {
                tally.record(*c);
            }
        }
    }
    tally.checksum
}

/// Nearest rational with denominator at most `max_den` (continued fractions).
pub fn approx_rational(x: f64, max_den: i64) -> Q {
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        let ai = a as i64;
        let (p2, q2) = (ai.saturating_mul(p1).saturating_add(p0), ai.saturating_mul(q1).saturating_add(q0));
        if q2 > max_den || q2 <= 0 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = v - a;
        if frac.abs() < 1e-12 {
            break;
        }
        v = 1.0 / frac;
    }
    if q1 == 0 {
        return regime::q(x.round() as i64, 1);
    }
    regime::q(p1, q1)
}

/// Regime tuple implied by a simulation setup (d = 1).
pub fn regime_params(drift: &DriftSpec, op: &SpectralOperator, delta: f64) -> RegimeParams {
    let m = drift.metadata(op);
    let g = op.power();
    let r = |x: f64| approx_rational(x, 1_000_000);
    let theta = match m.theta {
        Some(t) if t < 1.0 => r(t),
        _ => regime::q(1, 2),
    };
    let mut p = RegimeParams::heat(1, r(g), theta, r(m.alpha * g), r(m.beta * g), r(delta * g));
    p.drift_bounded = m.bounded;
    match drift.kind {
        DriftKind::Burgers1d => p = p.with_class(ExampleClass::Burgers),
        DriftKind::CahnHilliard1d => p = p.with_class(ExampleClass::CahnHilliard),
        DriftKind::ReactionDiffusion1d => {
            let deg = drift.f1.iter().rposition(|c| *c != 0.0).unwrap_or(0) as i64;
            let pp = regime::q(deg + 1, 1);
            let rr = std::cmp::max(regime::q(2, 1), regime::q(deg, 1));
            p = regime::reaction_diffusion_params(1, pp, rr, p.theta.clone(), p.rho.clone());
        }
        _ => {}
    }
    if let ClassExtra::ReactionDiffusion { .. } = p.extra {
        p.drift_bounded = false;
    }
    p
}

pub fn regime_verdict(cfg: &SimConfig) -> Result<RegimeVerdict> {
    let op = cfg.operator.build()?;
    regime::check(&regime_params(&cfg.drift, &op, cfg.delta))
}

fn time_stats(op: &SpectralOperator, sigma: f64, times: &[f64], trajs: &[Trajectory]) -> Vec<TimeStats> {
    times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let norms: Vec<f64> = trajs
                .iter()
                .filter_map(|tr| tr.states.get(i))
                .map(|s| op.sobolev_norm(sigma, s).unwrap_or(f64::NAN))
                .collect();
            let n = norms.len().max(1) as f64;
            let m1 = norms.iter().sum::<f64>() / n;
            let m2 = norms.iter().map(|x| x * x).sum::<f64>() / n;
            let v2 = norms.iter().map(|x| (x * x - m2).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            TimeStats { t, count: norms.len(), mean_norm: m1, mean_norm_sq: m2, var_norm_sq: v2 }
        })
        .collect()
}

/// Independent trajectories `0..ensemble`, merged in id order.
pub fn simulate(cfg: &SimConfig) -> Result<Ensemble> {
    cfg.validate()?;
    let st = Stepper::from_config(cfg)?;
    let save = cfg.save_indices()?;
    let n = st.op.n_modes();
    let x0 = cfg.initial.vector(n);
    let n_steps = cfg.n_steps();
    let trajectories: Vec<Trajectory> = (0..cfg.ensemble as u64)
        .into_par_iter()
        .map(|id| run_trajectory(&st, &x0, n_steps, &save, cfg.blowup, NoiseStream::new(cfg.seed, id)))
        .collect();
    let verdict = regime_verdict(cfg).ok();
    let warning = match &verdict {
        Some(v) if !v.weak_d_a_alpha => Some("exploratory: parameter tuple is not weakly admissible".to_string()),
        None => Some("exploratory: no regime verdict available".to_string()),
        _ => None,
    };
    Ok(Ensemble {
        times: cfg.save_times.clone(),
        stats: time_stats(&st.op, cfg.norm_index, &cfg.save_times, &trajectories),
        checksum: combine_checksums(&trajectories),
        trajectories,
        verdict,
        warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    pub n: usize,
    /// Per save time: MC mean of `t^{α̃}‖X_n − X_ref‖₀`.
    pub mean_error: Vec<f64>,
    /// Per save time: MC mean and standard error of `‖X_n − X_ref‖₀²`.
    pub mean_sq_error: Vec<f64>,
    pub sq_error_se: Vec<f64>,
    /// Closed-form `E‖X_n − X_ref‖²` when the drift is zero.
    pub closed_form_sq: Option<Vec<f64>>,
    pub sup_error: f64,
    /// `Σ_{n<k≤ref} λ_k^{-1-2δ}`.
    pub analytic_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GalerkinReport {
    pub times: Vec<f64>,
    pub reference: usize,
    pub weight_exponent: f64,
    pub levels: Vec<LevelResult>,
}

/// Truncation errors of the Galerkin systems at `levels` against the largest level.
pub fn galerkin_study(cfg: &SimConfig, levels: &[usize]) -> Result<GalerkinReport> {
    cfg.validate()?;
    if levels.len() < 2 || levels.windows(2).any(|w| w[0] >= w[1]) || levels[0] == 0 {
        return Err(Error::Parameter(
            "mode levels must be strictly increasing with a larger reference level".into(),
        ));
    }
    let reference = *levels.last().unwrap();
    let save = cfg.save_indices()?;
    let n_steps = cfg.n_steps();
    let ops: Vec<SpectralOperator> = levels
        .iter()
        .map(|&n| SpectralOperator::new(cfg.operator.basis, n, cfg.operator.power))
        .collect::<Result<_>>()?;
    let steppers: Vec<Stepper> = ops
        .iter()
        .map(|op| Stepper::new(op, &cfg.drift, cfg.delta, cfg.step, cfg.noise_substeps, cfg.noise))
        .collect::<Result<_>>()?;
    let weight = (-cfg.initial.sobolev_index).max(0.0);

    // errs[traj][level][time] = ‖X_n − X_ref‖₀
    let errs: Vec<Vec<Vec<f64>>> = (0..cfg.ensemble as u64)
        .into_par_iter()
        .map(|id| {
            let stream = NoiseStream::new(cfg.seed, id);
            let runs: Vec<Trajectory> = steppers
                .iter()
                .zip(levels)
                .map(|(st, &n)| run_trajectory(st, &cfg.initial.vector(n), n_steps, &save, cfg.blowup, stream))
                .collect();
            let refr = runs.last().unwrap();
            runs.iter()
                .map(|r| {
                    (0..save.len())
                        .map(|i| match (r.states.get(i), refr.states.get(i)) {
                            (Some(a), Some(b)) => a.sub(b).norm(),
                            _ => f64::NAN,
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let nt = save.len();
    let m = cfg.ensemble as f64;
    let full = &ops[ops.len() - 1];
    let x0 = cfg.initial.vector(reference);
    let mut out = Vec::new();
    for (li, &n) in levels.iter().enumerate() {
        let mut mean_error = vec![0.0; nt];
        let mut mean_sq = vec![0.0; nt];
        let mut se = vec![0.0; nt];
        for i in 0..nt {
            let t = cfg.save_times[i];
            let w = if weight > 0.0 { t.powf(weight) } else { 1.0 };
            let e: Vec<f64> = errs.iter().map(|tr| tr[li][i]).collect();
            mean_error[i] = w * e.iter().sum::<f64>() / m;
            let sq: Vec<f64> = e.iter().map(|x| x * x).collect();
            let mu = sq.iter().sum::<f64>() / m;
            let var = sq.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
            mean_sq[i] = mu;
            se[i] = (var / m).sqrt();
        }
        let closed = (cfg.drift.kind == DriftKind::Zero).then(|| {
            cfg.save_times
                .iter()
                .map(|&t| {
                    (n..reference)
                        .map(|k| {
                            let l = full.eigenvalues()[k];
                            let noise = if cfg.noise { variance_unchecked(l, cfg.delta, t) } else { 0.0 };
                            (-2.0 * l * t).exp() * x0.coeffs[k].powi(2) + noise
                        })
                        .sum()
                })
                .collect()
        });
        let analytic_tail = (n..reference)
            .map(|k| full.eigenvalues()[k].powf(-1.0 - 2.0 * cfg.delta))
            .sum();
        out.push(LevelResult {
            n,
            sup_error: mean_error.iter().cloned().fold(0.0, f64::max),
            mean_error,
            mean_sq_error: mean_sq,
            sq_error_se: se,
            closed_form_sq: closed,
            analytic_tail,
        });
    }
    Ok(GalerkinReport { times: cfg.save_times.clone(), reference, weight_exponent: weight, levels: out })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReport {
    pub times: Vec<f64>,
    /// Norm index `α` used for distances.
    pub alpha: f64,
    pub initial_distance: f64,
    /// `(E‖X(t) − Y(t)‖_α²)^{1/2}` per save time.
    pub rms: Vec<f64>,
    /// Standard error of the mean of `‖X − Y‖_α²`, per save time.
    pub sq_se: Vec<f64>,
    pub sup_rms: f64,
    /// `sup_rms / initial_distance`; `None` when the initial distance is 0.
    pub ratio: Option<f64>,
    pub draws_match: bool,
}

/// Paired trajectories from `x` and `y` driven by the same noise.
pub fn couple(cfg: &SimConfig, x: &ModeVector, y: &ModeVector) -> Result<CouplingReport> {
    cfg.validate()?;
    let st = Stepper::from_config(cfg)?;
    let op = st.operator().clone();
    let n = op.n_modes();
    let alpha = cfg.drift.metadata(&op).alpha;
    let (x, y) = (x.resized(n), y.resized(n));
    let save = cfg.save_indices()?;
    let n_steps = cfg.n_steps();
    let pairs: Vec<(Vec<f64>, bool)> = (0..cfg.ensemble as u64)
        .into_par_iter()
        .map(|id| {
            let s = NoiseStream::new(cfg.seed, id);
            let a = run_trajectory(&st, &x, n_steps, &save, cfg.blowup, s);
            let b = run_trajectory(&st, &y, n_steps, &save, cfg.blowup, s);
            let d = (0..save.len())
                .map(|i| match (a.states.get(i), b.states.get(i)) {
                    (Some(u), Some(v)) => op.sobolev_norm(alpha, &u.sub(v)).unwrap_or(f64::NAN).powi(2),
                    _ => f64::NAN,
                })
                .collect();
            let same = a.draws == b.draws && (a.checksum == b.checksum || a.truncated_at.is_some() || b.truncated_at.is_some());
            (d, same)
        })
        .collect();
    let m = cfg.ensemble as f64;
    let mut rms = Vec::new();
    let mut sq_se = Vec::new();
    for i in 0..save.len() {
        let v: Vec<f64> = pairs.iter().map(|p| p.0[i]).collect();
        let mu = v.iter().sum::<f64>() / m;
        let var = v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        rms.push(mu.sqrt());
        sq_se.push((var / m).sqrt());
    }
    let initial_distance = op.sobolev_norm(alpha, &x.sub(&y))?;
    let sup_rms = rms.iter().cloned().fold(0.0, f64::max);
    Ok(CouplingReport {
        times: cfg.save_times.clone(),
        alpha,
        initial_distance,
        ratio: (initial_distance > 0.0).then(|| sup_rms / initial_distance),
        rms,
        sq_se,
        sup_rms,
        draws_match: pairs.iter().all(|p| p.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::ScalarFn;
    use std::f64::consts::PI;

    fn base(n: usize) -> SimConfig {
        SimConfig::new(OperatorSpec { basis: Basis::DirichletSine, n_modes: n, power: 1.0 }, 0.1, 1e-3)
    }

    #[test]
    fn semigroup_action_without_noise() {
        let mut cfg = base(3);
        cfg.noise = false;
        let x = ModeVector::new(vec![1.0, -2.0, 0.5]);
        let y = step(&x, &cfg, &NoiseStream::new(0, 0), 0).unwrap();
        for k in 0..3 {
            let l = PI * PI * ((k + 1) * (k + 1)) as f64;
            assert!((y.coeffs[k] - (-l * 1e-3).exp() * x.coeffs[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_drift_is_integrated_exactly() {
        let mut cfg = base(1);
        cfg.noise = false;
        cfg.drift = DriftSpec::composition(ScalarFn::Const { c: 1.0 }, 0.0, 0.0);
        let st = Stepper::from_config(&cfg).unwrap();
        let b1 = 2.0 * std::f64::consts::SQRT_2 / PI;
        let l = PI * PI;
        let x1 = 0.7;
        let mut x = vec![x1];
        let mut tally = DrawTally::default();
        for m in 1..=200 {
            st.advance(&mut x, &NoiseStream::new(0, 0), m - 1, &mut tally, &mut Vec::new()).unwrap();
            let t = m as f64 * 1e-3;
            let exact = (-l * t).exp() * x1 + b1 * (1.0 - (-l * t).exp()) / l;
            assert!((x[0] - exact).abs() < 1e-12 * m as f64, "m={m}");
        }
        assert_eq!(tally.count, 0);
    }

    #[test]
    fn save_times_must_lie_on_grid() {
        let mut cfg = base(2);
        cfg.save_times = vec![0.0105];
        assert!(cfg.validate().is_err());
        cfg.save_times = vec![0.0, 0.05, 0.1];
        assert_eq!(cfg.save_indices().unwrap(), vec![0, 50, 100]);
    }

    #[test]
    fn simulate_is_reproducible() {
        let mut cfg = base(4);
        cfg.initial.coeffs = vec![1.0];
        cfg.drift = DriftSpec::composition(ScalarFn::BoundedHolder { theta: 0.5 }, 0.0, 0.0);
        cfg.ensemble = 3;
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.checksum, b.checksum);
        assert_eq!(a.trajectories[2].states, b.trajectories[2].states);
        assert!(a.warning.is_none());
        cfg.seed = 1;
        assert_ne!(simulate(&cfg).unwrap().checksum, a.checksum);
    }

    #[test]
    fn blowup_guard_truncates() {
        let mut cfg = base(2);
        cfg.noise = false;
        cfg.initial.coeffs = vec![10.0];
        cfg.blowup = 1.0;
        cfg.save_times = vec![0.0, 0.1];
        let e = simulate(&cfg).unwrap();
        assert_eq!(e.trajectories[0].truncated_at, Some(0));
        assert_eq!(e.trajectories[0].states.len(), 1);
    }

    #[test]
    fn rational_approximation() {
        assert_eq!(approx_rational(0.25, 1000), regime::q(1, 4));
        assert_eq!(approx_rational(1.0 / 3.0, 1000), regime::q(1, 3));
        assert_eq!(approx_rational(2.0, 1000), regime::q(2, 1));
        assert_eq!(approx_rational(-0.2, 1000), regime::q(-1, 5));
    }

    #[test]
    fn level_checks() {
        let cfg = base(4);
        assert!(galerkin_study(&cfg, &[8]).is_err());
        assert!(galerkin_study(&cfg, &[8, 8]).is_err());
        let r = galerkin_study(&cfg, &[2, 4]).unwrap();
        assert!(r.levels[1].mean_error.iter().all(|e| *e == 0.0));
    }
}
