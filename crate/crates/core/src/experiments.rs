//! Experiment configs, the runner behind the command-line tool, and report emission.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::kolmogorov::{self, MonitorSetup, ProblemConfig, SolveOptions};
use crate::regime::{self, ExampleClass, Format, RegimeVerdict, Scenario};
use crate::solver::{self, SimConfig};
use crate::spectral::ModeVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RegimeTable,
    Simulate,
    Galerkin,
    Couple,
    ContinuousDependence,
    KolmogorovSolve,
    KolmogorovMonitor,
    Nonuniqueness,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::RegimeTable => "regime_table",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Galerkin => "galerkin",
            ExperimentKind::Couple => "couple",
            ExperimentKind::ContinuousDependence => "continuous_dependence",
            ExperimentKind::KolmogorovSolve => "kolmogorov_solve",
            ExperimentKind::KolmogorovMonitor => "kolmogorov_monitor",
            ExperimentKind::Nonuniqueness => "nonuniqueness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub class: String,
    pub scenario: String,
    #[serde(default = "default_offset")]
    pub offset: String,
}

fn default_offset() -> String {
    "1/100".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupleConfig {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub x: Vec<f64>,
    /// Perturbation direction; normalized in the `D(A^α)` norm.
    pub direction: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KolmogorovConfig {
    pub problem: ProblemConfig,
    pub solve: SolveOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoConfig {
    pub theta: f64,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "thousand")]
    pub points: usize,
}

fn one() -> f64 {
    1.0
}
fn thousand() -> usize {
    1000
}

/// Top-level experiment file. `kind` selects which section must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub table: Option<TableConfig>,
    #[serde(default)]
    pub sim: Option<SimConfig>,
    #[serde(default)]
    pub levels: Option<Vec<usize>>,
    #[serde(default)]
    pub couple: Option<CoupleConfig>,
    #[serde(default)]
    pub ladder: Option<LadderConfig>,
    #[serde(default)]
    pub kolmogorov: Option<KolmogorovConfig>,
    #[serde(default)]
    pub monitor: Option<MonitorSetup>,
    #[serde(default)]
    pub demo: Option<DemoConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> Result<()> {
        let need = |present: bool, section: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("kind = \"{}\" requires a [{section}] section", self.kind.name())))
            }
        };
        match self.kind {
            ExperimentKind::RegimeTable => need(self.table.is_some(), "table"),
            ExperimentKind::Simulate => need(self.sim.is_some(), "sim"),
            ExperimentKind::Galerkin => {
                need(self.sim.is_some(), "sim")?;
                if self.levels.is_none() {
                    return Err(Error::Config("kind = \"galerkin\" requires levels".into()));
                }
                Ok(())
            }
            ExperimentKind::Couple => {
                need(self.sim.is_some(), "sim")?;
                need(self.couple.is_some(), "couple")
            }
            ExperimentKind::ContinuousDependence => {
                need(self.sim.is_some(), "sim")?;
                need(self.ladder.is_some(), "ladder")
            }
            ExperimentKind::KolmogorovSolve => need(self.kolmogorov.is_some(), "kolmogorov"),
            ExperimentKind::KolmogorovMonitor => need(self.monitor.is_some(), "monitor"),
            ExperimentKind::Nonuniqueness => need(self.demo.is_some(), "demo"),
        }?;
        if let Some(sim) = &self.sim {
            sim.validate()?;
        }
        Ok(())
    }

    /// Simulation section with the seed override applied.
    fn sim(&self) -> SimConfig {
        let mut s = self.sim.clone().expect("validated");
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        s
    }
}

/// Files produced by one run plus the JSON summary and a short text summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub kind: ExperimentKind,
    pub summary: Value,
    pub files: Vec<(String, String)>,
    pub text: String,
}

impl Artifacts {
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let summary = dir.join(format!("{}.json", self.kind.name()));
        std::fs::write(&summary, to_pretty(&self.summary))?;
        out.push(summary);
        for (name, body) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, body)?;
            out.push(p);
        }
        Ok(out)
    }
}

pub fn to_pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default() + "\n"
}

fn verdict_json(v: Option<&RegimeVerdict>) -> Value {
    v.map_or(Value::Null, |v| serde_json::to_value(v).unwrap_or(Value::Null))
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else {
        "nan".into()
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts> {
    match cfg.kind {
        ExperimentKind::RegimeTable => run_table(cfg),
        ExperimentKind::Simulate => run_simulate(cfg),
        ExperimentKind::Galerkin => run_galerkin(cfg),
        ExperimentKind::Couple => run_couple(cfg),
        ExperimentKind::ContinuousDependence => run_ladder(cfg),
        ExperimentKind::KolmogorovSolve => run_kolmogorov(cfg),
        ExperimentKind::KolmogorovMonitor => run_monitor(cfg),
        ExperimentKind::Nonuniqueness => {
            let d = cfg.demo.expect("validated");
            let r = nonuniqueness_demo(d.theta, d.horizon, d.points)?;
            Ok(demo_artifacts(&r))
        }
    }
}

fn run_table(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let t = cfg.table.as_ref().expect("validated");
    let class: ExampleClass = t.class.parse()?;
    let scenario: Scenario = t.scenario.parse()?;
    let offset = regime::parse_rational(&t.offset)?;
    let rows = regime::emit_table(class, scenario, &offset)?;
    let format = cfg.format.unwrap_or(Format::Markdown);
    let body = regime::render_table(&rows, format);
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
        Format::Markdown => "md",
    };
    let verdicts: Vec<Value> = rows.iter().map(|r| verdict_json(Some(&r.verdict))).collect();
    Ok(Artifacts {
        kind: cfg.kind,
        summary: json!({
            "kind": cfg.kind.name(),
            "config": t,
            "rows": rows.len(),
            "verdicts": verdicts,
        }),
        files: vec![(format!("table.{ext}"), body.clone())],
        text: body,
    })
}

pub const SIMULATE_CSV_HEADER: &str = "t,count,mean_norm,mean_norm_sq,var_norm_sq";

fn run_simulate(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let sim = cfg.sim();
    let e = solver::simulate(&sim)?;
    let mut csv = String::from(SIMULATE_CSV_HEADER);
    csv.push('\n');
    for s in &e.stats {
        let _ = writeln!(csv, "{},{},{},{},{}", num(s.t), s.count, num(s.mean_norm), num(s.mean_norm_sq), num(s.var_norm_sq));
    }
    let truncated = e.trajectories.iter().filter(|t| t.truncated_at.is_some()).count();
    let checksums: Vec<String> = e.trajectories.iter().map(|t| format!("{:016x}", t.checksum)).collect();
    let summary = json!({
        "kind": cfg.kind.name(),
        "config": sim,
        "verdict": verdict_json(e.verdict.as_ref()),
        "status": if e.warning.is_some() { "exploratory" } else { "admissible" },
        "warning": e.warning,
        "checksum": format!("{:016x}", e.checksum),
        "trajectory_checksums": checksums,
        "truncated": truncated,
        "stats": e.stats,
    });
    let text = format!(
        "simulate: {} trajectories, checksum {:016x}, {} truncated{}\n",
        e.trajectories.len(),
        e.checksum,
        truncated,
        e.warning.as_deref().map(|w| format!(" ({w})")).unwrap_or_default()
    );
    Ok(Artifacts { kind: cfg.kind, summary, files: vec![("stats.csv".into(), csv)], text })
}

pub const GALERKIN_CSV_HEADER: &str = "n,t,mean_error,mean_sq_error,sq_error_se,closed_form_sq";

fn run_galerkin(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let sim = cfg.sim();
    let levels = cfg.levels.clone().expect("validated");
    let r = solver::galerkin_study(&sim, &levels)?;
    let mut csv = String::from(GALERKIN_CSV_HEADER);
    csv.push('\n');
    for lv in &r.levels {
        for (i, t) in r.times.iter().enumerate() {
            let cf = lv.closed_form_sq.as_ref().map_or("".into(), |c| num(c[i]));
            let _ = writeln!(csv, "{},{},{},{},{},{}", lv.n, num(*t), num(lv.mean_error[i]), num(lv.mean_sq_error[i]), num(lv.sq_error_se[i]), cf);
        }
    }
    let verdict = solver::regime_verdict(&sim).ok();
    let mut text = String::from("galerkin: n, sup error, analytic tail\n");
    for lv in &r.levels {
        let _ = writeln!(text, "  {:>5}  {:.6e}  {:.6e}", lv.n, lv.sup_error, lv.analytic_tail);
    }
    Ok(Artifacts {
        kind: cfg.kind,
        summary: json!({ "kind": cfg.kind.name(), "config": sim, "levels": levels, "verdict": verdict_json(verdict.as_ref()), "report": r }),
        files: vec![("galerkin.csv".into(), csv)],
        text,
    })
}

pub const COUPLE_CSV_HEADER: &str = "t,rms,sq_se";

fn run_couple(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let sim = cfg.sim();
    let c = cfg.couple.as_ref().expect("validated");
    let r = solver::couple(&sim, &ModeVector::new(c.x.clone()), &ModeVector::new(c.y.clone()))?;
    let mut csv = String::from(COUPLE_CSV_HEADER);
    csv.push('\n');
    for i in 0..r.times.len() {
        let _ = writeln!(csv, "{},{},{}", num(r.times[i]), num(r.rms[i]), num(r.sq_se[i]));
    }
    let verdict = solver::regime_verdict(&sim).ok();
    let text = format!(
        "couple: sup rms {:.6e}, initial distance {:.6e}, ratio {}\n",
        r.sup_rms,
        r.initial_distance,
        r.ratio.map_or("undefined (x = y)".into(), |v| format!("{v:.6}"))
    );
    Ok(Artifacts {
        kind: cfg.kind,
        summary: json!({ "kind": cfg.kind.name(), "config": sim, "x": c.x, "y": c.y, "verdict": verdict_json(verdict.as_ref()), "report": r }),
        files: vec![("couple.csv".into(), csv)],
        text,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderRow {
    pub magnitude: f64,
    pub initial_distance: f64,
    pub sup_rms: f64,
    /// `None` when both the numerator and the initial distance vanish.
    pub ratio: Option<f64>,
    pub ratio_se: Option<f64>,
    pub exact_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceReport {
    pub verdict: RegimeVerdict,
    pub rows: Vec<LadderRow>,
    pub max_ratio: Option<f64>,
    /// Largest over smallest defined ratio.
    pub spread: Option<f64>,
}

pub const LADDER_CSV_HEADER: &str = "magnitude,initial_distance,sup_rms,ratio,ratio_se";

/// Coupling ratios for `y = x + m·d/‖d‖_α` over the magnitudes `m`.
pub fn continuous_dependence(cfg: &SimConfig, x: &ModeVector, direction: &ModeVector, magnitudes: &[f64]) -> Result<DependenceReport> {
    let verdict = solver::regime_verdict(cfg)?;
    if !verdict.pathwise_d_a_alpha {
        return Err(Error::Regime(format!(
            "continuous dependence requires a pathwise-admissible tuple; verdict: {}",
            serde_json::to_string(&verdict).unwrap_or_default()
        )));
    }
    if magnitudes.is_empty() {
        return Err(Error::Parameter("ladder needs at least one magnitude".into()));
    }
    let op = cfg.operator.build()?;
    let n = op.n_modes();
    let alpha = cfg.drift.metadata(&op).alpha;
    let dir = direction.resized(n);
    let dnorm = op.sobolev_norm(alpha, &dir)?;
    if !(dnorm > 0.0) {
        return Err(Error::Parameter("ladder direction must be nonzero".into()));
    }
    let x = x.resized(n);
    let mut rows = Vec::new();
    for &m in magnitudes {
        if !(m >= 0.0) {
            return Err(Error::Parameter(format!("magnitudes must be nonnegative, got {m}")));
        }
        let y = ModeVector::new(x.coeffs.iter().zip(&dir.coeffs).map(|(a, d)| a + m * d / dnorm).collect());
        let r = solver::couple(cfg, &x, &y)?;
        let imax = (0..r.rms.len()).max_by(|&i, &j| r.rms[i].total_cmp(&r.rms[j])).unwrap_or(0);
        let ratio_se = r.ratio.map(|_| {
            if r.rms[imax] > 0.0 {
                r.sq_se[imax] / (2.0 * r.rms[imax]) / r.initial_distance
            } else {
                0.0
            }
        });
        rows.push(LadderRow {
            magnitude: m,
            initial_distance: r.initial_distance,
            sup_rms: r.sup_rms,
            exact_zero: r.sup_rms == 0.0 && r.initial_distance == 0.0,
            ratio: r.ratio,
            ratio_se,
        });
    }
    let defined: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let max_ratio = defined.iter().cloned().reduce(f64::max);
    let min_ratio = defined.iter().cloned().reduce(f64::min);
    let spread = match (max_ratio, min_ratio) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    Ok(DependenceReport { verdict, rows, max_ratio, spread })
}

pub fn ladder_csv(r: &DependenceReport) -> String {
    let mut csv = String::from(LADDER_CSV_HEADER);
    csv.push('\n');
    let opt = |v: Option<f64>| v.map_or(String::new(), num);
    for row in &r.rows {
        let _ = writeln!(csv, "{},{},{},{},{}", num(row.magnitude), num(row.initial_distance), num(row.sup_rms), opt(row.ratio), opt(row.ratio_se));
    }
    csv
}

fn run_ladder(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let sim = cfg.sim();
    let l = cfg.ladder.as_ref().expect("validated");
    let r = continuous_dependence(&sim, &ModeVector::new(l.x.clone()), &ModeVector::new(l.direction.clone()), &l.magnitudes)?;
    let text = format!(
        "continuous dependence: max ratio {}, spread {}\n",
        r.max_ratio.map_or("undefined".into(), |v| format!("{v:.6}")),
        r.spread.map_or("undefined".into(), |v| format!("{v:.4}"))
    );
    Ok(Artifacts {
        kind: cfg.kind,
        summary: json!({ "kind": cfg.kind.name(), "config": sim, "ladder": l, "verdict": r.verdict, "report": r }),
        files: vec![("ladder.csv".into(), ladder_csv(&r))],
        text,
    })
}

fn run_kolmogorov(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let k = cfg.kolmogorov.as_ref().expect("validated");
    let p = k.problem.build()?;
    let mut solve = k.solve;
    if let (Some(seed), kolmogorov::Sampler::MonteCarlo { samples, antithetic, .. }) = (cfg.seed, solve.sampler) {
        solve.sampler = kolmogorov::Sampler::MonteCarlo { samples, antithetic, seed };
    }
    let it = kolmogorov::solve_u(&p, &solve)?;
    let residual = if it.nodes_per_axis >= 3 { Some(kolmogorov::generator_residual(&p, &it)?) } else { None };
    let closed_err = (0..it.n_nodes())
        .map(|i| kolmogorov::closed_form(&p, &it.node(i)).map(|c| (it.u[i] - c).abs()))
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max));
    let mut csv = String::new();
    let n = it.n;
    let coords: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    let grads: Vec<String> = (1..=n).map(|j| format!("du{j}")).collect();
    let _ = writeln!(csv, "{},u,{}", coords.join(","), grads.join(","));
    for i in 0..it.n_nodes() {
        let x: Vec<String> = it.node(i).into_iter().map(num).collect();
        let g: Vec<String> = (0..n).map(|j| num(it.du[j][i])).collect();
        let _ = writeln!(csv, "{},{},{}", x.join(","), num(it.u[i]), g.join(","));
    }
    let summary = json!({
        "kind": cfg.kind.name(),
        "config": k,
        "cbar": p.cbar(),
        "cbar_input": p.bound_input(),
        "t_max": it.t_max,
        "sweeps": it.deltas.len(),
        "deltas": it.deltas,
        "ratios": it.ratios,
        "converged": it.converged,
        "max_se": it.max_se,
        "sup_u": it.sup_u(),
        "residual": residual,
        "closed_form_max_error": closed_err,
    });
    let text = format!(
        "kolmogorov solve: n={} k={} cbar={:.6} sweeps={} converged={} sup|u|={:.6e}\n",
        n,
        it.k,
        p.cbar(),
        it.deltas.len(),
        it.converged,
        it.sup_u()
    );
    Ok(Artifacts { kind: cfg.kind, summary, files: vec![("grid.csv".into(), csv)], text })
}

pub const MONITOR_CSV_HEADER: &str = "n,k,cbar,sweeps,est0,est1_gamma0";

fn run_monitor(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let mut m = cfg.monitor.clone().expect("validated");
    if let (Some(seed), kolmogorov::Sampler::MonteCarlo { samples, antithetic, .. }) = (cfg.seed, m.solve.sampler) {
        m.solve.sampler = kolmogorov::Sampler::MonteCarlo { samples, antithetic, seed };
    }
    let r = kolmogorov::estimate_monitor(&m)?;
    let mut csv = String::from(MONITOR_CSV_HEADER);
    csv.push('\n');
    for c in &r.cases {
        let e1 = c.est1.first().map_or(String::new(), |v| num(v.1));
        let _ = writeln!(csv, "{},{},{},{},{},{}", c.n, c.k, num(c.cbar), c.sweeps, num(c.est0), e1);
    }
    let mut text = format!("kolmogorov monitor: nonuniform = {}\n", r.nonuniform);
    for s in &r.spreads {
        let _ = writeln!(text, "  {} k={} gamma={} spread {:.4}", s.estimate, s.k, s.gamma, s.ratio);
    }
    Ok(Artifacts {
        kind: cfg.kind,
        summary: json!({ "kind": cfg.kind.name(), "config": m, "report": r }),
        files: vec![("monitor.csv".into(), csv)],
        text,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub theta: f64,
    pub horizon: f64,
    pub points: usize,
    /// Max `|x′ − |x|^θ|` for `x ≡ 0`.
    pub zero_residual: f64,
    /// Max residual of the second solution with the exact derivative.
    pub analytic_residual: f64,
    /// Max residual of the second solution with central differences.
    pub fd_residual: f64,
    pub separation: f64,
    pub times: Vec<f64>,
    pub second: Vec<f64>,
}

/// Two solutions of `x′ = |x|^θ sign(x)`, `x(0) = 0`: zero and `((1−θ)t)^{1/(1−θ)}`.
pub fn nonuniqueness_demo(theta: f64, horizon: f64, points: usize) -> Result<DemoReport> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Parameter(format!("theta must lie in (0,1), got {theta}")));
    }
    if !(horizon > 0.0) || points < 3 {
        return Err(Error::Parameter("need horizon > 0 and at least 3 points".into()));
    }
    let e = 1.0 / (1.0 - theta);
    let x = |t: f64| ((1.0 - theta) * t).powf(e);
    let dx = |t: f64| ((1.0 - theta) * t).powf(theta * e);
    let rhs = |v: f64| v.abs().powf(theta) * v.signum();
    let h = horizon / (points - 1) as f64;
    let times: Vec<f64> = (0..points).map(|i| i as f64 * h).collect();
    let second: Vec<f64> = times.iter().map(|&t| x(t)).collect();
    let zero_residual = 0.0f64.max((0.0 - rhs(0.0)).abs());
    let analytic_residual = times.iter().map(|&t| (dx(t) - rhs(x(t))).abs()).fold(0.0, f64::max);
    let fd_residual = (1..points - 1)
        .map(|i| ((second[i + 1] - second[i - 1]) / (2.0 * h) - rhs(second[i])).abs())
        .fold(0.0, f64::max);
    Ok(DemoReport {
        theta,
        horizon,
        points,
        zero_residual,
        analytic_residual,
        fd_residual,
        separation: x(horizon),
        times,
        second,
    })
}

pub const DEMO_CSV_HEADER: &str = "t,x_zero,x_second";

pub fn demo_artifacts(r: &DemoReport) -> Artifacts {
    let mut csv = String::from(DEMO_CSV_HEADER);
    csv.push('\n');
    for (t, x) in r.times.iter().zip(&r.second) {
        let _ = writeln!(csv, "{},0,{}", num(*t), num(*x));
    }
    let text = format!(
        "nonuniqueness: theta={} T={} separation={:.12} analytic residual={:.3e} fd residual={:.3e}\n",
        r.theta, r.horizon, r.separation, r.analytic_residual, r.fd_residual
    );
    Artifacts {
        kind: ExperimentKind::Nonuniqueness,
        summary: json!({
            "kind": "nonuniqueness",
            "theta": r.theta,
            "horizon": r.horizon,
            "points": r.points,
            "zero_residual": r.zero_residual,
            "analytic_residual": r.analytic_residual,
            "fd_residual": r.fd_residual,
            "separation": r.separation,
        }),
        files: vec![("nonuniqueness.csv".into(), csv)],
        text,
    }
}
