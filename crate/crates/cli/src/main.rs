use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use spdelab_core::experiments::{self, Artifacts, ExperimentConfig, ExperimentKind};
use spdelab_core::regime::{self, ClassExtra, ExampleClass, Format, RegimeParams, Scenario, Q};
use spdelab_core::{Error, Result};

#[derive(Parser)]
#[command(name = "spdelab", version, about = "Regime checks, spectral simulation and Kolmogorov solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact regime checks and coefficient tables.
    #[command(subcommand)]
    Regime(RegimeCmd),
    /// Ensemble simulation of the Galerkin system.
    Simulate(RunArgs),
    /// Synchronous coupling, or a continuous-dependence ladder.
    Couple(RunArgs),
    /// Galerkin convergence study.
    Galerkin(RunArgs),
    #[command(subcommand)]
    Kolmogorov(KolmogorovCmd),
    #[command(subcommand)]
    Demo(DemoCmd),
    /// Run any experiment config.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum RegimeCmd {
    /// Print the verdict as JSON; exit 0 when admissible at the chosen level.
    Check {
        #[command(flatten)]
        tuple: TupleArgs,
        #[arg(long, allow_hyphen_values = true)]
        rho: String,
        /// weak, weak-h, pathwise or pathwise-h
        #[arg(long, default_value = "weak")]
        level: String,
    },
    /// Admissible ρ interval per verdict level.
    RhoInterval {
        #[command(flatten)]
        tuple: TupleArgs,
    },
    Table {
        #[arg(long)]
        class: String,
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "1/100")]
        offset: String,
        #[arg(long, default_value = "markdown")]
        format: String,
    },
}

#[derive(Args)]
struct TupleArgs {
    #[arg(long)]
    class: String,
    #[arg(long)]
    d: u32,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long)]
    theta: String,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<String>,
    /// Reaction–diffusion growth exponent.
    #[arg(long)]
    p: Option<String>,
    /// Reaction–diffusion integrability index.
    #[arg(long)]
    r: Option<String>,
    /// Treat the drift as unbounded (implied for every class except heat).
    #[arg(long)]
    unbounded: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// What to print on stdout: csv, json or markdown (plain summary).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum KolmogorovCmd {
    Solve(RunArgs),
    Monitor(RunArgs),
}

#[derive(Subcommand)]
enum DemoCmd {
    /// Two solutions of x' = |x|^θ sign(x) from zero.
    Nonuniqueness {
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
    },
}

fn rational(name: &str, v: &Option<String>) -> Result<Q> {
    match v {
        Some(s) => regime::parse_rational(s),
        None => Err(Error::Config(format!("--{name} is required for this class"))),
    }
}

fn tuple(t: &TupleArgs, rho: Q) -> Result<RegimeParams> {
    let class: ExampleClass = t.class.parse()?;
    let theta = regime::parse_rational(&t.theta)?;
    let p = match class {
        ExampleClass::ReactionDiffusion => {
            let p = rational("p", &t.p)?;
            let r = rational("r", &t.r)?;
            regime::reaction_diffusion_params(t.d, p, r, theta, rho)
        }
        ExampleClass::CahnHilliard | ExampleClass::CahnHilliardQuartic => {
            let (g, m, n) = if class == ExampleClass::CahnHilliard {
                (regime::q(2, 1), regime::q(1, 1), regime::q(0, 1))
            } else {
                (regime::q(2, 1), regime::q(1, 2), regime::q(1, 1))
            };
            let pick = |s: &Option<String>, dflt: Q| s.as_ref().map_or(Ok(dflt), |s| regime::parse_rational(s));
            RegimeParams::heat(t.d, pick(&t.gamma, g)?, theta, pick(&t.mu, m)?, pick(&t.nu, n)?, rho).with_class(class)
        }
        _ => {
            let mut p = RegimeParams::heat(
                t.d,
                rational("gamma", &t.gamma)?,
                theta,
                rational("mu", &t.mu)?,
                rational("nu", &t.nu)?,
                rho,
            )
            .with_class(class);
            if t.unbounded {
                p.drift_bounded = false;
            }
            p
        }
    };
    if t.p.is_some() && !matches!(p.extra, ClassExtra::ReactionDiffusion { .. }) {
        return Err(Error::Config("--p/--r only apply to reaction_diffusion".into()));
    }
    Ok(p)
}

fn parse_format(s: &Option<String>) -> Result<Option<Format>> {
    s.as_deref().map(|s| s.parse().map_err(|e: Error| Error::Config(e.to_string()))).transpose()
}

fn emit(a: &Artifacts, out: &Option<PathBuf>, format: Option<Format>) -> Result<()> {
    if let Some(dir) = out {
        for p in a.write_to(dir)? {
            eprintln!("wrote {}", p.display());
        }
    }
    match format {
        Some(Format::Json) => print!("{}", experiments::to_pretty(&a.summary)),
        Some(Format::Csv) => print!("{}", a.files.first().map_or("", |f| f.1.as_str())),
        _ => print!("{}", a.text),
    }
    Ok(())
}

fn run_config(args: &RunArgs, allowed: &[ExperimentKind]) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if !allowed.is_empty() && !allowed.contains(&cfg.kind) {
        let names: Vec<&str> = allowed.iter().map(|k| k.name()).collect();
        return Err(Error::Config(format!(
            "{}: kind = \"{}\" does not match this subcommand (expected {})",
            args.config.display(),
            cfg.kind.name(),
            names.join(" or ")
        )));
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    let format = parse_format(&args.format)?.or(cfg.format);
    let out = args.out.clone().or_else(|| cfg.out.clone());
    let a = experiments::run(&cfg)?;
    emit(&a, &out, format)
}

fn level_flag(v: &regime::RegimeVerdict, level: &str) -> Result<bool> {
    Ok(match level.to_ascii_lowercase().replace('_', "-").as_str() {
        "weak" => v.weak_d_a_alpha,
        "weak-h" => v.weak_h,
        "pathwise" => v.pathwise_d_a_alpha,
        "pathwise-h" => v.pathwise_h,
        other => return Err(Error::Config(format!("unknown level {other:?}"))),
    })
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    use ExperimentKind as K;
    match cli.command {
        Command::Regime(RegimeCmd::Check { tuple: t, rho, level }) => {
            let p = tuple(&t, regime::parse_rational(&rho)?)?;
            p.validate_class()?;
            let v = regime::check(&p)?;
            let ok = level_flag(&v, &level)?;
            println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Command::Regime(RegimeCmd::RhoInterval { tuple: t }) => {
            let p = tuple(&t, regime::q(0, 1))?;
            let r = regime::admissible_rho(&p)?;
            let v = json!({
                "params": p.describe(),
                "weak_d_a_alpha": r.weak_d_a_alpha.to_string(),
                "weak_h": r.weak_h.to_string(),
                "pathwise_d_a_alpha": r.pathwise_d_a_alpha.to_string(),
                "pathwise_h": r.pathwise_h.to_string(),
            });
            println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
        }
        Command::Regime(RegimeCmd::Table { class, scenario, offset, format }) => {
            let class: ExampleClass = class.parse()?;
            let scenario: Scenario = scenario.parse()?;
            let offset = regime::parse_rational(&offset)?;
            let format: Format = format.parse()?;
            let rows = regime::emit_table(class, scenario, &offset)?;
            print!("{}", regime::render_table(&rows, format));
        }
        Command::Simulate(a) => run_config(&a, &[K::Simulate])?,
        Command::Couple(a) => run_config(&a, &[K::Couple, K::ContinuousDependence])?,
        Command::Galerkin(a) => run_config(&a, &[K::Galerkin])?,
        Command::Kolmogorov(KolmogorovCmd::Solve(a)) => run_config(&a, &[K::KolmogorovSolve])?,
        Command::Kolmogorov(KolmogorovCmd::Monitor(a)) => run_config(&a, &[K::KolmogorovMonitor])?,
        Command::Run(a) => run_config(&a, &[])?,
        Command::Demo(DemoCmd::Nonuniqueness { theta, horizon, points, out, format }) => {
            let r = experiments::nonuniqueness_demo(theta, horizon, points)?;
            emit(&experiments::demo_artifacts(&r), &out, parse_format(&format)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
