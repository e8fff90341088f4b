//! Exact admissibility checks for the uniqueness regimes of
//! `dX + AX dt = B(X) dt + A^{-δ} dW` with `A = A_D^γ`.
//!
//! Parameters are exact rationals. `α = μ/γ`, `β = ν/γ`, `δ = ρ/γ`.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `p/q`, an integer, or a finite decimal such as `-0.125`.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let n = BigInt::from_str(a.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(b.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        let whole = if ip.is_empty() {
            BigInt::zero()
        } else {
            BigInt::from_str(ip).map_err(|_| bad())?
        };
        let scale = BigInt::from(10u32).pow(fp.len() as u32);
        let frac = BigInt::from_str(fp).map_err(|_| bad())?;
        let v = Q::new(whole * &scale + frac, scale);
        return Ok(if neg { -v } else { v });
    }
    BigInt::from_str(s).map(Q::from_integer).map_err(|_| bad())
}

pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn to_f64(x: &Q) -> f64 {
    use num::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleClass {
    AbstractFractionalHeat,
    Burgers,
    NavierStokes,
    CahnHilliard,
    CahnHilliardQuartic,
    ReactionDiffusion,
}

impl ExampleClass {
    pub const ALL: [ExampleClass; 6] = [
        ExampleClass::AbstractFractionalHeat,
        ExampleClass::Burgers,
        ExampleClass::NavierStokes,
        ExampleClass::CahnHilliard,
        ExampleClass::CahnHilliardQuartic,
        ExampleClass::ReactionDiffusion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExampleClass::AbstractFractionalHeat => "fractional_heat",
            ExampleClass::Burgers => "burgers",
            ExampleClass::NavierStokes => "navier_stokes",
            ExampleClass::CahnHilliard => "cahn_hilliard",
            ExampleClass::CahnHilliardQuartic => "cahn_hilliard_quartic",
            ExampleClass::ReactionDiffusion => "reaction_diffusion",
        }
    }

    /// Whether the class's nonlinearity is unbounded as a map into `D(A^{-β})`.
    pub fn unbounded_drift(self) -> bool {
        !matches!(self, ExampleClass::AbstractFractionalHeat)
    }
}

impl FromStr for ExampleClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Ok(match key.as_str() {
            "fractional_heat" | "heat" | "abstract_fractional_heat" => {
                ExampleClass::AbstractFractionalHeat
            }
            "burgers" => ExampleClass::Burgers,
            "navier_stokes" | "ns" => ExampleClass::NavierStokes,
            "cahn_hilliard" | "ch" => ExampleClass::CahnHilliard,
            "cahn_hilliard_quartic" | "ch_quartic" => ExampleClass::CahnHilliardQuartic,
            "reaction_diffusion" | "rd" => ExampleClass::ReactionDiffusion,
            _ => return Err(Error::Parse(format!("unknown example class {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassExtra {
    None,
    /// Growth exponent `p` and integrability index `r`.
    ReactionDiffusion { p: Q, r: Q },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeParams {
    pub d: u32,
    pub gamma: Q,
    pub theta: Q,
    pub mu: Q,
    pub nu: Q,
    pub rho: Q,
    pub drift_bounded: bool,
    pub class: ExampleClass,
    pub extra: ClassExtra,
}

impl RegimeParams {
    /// Fractional-heat tuple with a bounded drift.
    pub fn heat(d: u32, gamma: Q, theta: Q, mu: Q, nu: Q, rho: Q) -> Self {
        RegimeParams {
            d,
            gamma,
            theta,
            mu,
            nu,
            rho,
            drift_bounded: true,
            class: ExampleClass::AbstractFractionalHeat,
            extra: ClassExtra::None,
        }
    }

    pub fn with_class(mut self, class: ExampleClass) -> Self {
        self.class = class;
        if class.unbounded_drift() {
            self.drift_bounded = false;
        }
        self
    }

    pub fn alpha(&self) -> Q {
        &self.mu / &self.gamma
    }
    pub fn beta(&self) -> Q {
        &self.nu / &self.gamma
    }
    pub fn delta(&self) -> Q {
        &self.rho / &self.gamma
    }

    pub fn describe(&self) -> String {
        format!(
            "{} d={} gamma={} theta={} mu={} nu={} rho={} bounded={}",
            self.class.name(),
            self.d,
            fmt_q(&self.gamma),
            fmt_q(&self.theta),
            fmt_q(&self.mu),
            fmt_q(&self.nu),
            fmt_q(&self.rho),
            self.drift_bounded
        )
    }

    /// Class and extra fields must agree; fixed-exponent classes pin (γ, μ, ν).
    pub fn validate_class(&self) -> Result<()> {
        let err = |m: String| Err(Error::Parameter(m));
        match (&self.class, &self.extra) {
            (ExampleClass::ReactionDiffusion, ClassExtra::ReactionDiffusion { .. }) => {}
            (ExampleClass::ReactionDiffusion, ClassExtra::None) => {
                return err("reaction_diffusion requires p and r".into())
            }
            (c, ClassExtra::ReactionDiffusion { .. }) => {
                return err(format!("p and r are only meaningful for reaction_diffusion, not {}", c.name()))
            }
            _ => {}
        }
        if self.class.unbounded_drift() && self.drift_bounded {
            return err(format!("{} has an unbounded drift", self.class.name()));
        }
        let pinned = |g: Q, m: Q, n: Q| -> Result<()> {
            if self.gamma != g || self.mu != m || self.nu != n {
                return Err(Error::Parameter(format!(
                    "{} fixes (gamma, mu, nu) = ({}, {}, {}), got ({}, {}, {})",
                    self.class.name(),
                    fmt_q(&g),
                    fmt_q(&m),
                    fmt_q(&n),
                    fmt_q(&self.gamma),
                    fmt_q(&self.mu),
                    fmt_q(&self.nu)
                )));
            }
            Ok(())
        };
        match self.class {
            ExampleClass::CahnHilliard => pinned(qi(2), qi(1), qi(0))?,
            ExampleClass::CahnHilliardQuartic => pinned(qi(2), q(1, 2), qi(1))?,
            ExampleClass::ReactionDiffusion => {
                let (p, r) = match &self.extra {
                    ClassExtra::ReactionDiffusion { p, r } => (p, r),
                    ClassExtra::None => unreachable!(),
                };
                let (a, b) = reaction_diffusion_exponents(self.d, p, r);
                let (m, n) = (&a * qi(1), &b * qi(1));
                pinned(qi(1), m, n)?;
            }
            _ => {}
        }
        Ok(())
    }
}

/// `(α, β)` for the reaction–diffusion class with `γ = 1`.
pub fn reaction_diffusion_exponents(d: u32, p: &Q, r: &Q) -> (Q, Q) {
    let dd = qi(d as i64);
    let four_r = qi(4) * r;
    let a = &dd * (r - qi(2)) / &four_r;
    let b = &dd * (qi(2) * (p - qi(1)) - r) / &four_r;
    (a, b)
}

/// Builds a consistent reaction–diffusion tuple (γ = 1, μ and ν from p, r).
pub fn reaction_diffusion_params(d: u32, p: Q, r: Q, theta: Q, rho: Q) -> RegimeParams {
    let (a, b) = reaction_diffusion_exponents(d, &p, &r);
    RegimeParams {
        d,
        gamma: qi(1),
        theta,
        mu: a,
        nu: b,
        rho,
        drift_bounded: false,
        class: ExampleClass::ReactionDiffusion,
        extra: ClassExtra::ReactionDiffusion { p, r },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FailedCondition {
    pub name: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegimeVerdict {
    pub params: String,
    pub alpha: String,
    pub beta: String,
    pub delta: String,
    pub weak_d_a_alpha: bool,
    pub weak_h: bool,
    pub pathwise_d_a_alpha: bool,
    pub pathwise_h: bool,
    pub critical: bool,
    pub annotations: Vec<String>,
    pub failed_conditions: Vec<FailedCondition>,
}

impl RegimeVerdict {
    pub fn failed(&self, name: &str) -> bool {
        self.failed_conditions.iter().any(|c| c.name == name)
    }
}

pub const SMALLNESS_NOTE: &str = "smallness condition on F required";
pub const WEAK_SMALLNESS_NOTE: &str =
    "weak uniqueness does not need the smallness condition (localisation); pathwise does";

struct Acc {
    failed: Vec<FailedCondition>,
}

impl Acc {
    fn push(&mut self, ok: bool, name: &str, detail: impl FnOnce() -> String) -> bool {
        if !ok {
            self.failed.push(FailedCondition {
                name: name.to_string(),
                detail: detail(),
            });
        }
        ok
    }
}

fn cmp_str(lhs: &Q, op: &str, rhs: &Q) -> String {
    format!("{} {} {}", fmt_q(lhs), op, fmt_q(rhs))
}

/// Class constraints that do not involve ρ.
fn class_constraints(p: &RegimeParams, acc: &mut Acc) -> bool {
    let (mu, nu) = (&p.mu, &p.nu);
    match p.class {
        ExampleClass::Burgers | ExampleClass::NavierStokes => {
            if p.d == 1 {
                let a = acc.push(mu.is_positive(), "class_mu_positive", || {
                    format!("mu > 0 violated: mu = {}", fmt_q(mu))
                });
                let floor = q(3, 4) - qi(2) * mu;
                let b = acc.push(nu >= &floor, "class_nu_floor", || {
                    format!("nu >= 3/4 - 2mu violated: {}", cmp_str(nu, "<", &floor))
                });
                a && b
            } else {
                let a = acc.push(
                    mu >= &q(1, 4) && mu <= &q(1, 2),
                    "class_mu_range",
                    || format!("mu in [1/4, 1/2] violated: mu = {}", fmt_q(mu)),
                );
                let floor = q(1, 2) - mu;
                let b = acc.push(nu >= &floor, "class_nu_floor", || {
                    format!("nu >= 1/2 - mu violated: {}", cmp_str(nu, "<", &floor))
                });
                let lhs = qi(2) * mu + nu;
                let rhs = q(p.d as i64 + 2, 4);
                let c = acc.push(lhs > rhs, "class_product", || {
                    format!("2mu + nu > (d+2)/4 violated: {}", cmp_str(&lhs, "<=", &rhs))
                });
                a && b && c
            }
        }
        ExampleClass::ReactionDiffusion => {
            let (pp, r) = match &p.extra {
                ClassExtra::ReactionDiffusion { p, r } => (p, r),
                ClassExtra::None => return false,
            };
            let a = acc.push(pp > &qi(2), "class_growth", || {
                format!("p > 2 violated: p = {}", fmt_q(pp))
            });
            let lo = std::cmp::max(qi(2), pp - qi(1));
            let hi = qi(2) * (pp - qi(1));
            let b = acc.push(r >= &lo && r <= &hi, "class_integrability", || {
                format!(
                    "r in [max(2, p-1), 2(p-1)] = [{}, {}] violated: r = {}",
                    fmt_q(&lo),
                    fmt_q(&hi),
                    fmt_q(r)
                )
            });
            a && b
        }
        _ => true,
    }
}

/// Evaluates every hypothesis with exact rational arithmetic.
pub fn check(p: &RegimeParams) -> Result<RegimeVerdict> {
    p.validate_class()?;
    let mut acc = Acc { failed: Vec::new() };
    let half = q(1, 2);
    let dh = q(p.d as i64, 2);

    let valid = acc.push((1..=3).contains(&p.d), "validity_dimension", || {
        format!("d in {{1,2,3}} violated: d = {}", p.d)
    }) & acc.push(p.gamma.is_positive(), "validity_gamma", || {
        format!("gamma > 0 violated: gamma = {}", fmt_q(&p.gamma))
    }) & acc.push(
        p.theta.is_positive() && p.theta < qi(1),
        "validity_theta",
        || format!("theta in (0,1) violated: theta = {}", fmt_q(&p.theta)),
    ) & acc.push(!p.mu.is_negative(), "validity_mu", || {
        format!("mu >= 0 violated: mu = {}", fmt_q(&p.mu))
    }) & acc.push(!p.nu.is_negative(), "validity_nu", || {
        format!("nu >= 0 violated: nu = {}", fmt_q(&p.nu))
    });

    if !valid {
        return Ok(RegimeVerdict {
            params: p.describe(),
            alpha: String::new(),
            beta: String::new(),
            delta: String::new(),
            weak_d_a_alpha: false,
            weak_h: false,
            pathwise_d_a_alpha: false,
            pathwise_h: false,
            critical: false,
            annotations: Vec::new(),
            failed_conditions: acc.failed,
        });
    }

    let (a, b, de) = (p.alpha(), p.beta(), p.delta());
    let th = &p.theta;
    let one = qi(1);
    let g = &p.gamma;

    let ra = acc.push(!a.is_negative() && a < one, "range_alpha", || {
        format!("alpha in [0,1) violated: alpha = {}", fmt_q(&a))
    });
    let dlo = -&half + &a;
    let rd = acc.push(de > dlo && de <= half, "range_delta", || {
        format!(
            "delta in (alpha - 1/2, 1/2] = ({}, 1/2] violated: delta = {} (equivalently rho in ({}, {}])",
            fmt_q(&dlo),
            fmt_q(&de),
            fmt_q(&(&p.mu - g / qi(2))),
            fmt_q(&(g / qi(2)))
        )
    });
    let bhi = &half - &de;
    let rb = acc.push(!b.is_negative() && b <= bhi, "range_beta", || {
        format!(
            "beta in [0, 1/2 - delta] = [0, {}] violated: beta = {}",
            fmt_q(&bhi),
            fmt_q(&b)
        )
    });

    let h3 = g * (&one + qi(2) * &de - qi(2) * &a);
    let rho_floor = q(p.d as i64, 4) + &p.mu - g / qi(2);
    let tw = acc.push(h3 > dh, "trace_weak", || {
        format!(
            "gamma(1 + 2delta - 2alpha) > d/2 violated: {} (equivalently rho > {})",
            cmp_str(&h3, "<=", &dh),
            fmt_q(&rho_floor)
        )
    });

    let cl = class_constraints(p, &mut acc);

    let critical = &b + &de == half;
    let weak = ra && rd && rb && tw && cl;

    let t22 = g * (&one + th - qi(2) * &b - qi(2) * (&one - th) * &de - qi(2) * th * &a);
    let tp = acc.push(t22 > dh, "trace_pathwise", || {
        format!(
            "gamma(1 + theta - 2beta - 2(1-theta)delta - 2theta alpha) > d/2 violated: {}",
            cmp_str(&t22, "<=", &dh)
        )
    });
    let mix = th * &a + (&one - th) * &de;
    let c23 = &a + th / qi(2);
    let bp = acc.push(mix < c23, "balance_pathwise", || {
        format!(
            "theta alpha + (1-theta)delta < alpha + theta/2 violated: {}",
            cmp_str(&mix, ">=", &c23)
        )
    });
    let h5 = acc.push(!critical || p.drift_bounded, "critical_unbounded", || {
        "beta + delta = 1/2 with an unbounded drift: the smallness hypothesis needs a bounded drift"
            .to_string()
    });
    let pathwise = weak && tp && bp && h5;

    let bounded = acc.push(p.drift_bounded, "bounded_drift", || {
        "data in H requires a bounded drift".to_string()
    });
    let c24 = th / qi(2);
    let bh = acc.push(mix < c24, "balance_bounded", || {
        format!(
            "theta alpha + (1-theta)delta < theta/2 violated: {}",
            cmp_str(&mix, ">=", &c24)
        )
    });

    let mut annotations = Vec::new();
    if critical {
        annotations.push(SMALLNESS_NOTE.to_string());
        annotations.push(WEAK_SMALLNESS_NOTE.to_string());
    }

    Ok(RegimeVerdict {
        params: p.describe(),
        alpha: fmt_q(&a),
        beta: fmt_q(&b),
        delta: fmt_q(&de),
        weak_d_a_alpha: weak,
        weak_h: weak && bounded,
        pathwise_d_a_alpha: pathwise,
        pathwise_h: pathwise && bounded && bh,
        critical,
        annotations,
        failed_conditions: acc.failed,
    })
}

/// One end of an interval: value and whether it is included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub value: Q,
    pub closed: bool,
}

/// A (possibly empty) interval of admissible ρ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RhoInterval {
    Empty,
    Interval { lower: Endpoint, upper: Endpoint },
}

impl RhoInterval {
    pub fn contains(&self, x: &Q) -> bool {
        match self {
            RhoInterval::Empty => false,
            RhoInterval::Interval { lower, upper } => {
                let lo = if lower.closed { x >= &lower.value } else { x > &lower.value };
                let hi = if upper.closed { x <= &upper.value } else { x < &upper.value };
                lo && hi
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, RhoInterval::Empty)
    }

    fn from_bounds(lower: Endpoint, upper: Endpoint) -> Self {
        let nonempty = lower.value < upper.value
            || (lower.value == upper.value && lower.closed && upper.closed);
        if nonempty {
            RhoInterval::Interval { lower, upper }
        } else {
            RhoInterval::Empty
        }
    }

    /// Tightest lower and upper bounds out of candidate lists.
    fn intersect(lowers: &[Endpoint], uppers: &[Endpoint]) -> Self {
        let pick = |v: &[Endpoint], lower: bool| -> Endpoint {
            let mut best = v[0].clone();
            for e in &v[1..] {
                let tighter = if lower { e.value > best.value } else { e.value < best.value };
                if tighter || (e.value == best.value && !e.closed) {
                    best = e.clone();
                }
            }
            best
        };
        Self::from_bounds(pick(lowers, true), pick(uppers, false))
    }
}

impl fmt::Display for RhoInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhoInterval::Empty => write!(f, "empty"),
            RhoInterval::Interval { lower, upper } => write!(
                f,
                "{}{}, {}{}",
                if lower.closed { '[' } else { '(' },
                fmt_q(&lower.value),
                fmt_q(&upper.value),
                if upper.closed { ']' } else { ')' }
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhoIntervals {
    pub weak_d_a_alpha: RhoInterval,
    pub weak_h: RhoInterval,
    pub pathwise_d_a_alpha: RhoInterval,
    pub pathwise_h: RhoInterval,
}

fn open(v: Q) -> Endpoint {
    Endpoint { value: v, closed: false }
}
fn closed(v: Q) -> Endpoint {
    Endpoint { value: v, closed: true }
}

/// Admissible ρ per verdict level. Every constraint is linear in ρ, so each
/// level is a single interval. `params.rho` is ignored.
pub fn admissible_rho(p: &RegimeParams) -> Result<RhoIntervals> {
    let mut probe = p.clone();
    probe.rho = qi(0);
    probe.validate_class()?;
    let all_empty = RhoIntervals {
        weak_d_a_alpha: RhoInterval::Empty,
        weak_h: RhoInterval::Empty,
        pathwise_d_a_alpha: RhoInterval::Empty,
        pathwise_h: RhoInterval::Empty,
    };
    let mut acc = Acc { failed: Vec::new() };
    let a = probe.alpha();
    let b = probe.beta();
    let valid = (1..=3).contains(&p.d)
        && p.gamma.is_positive()
        && p.theta.is_positive()
        && p.theta < qi(1)
        && !p.mu.is_negative()
        && !p.nu.is_negative();
    if !valid || a >= qi(1) || b.is_negative() || !class_constraints(p, &mut acc) {
        return Ok(all_empty);
    }

    let g = &p.gamma;
    let th = &p.theta;
    let one = qi(1);
    let g2 = g / qi(2);

    let weak_lo = vec![open(&p.mu - &g2), open(q(p.d as i64, 4) + &p.mu - &g2)];
    let weak_hi = vec![closed(g2.clone()), closed(&g2 - &p.nu)];
    let weak = RhoInterval::intersect(&weak_lo, &weak_hi);

    let om = &one - th;
    let mut pw_hi = weak_hi.clone();
    pw_hi.push(open(
        (g * (&one + th) - qi(2) * &p.nu - qi(2) * th * &p.mu - q(p.d as i64, 2)) / (qi(2) * &om),
    ));
    pw_hi.push(open(&p.mu + g * th / (qi(2) * &om)));
    if !p.drift_bounded {
        pw_hi.push(open(&g2 - &p.nu));
    }
    let pathwise = RhoInterval::intersect(&weak_lo, &pw_hi);

    let (weak_h, pathwise_h) = if p.drift_bounded {
        let mut h_hi = pw_hi.clone();
        h_hi.push(open((g * th / qi(2) - th * &p.mu) / &om));
        (weak.clone(), RhoInterval::intersect(&weak_lo, &h_hi))
    } else {
        (RhoInterval::Empty, RhoInterval::Empty)
    };

    Ok(RhoIntervals {
        weak_d_a_alpha: weak,
        weak_h,
        pathwise_d_a_alpha: pathwise,
        pathwise_h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Weak,
    PathwiseThetaHigh,
    PathwiseThetaLow,
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Ok(match key.as_str() {
            "weak" => Scenario::Weak,
            "pathwise_theta_high" | "theta_high" | "high" => Scenario::PathwiseThetaHigh,
            "pathwise_theta_low" | "theta_low" | "low" => Scenario::PathwiseThetaLow,
            _ => return Err(Error::Parse(format!("unknown scenario {s:?}"))),
        })
    }
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Weak => "weak",
            Scenario::PathwiseThetaHigh => "pathwise_theta_high",
            Scenario::PathwiseThetaLow => "pathwise_theta_low",
        }
    }

    /// The verdict flag a table row of this scenario asserts.
    pub fn flag(self, v: &RegimeVerdict) -> bool {
        match self {
            Scenario::Weak => v.weak_d_a_alpha,
            _ => v.pathwise_d_a_alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mark {
    Exact,
    Plus,
    Minus,
}

/// A table cell `base + mult·ε`; the sign of `mult` follows the mark.
#[derive(Debug, Clone, Copy)]
struct Cell {
    num: i64,
    den: i64,
    mark: Mark,
    mult: i64,
    probe: i64,
}

const fn cx(num: i64, den: i64, probe: i64) -> Cell {
    Cell { num, den, mark: Mark::Exact, mult: 0, probe }
}
const fn cp(num: i64, den: i64, mult: i64, probe: i64) -> Cell {
    Cell { num, den, mark: Mark::Plus, mult, probe }
}
const fn cm(num: i64, den: i64, mult: i64, probe: i64) -> Cell {
    Cell { num, den, mark: Mark::Minus, mult: -mult, probe }
}

#[derive(Debug, Clone, Copy)]
struct RowSpec {
    d: u32,
    /// gamma, mu, nu, rho
    cells: [Cell; 4],
    /// θ = 1 - tε or tε in the pathwise scenarios.
    t: i64,
    note: Option<&'static str>,
}

const fn row(d: u32, cells: [Cell; 4], t: i64) -> RowSpec {
    RowSpec { d, cells, t, note: None }
}

const HEAT_WEAK: [RowSpec; 9] = [
    row(1, [cp(1, 4, 3, 0), cx(0, 1, -1), cp(0, 1, 1, -1), cm(1, 8, 1, -2)], 1),
    row(1, [cx(1, 1, -1), cx(0, 1, -1), cm(3, 4, 1, 0), cp(-1, 4, 1, 0)], 1),
    row(1, [cp(1, 2, 2, 0), cx(0, 1, -1), cp(1, 4, 1, 2), cx(0, 1, -1)], 1),
    row(2, [cp(1, 2, 3, 0), cx(0, 1, -1), cp(0, 1, 1, -1), cm(1, 4, 1, -2)], 1),
    row(2, [cx(1, 1, -1), cx(0, 1, -1), cm(1, 2, 1, 0), cp(0, 1, 1, 0)], 1),
    row(2, [cp(1, 1, 2, 0), cx(0, 1, -1), cp(1, 2, 1, 2), cx(0, 1, -1)], 1),
    row(3, [cp(3, 4, 3, 0), cx(0, 1, -1), cp(0, 1, 1, -1), cm(3, 8, 1, -2)], 1),
    row(3, [cx(1, 1, -1), cx(0, 1, -1), cm(1, 4, 1, 0), cp(1, 4, 1, 0)], 1),
    row(3, [cp(3, 2, 2, 0), cx(0, 1, -1), cp(3, 4, 1, 2), cx(0, 1, -1)], 1),
];

const HEAT_LOW: [RowSpec; 7] = [
    row(1, [cx(1, 2, -1), cx(0, 1, -1), cp(0, 1, 1, 2), cp(0, 1, 1, 0)], 8),
    row(1, [cx(1, 1, -1), cx(0, 1, -1), cp(1, 2, 1, 2), cp(-1, 4, 1, 0)], 8),
    row(1, [cp(1, 2, 1, 0), cx(0, 1, -1), cp(0, 1, 1, 2), cx(0, 1, -1)], 2),
    row(2, [cx(1, 1, -1), cx(0, 1, -1), cp(0, 1, 1, 2), cp(0, 1, 1, 0)], 4),
    row(2, [cp(1, 1, 1, 0), cx(0, 1, -1), cp(0, 1, 1, 2), cx(0, 1, -1)], 1),
    row(3, [cx(3, 2, -1), cx(0, 1, -1), cp(0, 1, 1, 2), cp(0, 1, 1, 0)], 3),
    row(3, [cp(3, 2, 1, 0), cx(0, 1, -1), cp(0, 1, 1, 2), cx(0, 1, -1)], 1),
];

const BURGERS_WEAK: [RowSpec; 7] = [
    row(1, [cx(1, 1, -1), cp(0, 1, 1, 0), cm(3, 4, 2, 0), cp(-1, 4, 2, 0)], 1),
    row(1, [cx(1, 1, -1), cx(1, 8, -1), cx(1, 2, -1), cx(0, 1, 1)], 1),
    row(1, [cx(1, 1, -2), cx(1, 4, -1), cp(1, 4, 1, -1), cp(0, 1, 1, 0)], 1),
    row(2, [cp(5, 4, 3, 0), cx(1, 4, -1), cp(1, 2, 1, 0), cm(1, 8, 1, -2)], 1),
    row(2, [cp(1, 1, 3, 0), cx(1, 2, -1), cp(0, 1, 1, 0), cm(1, 2, 1, -2)], 1),
    row(3, [cp(7, 4, 3, 0), cx(1, 4, -1), cp(3, 4, 1, 0), cm(1, 8, 1, -2)], 1),
    row(3, [cp(3, 2, 3, 0), cx(1, 2, -1), cp(1, 4, 1, 0), cm(1, 2, 1, -2)], 1),
];

const BURGERS_HIGH: [RowSpec; 6] = [
    row(1, [cx(1, 1, -2), cp(0, 1, 2, 0), cm(3, 4, 4, 0), cp(-1, 4, 3, 0)], 1),
    BURGERS_WEAK[2],
    BURGERS_WEAK[3],
    BURGERS_WEAK[4],
    BURGERS_WEAK[5],
    BURGERS_WEAK[6],
];

const RHO_CORRECTED: &str =
    "rho as printed (1/2-) violates the small-theta trace condition; nearest admissible value used";

const BURGERS_LOW: [RowSpec; 3] = [
    row(1, [cx(1, 1, -1), cx(1, 4, -1), cp(1, 4, 1, 2), cp(0, 1, 1, 0)], 8),
    RowSpec {
        d: 2,
        cells: [cp(3, 2, 1, 0), cx(1, 2, -1), cp(0, 1, 1, 0), cx(1, 4, -1)],
        t: 1,
        note: Some(RHO_CORRECTED),
    },
    RowSpec {
        d: 3,
        cells: [cp(9, 4, 1, 0), cx(1, 2, -1), cp(1, 4, 1, 0), cx(1, 8, -1)],
        t: 1,
        note: Some(RHO_CORRECTED),
    },
];

fn table_spec(class: ExampleClass, scenario: Scenario) -> Result<(&'static str, &'static [RowSpec])> {
    use ExampleClass::*;
    use Scenario::*;
    Ok(match (class, scenario) {
        (AbstractFractionalHeat, Weak) => ("fractional_heat_weak", &HEAT_WEAK),
        (AbstractFractionalHeat, PathwiseThetaHigh) => ("fractional_heat_theta_high", &HEAT_WEAK),
        (AbstractFractionalHeat, PathwiseThetaLow) => ("fractional_heat_theta_low", &HEAT_LOW),
        (Burgers | NavierStokes, Weak) => ("burgers_weak", &BURGERS_WEAK),
        (Burgers | NavierStokes, PathwiseThetaHigh) => ("burgers_theta_high", &BURGERS_HIGH),
        (Burgers | NavierStokes, PathwiseThetaLow) => ("burgers_theta_low", &BURGERS_LOW),
        (c, _) => {
            return Err(Error::Parameter(format!("no parameter table for class {}", c.name())))
        }
    })
}

const COORDS: [&str; 4] = ["gamma", "mu", "nu", "rho"];

#[derive(Debug, Clone)]
pub struct TableRow {
    pub table: &'static str,
    pub index: usize,
    pub params: RegimeParams,
    pub scenario: Scenario,
    pub offset: Q,
    /// Symbolic cell labels such as `1/4+`, in (gamma, theta, mu, nu, rho) order.
    pub labels: [String; 5],
    pub verdict: RegimeVerdict,
    pub note: Option<&'static str>,
    probes: [i64; 4],
    cell_base: [Q; 4],
}

impl TableRow {
    /// Single-coordinate perturbations across each cell's boundary: the
    /// coordinate name and the perturbed tuple.
    pub fn boundary_probes(&self) -> Vec<(&'static str, RegimeParams)> {
        let mut out = Vec::new();
        for i in 0..4 {
            let mut p = self.params.clone();
            let v = &self.cell_base[i] + qi(self.probes[i]) * &self.offset;
            match i {
                0 => p.gamma = v,
                1 => p.mu = v,
                2 => p.nu = v,
                _ => p.rho = v,
            }
            out.push((COORDS[i], p));
        }
        let mut p = self.params.clone();
        p.theta = match self.scenario {
            Scenario::PathwiseThetaLow => qi(0),
            _ => qi(1),
        };
        out.push(("theta", p));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowFailure {
    pub table: &'static str,
    pub index: usize,
    pub d: u32,
    pub violated: Vec<String>,
}

impl fmt::Display for RowFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} row {} (d={}): offset too large or row invalid; violated: {}",
            self.table,
            self.index + 1,
            self.d,
            self.violated.join("; ")
        )
    }
}

fn label(c: &Cell) -> String {
    let base = fmt_q(&q(c.num, c.den));
    match c.mark {
        Mark::Exact => base,
        Mark::Plus => format!("{base}+"),
        Mark::Minus => format!("{base}-"),
    }
}

/// Concrete rows for a parameter table at base offset `ε`. Every row is
/// re-validated; any failing row aborts the table with a per-row report.
pub fn emit_table(class: ExampleClass, scenario: Scenario, offset: &Q) -> Result<Vec<TableRow>> {
    if !offset.is_positive() {
        return Err(Error::Parameter(format!(
            "offset must be strictly positive, got {}",
            fmt_q(offset)
        )));
    }
    let (name, specs) = table_spec(class, scenario)?;
    let table_class = match class {
        ExampleClass::NavierStokes => ExampleClass::NavierStokes,
        ExampleClass::AbstractFractionalHeat => ExampleClass::AbstractFractionalHeat,
        _ => ExampleClass::Burgers,
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (index, spec) in specs.iter().enumerate() {
        let base: [Q; 4] = std::array::from_fn(|i| q(spec.cells[i].num, spec.cells[i].den));
        let val: [Q; 4] = std::array::from_fn(|i| &base[i] + qi(spec.cells[i].mult) * offset);
        let (theta, theta_label) = match scenario {
            Scenario::Weak => (q(1, 2), "1/2".to_string()),
            Scenario::PathwiseThetaHigh => (qi(1) - qi(spec.t) * offset, "1-".to_string()),
            Scenario::PathwiseThetaLow => (qi(spec.t) * offset, "0+".to_string()),
        };
        let params = RegimeParams {
            d: spec.d,
            gamma: val[0].clone(),
            theta,
            mu: val[1].clone(),
            nu: val[2].clone(),
            rho: val[3].clone(),
            drift_bounded: !table_class.unbounded_drift(),
            class: table_class,
            extra: ClassExtra::None,
        };
        let verdict = check(&params)?;
        if !scenario.flag(&verdict) {
            failures.push(RowFailure {
                table: name,
                index,
                d: spec.d,
                violated: verdict
                    .failed_conditions
                    .iter()
                    .filter(|c| c.name != "bounded_drift" && c.name != "balance_bounded")
                    .map(|c| format!("{}: {}", c.name, c.detail))
                    .collect(),
            });
            continue;
        }
        let c = &spec.cells;
        rows.push(TableRow {
            table: name,
            index,
            params,
            scenario,
            offset: offset.clone(),
            labels: [label(&c[0]), theta_label, label(&c[1]), label(&c[2]), label(&c[3])],
            verdict,
            note: spec.note,
            probes: std::array::from_fn(|i| spec.cells[i].probe),
            cell_base: base,
        });
    }
    if !failures.is_empty() {
        return Err(Error::Table(failures));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(Error::Parse(format!("unknown format {s:?}"))),
        }
    }
}

pub const TABLE_CSV_HEADER: &str =
    "table,row,d,gamma,theta,mu,nu,rho,gamma_label,mu_label,nu_label,rho_label,offset,weak,pathwise,critical,note";

pub fn render_table(rows: &[TableRow], format: Format) -> String {
    let b = |x: bool| if x { "yes" } else { "no" };
    match format {
        Format::Csv => {
            let mut s = String::from(TABLE_CSV_HEADER);
            s.push('\n');
            for r in rows {
                let p = &r.params;
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.table,
                    r.index + 1,
                    p.d,
                    fmt_q(&p.gamma),
                    fmt_q(&p.theta),
                    fmt_q(&p.mu),
                    fmt_q(&p.nu),
                    fmt_q(&p.rho),
                    r.labels[0],
                    r.labels[2],
                    r.labels[3],
                    r.labels[4],
                    fmt_q(&r.offset),
                    r.verdict.weak_d_a_alpha,
                    r.verdict.pathwise_d_a_alpha,
                    r.verdict.critical,
                    r.note.unwrap_or("")
                ));
            }
            s
        }
        Format::Json => {
            let v: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    let p = &r.params;
                    serde_json::json!({
                        "table": r.table,
                        "row": r.index + 1,
                        "d": p.d,
                        "gamma": fmt_q(&p.gamma),
                        "theta": fmt_q(&p.theta),
                        "mu": fmt_q(&p.mu),
                        "nu": fmt_q(&p.nu),
                        "rho": fmt_q(&p.rho),
                        "labels": {
                            "gamma": r.labels[0], "theta": r.labels[1], "mu": r.labels[2],
                            "nu": r.labels[3], "rho": r.labels[4],
                        },
                        "offset": fmt_q(&r.offset),
                        "verdict": r.verdict,
                        "note": r.note,
                    })
                })
                .collect();
            serde_json::to_string_pretty(&v).unwrap_or_default() + "\n"
        }
        Format::Markdown => {
            let mut s = String::from(
                "| d | γ | θ | μ | ν | ρ | weak | pathwise | critical |\n|---|---|---|---|---|---|---|---|---|\n",
            );
            for r in rows {
                let p = &r.params;
                let cell = |lab: &str, v: &Q| format!("{lab} ({})", fmt_q(v));
                s.push_str(&format!(
                    "| {} | {} | {} | {} | {} | {}{} | {} | {} | {} |\n",
                    p.d,
                    cell(&r.labels[0], &p.gamma),
                    cell(&r.labels[1], &p.theta),
                    cell(&r.labels[2], &p.mu),
                    cell(&r.labels[3], &p.nu),
                    cell(&r.labels[4], &p.rho),
                    if r.note.is_some() { " *" } else { "" },
                    b(r.verdict.weak_d_a_alpha),
                    b(r.verdict.pathwise_d_a_alpha),
                    b(r.verdict.critical),
                ));
            }
            if rows.iter().any(|r| r.note.is_some()) {
                s.push_str(&format!("\n\\* {RHO_CORRECTED}\n"));
            }
            s
        }
    }
}
