//! Diagonal operators on the unit interval and coefficient/grid transforms.
//!
//! Mode indices in the public API are 1-based (`e_1, e_2, …`); storage is 0-based.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `e_k = √2 sin(kπξ)`, `λ°_k = π²k²`.
    DirichletSine,
    /// `e_1 = 1`, `e_k = √2 cos((k−1)πξ)`, `λ°_k = 1 + π²(k−1)²` (the operator `I + A_N`).
    NeumannShiftedCosine,
    /// User eigenvalues with declared growth `λ°_k ~ c·k^growth`. No collocation grid.
    Custom { growth: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOperator {
    basis: Basis,
    base: Vec<f64>,
    power: f64,
    eig: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeVector {
    pub coeffs: Vec<f64>,
    pub sobolev_index: f64,
}

impl ModeVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        ModeVector { coeffs, sobolev_index: 0.0 }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n])
    }

    /// `e_k` in an `n`-mode space (1-based `k`).
    pub fn unit(n: usize, k: usize) -> Self {
        let mut v = Self::zeros(n);
        v.coeffs[k - 1] = 1.0;
        v
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn dot(&self, other: &ModeVector) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Zero-padded or truncated copy with `n` modes (the projection `P_n`).
    pub fn resized(&self, n: usize) -> ModeVector {
        let mut c = self.coeffs.clone();
        c.resize(n, 0.0);
        ModeVector { coeffs: c, sobolev_index: self.sobolev_index }
    }

    pub fn scaled(&self, s: f64) -> ModeVector {
        ModeVector {
            coeffs: self.coeffs.iter().map(|x| x * s).collect(),
            sobolev_index: self.sobolev_index,
        }
    }

    pub fn sub(&self, other: &ModeVector) -> ModeVector {
        let n = self.len().max(other.len());
        let a = self.resized(n);
        let b = other.resized(n);
        ModeVector {
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x - y).collect(),
            sobolev_index: self.sobolev_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub values: Vec<f64>,
    pub grid: Basis,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trace {
    Finite {
        value: f64,
        terms: usize,
        tail_bound: f64,
    },
    Divergent,
}

impl Trace {
    pub fn is_finite(&self) -> bool {
        matches!(self, Trace::Finite { .. })
    }
    pub fn value(&self) -> Option<f64> {
        match self {
            Trace::Finite { value, .. } => Some(*value),
            Trace::Divergent => None,
        }
    }
}

const TRACE_MAX_TERMS: usize = 1 << 24;

fn base_eigenvalue(basis: Basis, k: usize) -> f64 {
    let kf = k as f64;
    match basis {
        Basis::DirichletSine => PI * PI * kf * kf,
        Basis::NeumannShiftedCosine => 1.0 + PI * PI * (kf - 1.0) * (kf - 1.0),
        Basis::Custom { .. } => f64::NAN,
    }
}

impl SpectralOperator {
    pub fn new(basis: Basis, n_modes: usize, power: f64) -> Result<Self> {
        if matches!(basis, Basis::Custom { .. }) {
            return Err(Error::Parameter("use SpectralOperator::custom for custom eigenvalues".into()));
        }
        if n_modes == 0 {
            return Err(Error::Parameter("n_modes must be positive".into()));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::Parameter(format!("power must be positive, got {power}")));
        }
        let base: Vec<f64> = (1..=n_modes).map(|k| base_eigenvalue(basis, k)).collect();
        Ok(Self::from_parts(basis, base, power))
    }

    pub fn dirichlet(n_modes: usize, power: f64) -> Result<Self> {
        Self::new(Basis::DirichletSine, n_modes, power)
    }

    pub fn neumann(n_modes: usize, power: f64) -> Result<Self> {
        Self::new(Basis::NeumannShiftedCosine, n_modes, power)
    }

    /// Arbitrary positive, strictly increasing base eigenvalues with a declared
    /// growth exponent `p` in `λ°_k ~ c·k^p`, used for trace decisions.
    pub fn custom(base: Vec<f64>, growth: f64, power: f64) -> Result<Self> {
        if base.is_empty() || !(base[0] > 0.0) {
            return Err(Error::Parameter("custom eigenvalues must be nonempty and positive".into()));
        }
        if base.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("custom eigenvalues must be strictly increasing".into()));
        }
        if !(growth > 0.0 && power > 0.0) {
            return Err(Error::Parameter("growth and power must be positive".into()));
        }
        Ok(Self::from_parts(Basis::Custom { growth }, base, power))
    }

    fn from_parts(basis: Basis, base: Vec<f64>, power: f64) -> Self {
        let eig = base.iter().map(|l| l.powf(power)).collect();
        SpectralOperator { basis, base, power, eig }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }
    pub fn n_modes(&self) -> usize {
        self.eig.len()
    }
    pub fn power(&self) -> f64 {
        self.power
    }
    /// Effective eigenvalues `λ_k = (λ°_k)^γ`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig
    }
    pub fn base_eigenvalues(&self) -> &[f64] {
        &self.base
    }
    /// `λ_k`, 1-based.
    pub fn lambda(&self, k: usize) -> f64 {
        self.eig[k - 1]
    }

    /// The same operator restricted to the first `n` modes.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_modes() {
            return Err(Error::Dimension(format!(
                "cannot truncate {} modes to {}",
                self.n_modes(),
                n
            )));
        }
        Ok(Self::from_parts(self.basis, self.base[..n].to_vec(), self.power))
    }

    fn check_len(&self, v: &ModeVector) -> Result<()> {
        if v.len() > self.n_modes() {
            return Err(Error::Dimension(format!(
                "vector has {} modes, operator {}",
                v.len(),
                self.n_modes()
            )));
        }
        Ok(())
    }

    /// `A^σ v`.
    pub fn frac_apply(&self, sigma: f64, v: &ModeVector) -> Result<ModeVector> {
        self.check_len(v)?;
        Ok(ModeVector {
            coeffs: v.coeffs.iter().zip(&self.eig).map(|(x, l)| l.powf(sigma) * x).collect(),
            sobolev_index: v.sobolev_index - sigma,
        })
    }

    /// `A_D^σ v` with the base (un-powered) eigenvalues.
    pub fn base_apply(&self, sigma: f64, v: &ModeVector) -> Result<ModeVector> {
        self.check_len(v)?;
        Ok(ModeVector {
            coeffs: v.coeffs.iter().zip(&self.base).map(|(x, l)| l.powf(sigma) * x).collect(),
            sobolev_index: v.sobolev_index - sigma / self.power,
        })
    }

    /// `‖v‖_σ = (Σ λ_k^{2σ} v_k²)^{1/2}`.
    pub fn sobolev_norm(&self, sigma: f64, v: &ModeVector) -> Result<f64> {
        self.check_len(v)?;
        Ok(v.coeffs
            .iter()
            .zip(&self.eig)
            .map(|(x, l)| l.powf(2.0 * sigma) * x * x)
            .sum::<f64>()
            .sqrt())
    }

    /// Asymptotic law `λ°_k ≈ c·(k − shift)^p` used beyond the stored modes.
    fn asymptotics(&self) -> (f64, f64, f64) {
        match self.basis {
            Basis::DirichletSine => (PI * PI, 2.0, 0.0),
            Basis::NeumannShiftedCosine => (PI * PI, 2.0, 1.0),
            Basis::Custom { growth } => {
                let n = self.base.len();
                (self.base[n - 1] / (n as f64).powf(growth), growth, 0.0)
            }
        }
    }

    fn base_at(&self, k: usize) -> f64 {
        match self.basis {
            Basis::Custom { .. } => {
                if k <= self.base.len() {
                    self.base[k - 1]
                } else {
                    let (c, p, _) = self.asymptotics();
                    c * (k as f64).powf(p)
                }
            }
            b => base_eigenvalue(b, k),
        }
    }

    /// `Tr A^{-σ} = Σ_k λ_k^{-σ}` of the untruncated operator, or divergence.
    pub fn trace_power(&self, sigma: f64, tail_tol: f64) -> Trace {
        let (c, p, shift) = self.asymptotics();
        let s = sigma * self.power * p;
        if s <= 1.0 {
            return Trace::Divergent;
        }
        let e = sigma * self.power;
        let tail_from = |x: f64| c.powf(-e) * x.powf(1.0 - s) / (s - 1.0);
        let mut sum = 0.0;
        let mut k = 0usize;
        let mut target = 1024usize;
        loop {
            while k < target {
                k += 1;
                sum += self.base_at(k).powf(-e);
            }
            let bound = tail_from(k as f64 - shift);
            if bound < tail_tol || k >= TRACE_MAX_TERMS {
                let estimate = tail_from(k as f64 + 0.5 - shift);
                return Trace::Finite {
                    value: sum + estimate,
                    terms: k,
                    tail_bound: bound,
                };
            }
            target = (target * 2).min(TRACE_MAX_TERMS);
        }
    }

    pub fn grid_points(&self, n_points: usize) -> Result<Vec<f64>> {
        let n = n_points as f64;
        match self.basis {
            Basis::DirichletSine => Ok((1..=n_points).map(|j| j as f64 / (n + 1.0)).collect()),
            Basis::NeumannShiftedCosine => Ok((0..n_points).map(|j| (j as f64 + 0.5) / n).collect()),
            Basis::Custom { .. } => Err(Error::Config("custom operators have no collocation grid".into())),
        }
    }

    /// Precomputed basis values and derivatives on a grid of `n_points`.
    pub fn collocation(&self, n_points: usize) -> Result<Collocation> {
        Collocation::new(self.basis, self.n_modes(), n_points)
    }

    pub fn to_collocation(&self, v: &ModeVector, n_points: usize) -> Result<GridField> {
        self.check_len(v)?;
        let c = Collocation::new(self.basis, v.len().max(1), n_points)?;
        Ok(GridField {
            values: c.values(&v.coeffs, 0),
            grid: self.basis,
            n_points,
        })
    }

    pub fn from_collocation(&self, f: &GridField, n_modes: usize) -> Result<ModeVector> {
        if f.grid != self.basis {
            return Err(Error::Config("grid does not match operator basis".into()));
        }
        if n_modes > self.n_modes() {
            return Err(Error::Dimension(format!(
                "requested {} modes from an operator with {}",
                n_modes,
                self.n_modes()
            )));
        }
        let c = Collocation::new(self.basis, n_modes, f.n_points)?;
        Ok(ModeVector::new(c.project(&f.values)))
    }
}

/// Basis function tables on a fixed grid. The grids are chosen so that the
/// discrete inner product `w·Σ_j` is exactly orthonormal on the first
/// `n_points` basis functions.
#[derive(Debug, Clone)]
pub struct Collocation {
    basis: Basis,
    n_modes: usize,
    n_points: usize,
    weight: f64,
    // [order][j * n_modes + k]
    tables: [Vec<f64>; 3],
}

impl Collocation {
    pub fn new(basis: Basis, n_modes: usize, n_points: usize) -> Result<Self> {
        if n_points < n_modes {
            return Err(Error::Dimension(format!(
                "n_points = {n_points} is smaller than n_modes = {n_modes}"
            )));
        }
        let (points, weight) = match basis {
            Basis::DirichletSine => (
                (1..=n_points).map(|j| j as f64 / (n_points as f64 + 1.0)).collect::<Vec<_>>(),
                1.0 / (n_points as f64 + 1.0),
            ),
            Basis::NeumannShiftedCosine => (
                (0..n_points).map(|j| (j as f64 + 0.5) / n_points as f64).collect(),
                1.0 / n_points as f64,
            ),
            Basis::Custom { .. } => {
                return Err(Error::Config("custom operators have no collocation grid".into()))
            }
        };
        let mut tables = [
            vec![0.0; n_points * n_modes],
            vec![0.0; n_points * n_modes],
            vec![0.0; n_points * n_modes],
        ];
        for (j, &x) in points.iter().enumerate() {
            for k in 0..n_modes {
                let (v, d1, d2) = match basis {
                    Basis::DirichletSine => {
                        let w = (k + 1) as f64 * PI;
                        let (s, c) = (w * x).sin_cos();
                        (SQRT_2 * s, SQRT_2 * w * c, -SQRT_2 * w * w * s)
                    }
                    _ => {
                        if k == 0 {
                            (1.0, 0.0, 0.0)
                        } else {
                            let w = k as f64 * PI;
                            let (s, c) = (w * x).sin_cos();
                            (SQRT_2 * c, -SQRT_2 * w * s, -SQRT_2 * w * w * c)
                        }
                    }
                };
                let i = j * n_modes + k;
                tables[0][i] = v;
                tables[1][i] = d1;
                tables[2][i] = d2;
            }
        }
        Ok(Collocation { basis, n_modes, n_points, weight, tables })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }
    pub fn n_points(&self) -> usize {
        self.n_points
    }
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Values of the `order`-th derivative of `Σ c_k e_k` at the grid points.
    pub fn values(&self, coeffs: &[f64], order: usize) -> Vec<f64> {
        let t = &self.tables[order];
        let m = coeffs.len().min(self.n_modes);
        (0..self.n_points)
            .map(|j| {
                let row = &t[j * self.n_modes..j * self.n_modes + m];
                row.iter().zip(coeffs).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    pub fn values_into(&self, coeffs: &[f64], order: usize, out: &mut [f64]) {
        let t = &self.tables[order];
        let m = coeffs.len().min(self.n_modes);
        for (j, o) in out.iter_mut().enumerate().take(self.n_points) {
            let row = &t[j * self.n_modes..j * self.n_modes + m];
            *o = row.iter().zip(coeffs).map(|(a, b)| a * b).sum();
        }
    }

    /// Discrete projection onto the first `n_modes` basis functions.
    pub fn project(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_modes];
        self.project_into(values, &mut out);
        out
    }

    pub fn project_into(&self, values: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let t = &self.tables[0];
        for (j, &v) in values.iter().enumerate().take(self.n_points) {
            let row = &t[j * self.n_modes..(j + 1) * self.n_modes];
            for (o, e) in out.iter_mut().zip(row) {
                *o += e * v;
            }
        }
        out.iter_mut().for_each(|o| *o *= self.weight);
    }

    /// Discrete `L²` inner product of two grid fields.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weight * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_follow_basis() {
        let d = SpectralOperator::dirichlet(4, 1.0).unwrap();
        assert!((d.lambda(2) - 4.0 * PI * PI).abs() < 1e-12);
        let n = SpectralOperator::neumann(3, 2.0).unwrap();
        assert_eq!(n.lambda(1), 1.0);
        assert!((n.lambda(2) - (1.0 + PI * PI).powi(2)).abs() < 1e-9);
        assert!(SpectralOperator::custom(vec![1.0, 1.0], 2.0, 1.0).is_err());
        assert!(SpectralOperator::dirichlet(0, 1.0).is_err());
    }

    #[test]
    fn frac_apply_examples() {
        let d = SpectralOperator::dirichlet(3, 1.0).unwrap();
        let v = ModeVector::unit(1, 1);
        assert_eq!(d.frac_apply(0.0, &v).unwrap(), v);
        let w = d.frac_apply(-1.0, &v).unwrap();
        assert!((w.coeffs[0] - 1.0 / (PI * PI)).abs() < 1e-15);
        assert_eq!(w.sobolev_index, 1.0);
        let n = SpectralOperator::neumann(3, 2.0).unwrap();
        assert_eq!(n.frac_apply(0.5, &v).unwrap().coeffs, vec![1.0]);
    }

    #[test]
    fn sobolev_norm_examples() {
        let d = SpectralOperator::dirichlet(3, 1.0).unwrap();
        assert_eq!(d.sobolev_norm(0.3, &ModeVector::zeros(3)).unwrap(), 0.0);
        assert!((d.sobolev_norm(0.5, &ModeVector::unit(3, 1)).unwrap() - PI).abs() < 1e-14);
        let v = ModeVector::unit(3, 2);
        assert!((d.sobolev_norm(-1.0, &v).unwrap() - 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn trace_examples() {
        let d = SpectralOperator::dirichlet(1, 1.0).unwrap();
        let t = d.trace_power(1.0, 1e-6);
        assert!((t.value().unwrap() - 1.0 / 6.0).abs() < 1e-9, "{t:?}");
        assert_eq!(d.trace_power(0.5, 1e-6), Trace::Divergent);
        assert_eq!(d.trace_power(0.0, 1e-6), Trace::Divergent);
        // λ_k = (π²k²)^2, Σ = 1/(90 π⁴)·π⁴ … = ζ(4)/π⁴ = 1/90
        let d2 = SpectralOperator::dirichlet(1, 2.0).unwrap();
        assert!((d2.trace_power(1.0, 1e-12).value().unwrap() - 1.0 / 90.0).abs() < 1e-13);
    }

    #[test]
    fn collocation_examples() {
        let d = SpectralOperator::dirichlet(4, 1.0).unwrap();
        let g = d.to_collocation(&ModeVector::unit(1, 1), 4).unwrap();
        for (j, x) in d.grid_points(4).unwrap().iter().enumerate() {
            assert!((g.values[j] - SQRT_2 * (PI * x).sin()).abs() < 1e-15);
        }
        let xs = d.grid_points(8).unwrap();
        let f = GridField {
            values: xs.iter().map(|x| SQRT_2 * (2.0 * PI * x).sin()).collect(),
            grid: Basis::DirichletSine,
            n_points: 8,
        };
        let c = d.from_collocation(&f, 4).unwrap();
        for (k, v) in c.coeffs.iter().enumerate() {
            let want = if k == 1 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-14);
        }
        assert!(d.to_collocation(&ModeVector::unit(4, 1), 3).is_err());
    }

    #[test]
    fn round_trip_both_bases() {
        for basis in [Basis::DirichletSine, Basis::NeumannShiftedCosine] {
            let op = SpectralOperator::new(basis, 12, 1.0).unwrap();
            let v = ModeVector::new((0..12).map(|k| ((k * 7 % 5) as f64 - 2.0) / (k + 1) as f64).collect());
            for m in [12, 13, 24, 31] {
                let g = op.to_collocation(&v, m).unwrap();
                let back = op.from_collocation(&g, 12).unwrap();
                let err = back.sub(&v).norm() / v.norm();
                assert!(err < 1e-12, "{basis:?} m={m} err={err}");
                let c = op.collocation(m).unwrap();
                let parseval = c.inner(&g.values, &g.values).sqrt();
                assert!((parseval - v.norm()).abs() < 1e-12 * v.norm());
            }
        }
    }
}
