//! Counter-based Gaussian draws and exact Ornstein–Uhlenbeck transitions.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{ModeVector, SpectralOperator};

/// Words reserved per (step, mode) cell. Box–Muller uses four of them.
const WORDS_PER_STEP: u128 = 16;

/// The draw for `(mode k, step j)` of a trajectory is a pure function of
/// `(seed, trajectory_id, j, k)`: ChaCha8 keyed by the first two, stream `k`,
/// word position `16·j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoiseStream {
    pub seed: u64,
    pub trajectory_id: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, trajectory_id: u64) -> Self {
        NoiseStream { seed, trajectory_id }
    }

    fn key(&self) -> [u8; 32] {
        let mut k = [0u8; 32];
        k[..8].copy_from_slice(&self.seed.to_le_bytes());
        k[8..16].copy_from_slice(&self.trajectory_id.to_le_bytes());
        k[16..24].copy_from_slice(b"spdelab\0");
        k
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key())
    }

    /// Standard normal draw for a 1-based mode at a step.
    pub fn gaussian(&self, step: u64, mode: usize) -> f64 {
        let mut rng = self.rng();
        draw(&mut rng, step, mode)
    }

    /// Draws for modes `1..=n` at one step.
    pub fn gaussians(&self, step: u64, n: usize) -> Vec<f64> {
        let mut rng = self.rng();
        (1..=n).map(|k| draw(&mut rng, step, k)).collect()
    }

    pub fn gaussians_into(&self, step: u64, out: &mut [f64]) {
        let mut rng = self.rng();
        for (i, o) in out.iter_mut().enumerate() {
            *o = draw(&mut rng, step, i + 1);
        }
    }
}

fn unit_open(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn draw(rng: &mut ChaCha8Rng, step: u64, mode: usize) -> f64 {
    rng.set_stream(mode as u64);
    rng.set_word_pos(step as u128 * WORDS_PER_STEP);
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_open(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Running count and order-sensitive checksum of consumed draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrawTally {
    pub count: u64,
    pub checksum: u64,
}

impl Default for DrawTally {
    fn default() -> Self {
        DrawTally { count: 0, checksum: 0xcbf2_9ce4_8422_2325 }
    }
}

impl DrawTally {
    pub fn record(&mut self, x: f64) {
        self.count += 1;
        for b in x.to_bits().to_le_bytes() {
            self.checksum = (self.checksum ^ b as u64).wrapping_mul(0x0100_0000_01b3);
        }
    }
}

/// Variance of `∫₀ᵗ e^{-(t-s)λ} λ^{-δ} dβ(s)`: `λ^{-2δ}(1 − e^{-2λt})/(2λ)`.
pub fn convolution_variance(lambda: f64, delta: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    if t < 0.0 {
        return Err(Error::Parameter(format!("t must be nonnegative, got {t}")));
    }
    Ok(variance_unchecked(lambda, delta, t))
}

pub(crate) fn variance_unchecked(lambda: f64, delta: f64, t: f64) -> f64 {
    let z = lambda * t;
    let scale = lambda.powf(-2.0 * delta);
    if z < 1e-8 {
        scale * t * (1.0 - z)
    } else {
        scale * (-(-2.0 * z).exp_m1()) / (2.0 * lambda)
    }
}

/// Exact transition of the linear equation over one step of length `h`.
pub fn ou_step(
    op: &SpectralOperator,
    delta: f64,
    h: f64,
    state: &ModeVector,
    stream: &NoiseStream,
    step: u64,
) -> Result<ModeVector> {
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("step must be positive, got {h}")));
    }
    if state.len() > op.n_modes() {
        return Err(Error::Dimension("state longer than operator".into()));
    }
    let coeffs = state
        .coeffs
        .iter()
        .zip(op.eigenvalues())
        .enumerate()
        .map(|(i, (x, &l))| {
            (-l * h).exp() * x + variance_unchecked(l, delta, h).sqrt() * stream.gaussian(step, i + 1)
        })
        .collect();
    Ok(ModeVector { coeffs, sobolev_index: state.sobolev_index })
}
