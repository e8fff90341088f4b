//! Spectral numerics for `dX + AX dt = B(X) dt + A^{-δ} dW` on the unit interval:
//! exact regime checks, Galerkin simulation with exact Ornstein–Uhlenbeck sampling,
//! and finite-dimensional Kolmogorov fixed points.

pub mod drift;
pub mod error;
pub mod experiments;
pub mod kolmogorov;
pub mod noise;
pub mod regime;
pub mod solver;
pub mod spectral;

pub use drift::{DriftKind, DriftMetadata, DriftSpec, ScalarFn};
pub use error::{Error, Result};
pub use noise::NoiseStream;
pub use regime::{ExampleClass, RegimeParams, RegimeVerdict, Scenario};
pub use spectral::{Basis, GridField, ModeVector, SpectralOperator};
