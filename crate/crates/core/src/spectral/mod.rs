//! Fourier-spectral fields on the flat torus `[0, 2π)²`.
//!
//! A [`SpectralField`] holds the truncated coefficients `û_k`, `|k₁|, |k₂| ≤ N`,
//! of a real scalar or vector field, normalized so that
//!
//! ```text
//! û_k = (2π)⁻² ∫ f(x) e^{-ik·x} dx,        f(x) = Σ_k û_k e^{ik·x}.
//! ```
//!
//! With this convention the L² pairing is the spatial mean,
//! `⟨f, g⟩ = Σ_k Re(û_k conj(ĝ_k))`, and `cos x` has unit-amplitude modes `±(1,0)` at `½`.

mod eval;
mod fft;
mod field;
mod multiplier;
mod ops;
pub mod snapshot;

pub use eval::FieldEvaluator;
pub use field::{SobolevIndex, SpectralField};
pub use multiplier::FourierMultiplier;
pub use ops::{MIN_CONVECTIVE_RESOLUTION, convective_term, evaluate_at, leray_project, regularize, sobolev_norm};

pub(crate) use fft::{plan, smooth_size};

use thiserror::Error;

/// Relative tolerance for the divergence-free invariant `|k·û_k| ≤ ε|û_k|`.
pub const DIVERGENCE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("resolution N = {n} is below the minimum {min}")]
    ResolutionTooSmall { n: usize, min: usize },
    #[error("regularization parameter must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("Sobolev index must be a finite nonnegative number, got {0}")]
    InvalidSobolevIndex(f64),
    #[error("expected a {expected}-component field, got {got}")]
    ComponentMismatch { expected: usize, got: usize },
    #[error("resolution mismatch: {0} vs {1}")]
    ResolutionMismatch(usize, usize),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
