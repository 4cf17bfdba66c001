//! Named initial velocity fields.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::spectral::{self, SpectralError, SpectralField};

/// Initial conditions defined independently of the resolution, so that
/// refinement studies truncate one and the same datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `a·(sin x cos y, −cos x sin y)`.
    TaylorGreen { amplitude: f64 },
    /// `a·(cos y, 0)`.
    Shear { amplitude: f64 },
    /// Random phases on `0 < |k|∞ ≤ k_max` with `|û_k| ∝ |k|⁻²`, scaled to the given energy.
    RandomSmooth { k_max: usize, energy: f64, seed: u64 },
    /// Random phases on every resolved mode with `|û_k| = a·|k|^{-(p+1)}`.
    ///
    /// In two dimensions the `H^σ` norm is finite iff `σ < p`.
    PowerTail { exponent: f64, amplitude: f64, seed: u64 },
    Zero,
    Snapshot { path: PathBuf },
}

const PHASE_STREAM: u64 = 0x5EED_F1E1D;

fn canonical_id(k1: i64, k2: i64) -> u64 {
    ((k1 + 4096) as u64) * 8192 + (k2 + 4096) as u64
}

/// Adds a divergence-free mode `amp·e^{iθ}·k⊥/|k|` on the canonical half plane.
fn fill_random_modes<A>(n: usize, k_max: usize, seed: u64, amp: A) -> SpectralField
where
    A: Fn(f64) -> f64,
{
    let mut f = SpectralField::zeros(n, 2);
    let km = k_max.min(n) as i64;
    for k1 in 0..=km {
        for k2 in -km..=km {
            if k1 == 0 && k2 <= 0 {
                continue;
            }
            let kn = ((k1 * k1 + k2 * k2) as f64).sqrt();
            let theta = std::f64::consts::TAU * rng::uniform(seed, PHASE_STREAM, canonical_id(k1, k2), 0);
            let z = Complex64::from_polar(amp(kn), theta);
            f.set_mode(0, k1, k2, z * (-(k2 as f64) / kn));
            f.set_mode(1, k1, k2, z * (k1 as f64 / kn));
        }
    }
    f
}

impl InitialCondition {
    pub fn build(&self, n: usize) -> Result<SpectralField, SpectralError> {
        let field = match self {
            InitialCondition::TaylorGreen { amplitude } => {
                let a = *amplitude;
                SpectralField::from_fn(n, 2, move |x, y| [a * x.sin() * y.cos(), -a * x.cos() * y.sin()])
            }
            InitialCondition::Shear { amplitude } => {
                let a = *amplitude;
                SpectralField::from_fn(n, 2, move |_, y| [a * y.cos(), 0.0])
            }
            InitialCondition::RandomSmooth { k_max, energy, seed } => {
                let f = fill_random_modes(n, *k_max, *seed, |k| k.powi(-2));
                // Normalize against the full datum, not its truncation.
                let reference = fill_random_modes(*k_max, *k_max, *seed, |k| k.powi(-2));
                let e = reference.energy();
                if e > 0.0 {
                    f.scaled((energy / e).sqrt())
                } else {
                    f
                }
            }
            InitialCondition::PowerTail { exponent, amplitude, seed } => {
                let (p, a) = (*exponent, *amplitude);
                fill_random_modes(n, n, *seed, move |k| a * k.powf(-(p + 1.0)))
            }
            InitialCondition::Zero => SpectralField::zeros(n, 2),
            InitialCondition::Snapshot { path } => {
                let f = spectral::snapshot::load(path)?;
                if f.components() != 2 {
                    return Err(SpectralError::ComponentMismatch { expected: 2, got: f.components() });
                }
                f.resample(n)
            }
        };
        let mut field = spectral::leray_project(&field)?;
        // Zero mean velocity.
        field.set_mode(0, 0, 0, Complex64::new(0.0, 0.0));
        field.set_mode(1, 0, 0, Complex64::new(0.0, 0.0));
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{evaluate_at, sobolev_norm, SobolevIndex};

    #[test]
    fn taylor_green_values() {
        let u = InitialCondition::TaylorGreen { amplitude: 1.0 }.build(8).unwrap();
        let v = evaluate_at(&u, &[[0.4, 1.3]])[0];
        assert!((v[0] - 0.4f64.sin() * 1.3f64.cos()).abs() < 1e-14);
        assert!((v[1] + 0.4f64.cos() * 1.3f64.sin()).abs() < 1e-14);
        assert!((u.energy() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn random_smooth_is_resolution_independent() {
        let ic = InitialCondition::RandomSmooth { k_max: 3, energy: 0.5, seed: 11 };
        let a = ic.build(8).unwrap();
        let b = ic.build(16).unwrap();
        assert!((a.energy() - 0.5).abs() < 1e-13);
        assert!(b.resample(8).max_abs_diff(&a) < 1e-15);
        assert!(a.divergence_defect() < 1e-14);
    }

    #[test]
    fn power_tail_norm_convergence() {
        let s = |v: f64| SobolevIndex::new(v).unwrap();
        let regular = InitialCondition::PowerTail { exponent: 3.6, amplitude: 0.5, seed: 3 };
        let h3: Vec<f64> = [16, 32, 64].iter().map(|&n| sobolev_norm(&regular.build(n).unwrap(), s(3.0))).collect();
        let rel = (h3[2] - h3[1]) / h3[1];
        assert!(rel > 0.0 && rel < 0.01, "relative change {rel}");

        let rough = InitialCondition::PowerTail { exponent: 3.0, amplitude: 0.5, seed: 3 };
        let h3: Vec<f64> = [16, 32, 64].iter().map(|&n| sobolev_norm(&rough.build(n).unwrap(), s(3.0))).collect();
        // Σ|k|⁻² over shells grows like 2π·ln N: each doubling adds ≈ 2π ln 2 · a².
        let gain1 = h3[1].powi(2) - h3[0].powi(2);
        let gain2 = h3[2].powi(2) - h3[1].powi(2);
        let expected = std::f64::consts::TAU * 2f64.ln() * 0.25;
        assert!((gain2 - expected).abs() < 0.1 * expected, "{gain2} vs {expected}");
        assert!(gain1 > 0.0 && gain2 > 0.0);
    }
}
