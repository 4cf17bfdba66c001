use super::{SpectralError, SpectralField};

/// Diagonal (per-mode) Fourier operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FourierMultiplier {
    /// Leray projection `I − kkᵀ/|k|²` (identity at `k = 0`).
    Leray,
    /// Laplacian `−|k|²`.
    Laplacian,
    /// Regularization `(1 − δΔ)⁻¹`, i.e. `1/(1 + δ|k|²)`.
    Regularization { delta: f64 },
}

impl FourierMultiplier {
    /// The 2×2 block acting on mode `k` of a velocity field.
    pub fn matrix(&self, k1: i64, k2: i64) -> [[f64; 2]; 2] {
        match *self {
            FourierMultiplier::Leray => {
                if k1 == 0 && k2 == 0 {
                    return [[1.0, 0.0], [0.0, 1.0]];
                }
                let (a, b) = (k1 as f64, k2 as f64);
                let kk = a * a + b * b;
                [[1.0 - a * a / kk, -a * b / kk], [-a * b / kk, 1.0 - b * b / kk]]
            }
            _ => {
                let m = self.scalar(k1, k2);
                [[m, 0.0], [0.0, m]]
            }
        }
    }

    /// The scalar symbol; Leray has no scalar symbol and returns 1 only at `k = 0`.
    pub fn scalar(&self, k1: i64, k2: i64) -> f64 {
        let kk = (k1 * k1 + k2 * k2) as f64;
        match *self {
            FourierMultiplier::Laplacian => -kk,
            FourierMultiplier::Regularization { delta } => 1.0 / (1.0 + delta * kk),
            FourierMultiplier::Leray => {
                if kk == 0.0 {
                    1.0
                } else {
                    f64::NAN
                }
            }
        }
    }

    pub fn apply(&self, f: &SpectralField) -> Result<SpectralField, SpectralError> {
        if let FourierMultiplier::Regularization { delta } = *self {
            if !(delta > 0.0) {
                return Err(SpectralError::InvalidDelta(delta));
            }
        }
        let mut out = f.clone();
        match self {
            FourierMultiplier::Leray => {
                if f.components() != 2 {
                    return Err(SpectralError::ComponentMismatch { expected: 2, got: f.components() });
                }
                let side_sq = f.side() * f.side();
                let modes: Vec<_> = f.modes().collect();
                let coeffs = out.coeffs_mut();
                for (k1, k2) in modes {
                    let idx = f.index(k1, k2);
                    let m = self.matrix(k1, k2);
                    let (a, b) = (f.get(0, k1, k2), f.get(1, k1, k2));
                    coeffs[idx] = a * m[0][0] + b * m[0][1];
                    coeffs[side_sq + idx] = a * m[1][0] + b * m[1][1];
                }
                out.set_divergence_free(true);
            }
            _ => {
                let side_sq = f.side() * f.side();
                let modes: Vec<_> = f.modes().collect();
                let coeffs = out.coeffs_mut();
                for c in 0..f.components() {
                    for &(k1, k2) in &modes {
                        let idx = c * side_sq + f.index(k1, k2);
                        coeffs[idx] *= self.scalar(k1, k2);
                    }
                }
                // Scalar multipliers preserve divergence-freeness.
                out.set_divergence_free(f.is_divergence_free());
            }
        }
        Ok(out)
    }
}
