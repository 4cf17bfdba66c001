//! Relabeling maps `φ: T² → T²` for the right-invariance check.

use serde::{Deserialize, Serialize};

/// Tolerance on `|det Dφ − 1|` for a map to count as volume preserving.
pub const VOLUME_TOL: f64 = 1e-12;

pub trait LabelMap: Sync {
    /// `φ(x)` as a lift to ℝ².
    fn apply(&self, x: [f64; 2]) -> [f64; 2];

    /// `Dφ(x)` row-major. Defaults to 8th-order centered differences.
    fn jacobian(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        const H: f64 = 1e-2;
        const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
        let mut j = [[0.0; 2]; 2];
        for col in 0..2 {
            for (s, c) in C.iter().enumerate() {
                let o = (s + 1) as f64 * H;
                let (mut p, mut q) = (x, x);
                p[col] += o;
                q[col] -= o;
                let (fp, fq) = (self.apply(p), self.apply(q));
                for row in 0..2 {
                    j[row][col] += c * (fp[row] - fq[row]) / H;
                }
            }
        }
        j
    }
}

/// `max |det Dφ − 1|` over the `m × m` grid.
pub fn volume_defect(phi: &dyn LabelMap, m: usize) -> f64 {
    super::grid_points(m)
        .into_iter()
        .map(|x| {
            let j = phi.jacobian(x);
            (j[0][0] * j[1][1] - j[0][1] * j[1][0] - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapPreset {
    Identity,
    /// `x ↦ x + (a, b)`.
    Translation { shift: [f64; 2] },
    /// `x ↦ (x + a sin y, y)`.
    Shear { amplitude: f64 },
}

impl LabelMap for MapPreset {
    fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        match *self {
            MapPreset::Identity => x,
            MapPreset::Translation { shift } => [x[0] + shift[0], x[1] + shift[1]],
            MapPreset::Shear { amplitude } => [x[0] + amplitude * x[1].sin(), x[1]],
        }
    }

    fn jacobian(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        match *self {
            MapPreset::Identity | MapPreset::Translation { .. } => [[1.0, 0.0], [0.0, 1.0]],
            MapPreset::Shear { amplitude } => [[1.0, amplitude * x[1].cos()], [0.0, 1.0]],
        }
    }
}

/// A map given by a plain function, with a difference-quotient Jacobian.
#[derive(Clone, Copy)]
pub struct FnMap(pub fn([f64; 2]) -> [f64; 2]);

impl LabelMap for FnMap {
    fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        (self.0)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_preserve_volume() {
        for p in [MapPreset::Identity, MapPreset::Translation { shift: [0.3, -1.0] }, MapPreset::Shear { amplitude: 0.4 }] {
            assert!(volume_defect(&p, 16) <= VOLUME_TOL);
        }
    }

    #[test]
    fn default_jacobian_matches_analytic() {
        let f = FnMap(|x| [x[0] + 0.4 * x[1].sin(), x[1]]);
        let s = MapPreset::Shear { amplitude: 0.4 };
        for x in [[0.1, 0.2], [3.0, 5.5], [1.0, 2.0]] {
            let (a, b) = (f.jacobian(x), s.jacobian(x));
            for r in 0..2 {
                for c in 0..2 {
                    assert!((a[r][c] - b[r][c]).abs() < 1e-12);
                }
            }
        }
        assert!(volume_defect(&f, 16) <= VOLUME_TOL);
        assert!(volume_defect(&FnMap(|x| [x[0] + 0.1 * x[0].sin(), x[1]]), 16) > 0.05);
    }

    #[test]
    fn preset_toml_forms() {
        let p: MapPreset = toml::from_str("kind = \"shear\"\namplitude = 0.25").unwrap();
        assert_eq!(p, MapPreset::Shear { amplitude: 0.25 });
        assert!(toml::from_str::<MapPreset>("kind = \"shear\"\namp = 0.25").is_err());
    }
}
