use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{plan, SpectralError, DIVERGENCE_TOL};

/// Sobolev regularity exponent `s ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self, SpectralError> {
        if s.is_finite() && s >= 0.0 {
            Ok(Self(s))
        } else {
            Err(SpectralError::InvalidSobolevIndex(s))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Weight `(1 + |k|²)^s` of mode `k` in the squared norm.
    pub fn weight(self, k1: i64, k2: i64) -> f64 {
        let k2sum = (k1 * k1 + k2 * k2) as f64;
        if self.0 == 0.0 {
            1.0
        } else {
            (1.0 + k2sum).powf(self.0)
        }
    }
}

/// Truncated Fourier coefficients of a real scalar (1 component) or
/// velocity (2 components) field on the 2-torus.
///
/// Coefficients are stored component-major, and within a component in
/// row-major order `k₁ = −N..=N` (outer), `k₂ = −N..=N` (inner).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    n: usize,
    components: usize,
    coeffs: Vec<Complex64>,
    divergence_free: bool,
}

impl SpectralField {
    pub fn zeros(n: usize, components: usize) -> Self {
        assert!(components == 1 || components == 2, "fields have 1 or 2 components");
        let side = 2 * n + 1;
        Self {
            n,
            components,
            coeffs: vec![Complex64::new(0.0, 0.0); components * side * side],
            divergence_free: components == 2,
        }
    }

    /// Builds a field from raw coefficients, enforcing Hermitian symmetry.
    pub fn from_coeffs(
        n: usize,
        components: usize,
        coeffs: Vec<Complex64>,
    ) -> Result<Self, SpectralError> {
        let side = 2 * n + 1;
        if coeffs.len() != components * side * side {
            return Err(SpectralError::Snapshot(format!(
                "expected {} coefficients, got {}",
                components * side * side,
                coeffs.len()
            )));
        }
        let mut f = Self { n, components, coeffs, divergence_free: false };
        f.symmetrize();
        f.divergence_free = f.components == 2 && f.divergence_defect() <= DIVERGENCE_TOL;
        Ok(f)
    }

    /// Samples `f` on an `len × len` grid (`len ≥ 2N + 1`) and keeps modes `|k|∞ ≤ N`.
    pub fn from_fn<F>(n: usize, components: usize, f: F) -> Self
    where
        F: Fn(f64, f64) -> [f64; 2],
    {
        let len = super::smooth_size(2 * n + 2);
        let h = std::f64::consts::TAU / len as f64;
        let mut grids = vec![vec![0.0; len * len]; components];
        for i in 0..len {
            for j in 0..len {
                let v = f(i as f64 * h, j as f64 * h);
                for (c, g) in grids.iter_mut().enumerate() {
                    g[i * len + j] = v[c];
                }
            }
        }
        Self::from_grid(n, len, &grids)
    }

    /// Forward transform of grid samples `grid[c][i·len + j] = f_c(2πi/len, 2πj/len)`.
    pub fn from_grid(n: usize, len: usize, grids: &[Vec<f64>]) -> Self {
        assert!(len > 2 * n, "grid of {len} points cannot resolve N = {n}");
        let components = grids.len();
        let mut field = Self::zeros(n, components);
        let p = plan(len);
        let scale = 1.0 / (len * len) as f64;
        let ni = n as i64;
        let side_sq = field.side_sq();
        let mut buf = vec![Complex64::new(0.0, 0.0); len * len];
        for (c, g) in grids.iter().enumerate() {
            for (b, &v) in buf.iter_mut().zip(g) {
                *b = Complex64::new(v, 0.0);
            }
            p.process(&mut buf, false);
            for k1 in -ni..=ni {
                for k2 in -ni..=ni {
                    let gi = wrap(k1, len) * len + wrap(k2, len);
                    let idx = field.index(k1, k2);
                    field.coeffs[c * side_sq + idx] = buf[gi] * scale;
                }
            }
        }
        field.symmetrize();
        field.divergence_free = components == 2 && field.divergence_defect() <= DIVERGENCE_TOL;
        field
    }

    /// Point values on a uniform `len × len` grid; any `len ≥ 1` is exact
    /// (modes are folded modulo `len`).
    pub fn to_grid(&self, len: usize) -> Vec<Vec<f64>> {
        let p = plan(len);
        let ni = self.n as i64;
        let mut out = Vec::with_capacity(self.components);
        let mut buf = vec![Complex64::new(0.0, 0.0); len * len];
        for c in 0..self.components {
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for k1 in -ni..=ni {
                for k2 in -ni..=ni {
                    buf[wrap(k1, len) * len + wrap(k2, len)] += self.get(c, k1, k2);
                }
            }
            p.process(&mut buf, true);
            out.push(buf.iter().map(|z| z.re).collect());
        }
        out
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub(crate) fn set_divergence_free(&mut self, flag: bool) {
        self.divergence_free = flag;
    }

    pub fn side(&self) -> usize {
        2 * self.n + 1
    }

    fn side_sq(&self) -> usize {
        self.side() * self.side()
    }

    /// Flat index of mode `k` within one component block.
    pub fn index(&self, k1: i64, k2: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(k1.abs() <= n && k2.abs() <= n);
        ((k1 + n) as usize) * self.side() + (k2 + n) as usize
    }

    /// All coefficients, component-major.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let s = self.side_sq();
        &self.coeffs[c * s..(c + 1) * s]
    }

    pub fn get(&self, c: usize, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[c * self.side_sq() + self.index(k1, k2)]
    }

    /// Sets `û_k` and its conjugate partner `û_{-k}`.
    pub fn set_mode(&mut self, c: usize, k1: i64, k2: i64, value: Complex64) {
        let s = self.side_sq();
        let (i, j) = (self.index(k1, k2), self.index(-k1, -k2));
        if i == j {
            self.coeffs[c * s + i] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[c * s + i] = value;
            self.coeffs[c * s + j] = value.conj();
        }
    }

    /// Iterates `(k1, k2)` over the full mode square.
    pub fn modes(&self) -> impl Iterator<Item = (i64, i64)> {
        let n = self.n as i64;
        (-n..=n).flat_map(move |k1| (-n..=n).map(move |k2| (k1, k2)))
    }

    /// Replaces each conjugate pair by its Hermitian average.
    pub(crate) fn symmetrize(&mut self) {
        let s = self.side_sq();
        let n = self.n as i64;
        for c in 0..self.components {
            for k1 in 0..=n {
                for k2 in -n..=n {
                    if k1 == 0 && k2 < 0 {
                        continue;
                    }
                    let i = c * s + self.index(k1, k2);
                    let j = c * s + self.index(-k1, -k2);
                    if i == j {
                        self.coeffs[i].im = 0.0;
                    } else {
                        let avg = (self.coeffs[i] + self.coeffs[j].conj()) * 0.5;
                        self.coeffs[i] = avg;
                        self.coeffs[j] = avg.conj();
                    }
                }
            }
        }
    }

    /// Largest `|û_{-k} − conj(û_k)|` over all modes and components.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.components {
            for (k1, k2) in self.modes() {
                let d = (self.get(c, -k1, -k2) - self.get(c, k1, k2).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest relative divergence `|k·û_k| / (|k||û_k|)` over nonzero modes.
    pub fn divergence_defect(&self) -> f64 {
        if self.components != 2 {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for (k1, k2) in self.modes() {
            let (a, b) = (self.get(0, k1, k2), self.get(1, k1, k2));
            let amp = (a.norm_sqr() + b.norm_sqr()).sqrt();
            if amp == 0.0 || (k1 == 0 && k2 == 0) {
                continue;
            }
            let kk = ((k1 * k1 + k2 * k2) as f64).sqrt();
            let div = (a * k1 as f64 + b * k2 as f64).norm();
            worst = worst.max(div / (kk * amp));
        }
        worst
    }

    /// The `k = 0` coefficient of each component.
    pub fn mean(&self) -> Vec<Complex64> {
        (0..self.components).map(|c| self.get(c, 0, 0)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// L² pairing `⟨f, g⟩ = Σ_k Σ_c Re(f̂_k conj(ĝ_k))` (the spatial mean of `f·g`).
    pub fn inner_l2(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.n, other.n);
        assert_eq!(self.components, other.components);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// Squared L² norm `Σ_k |û_k|²`, reported as the energy of a velocity field.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Truncates or zero-pads to resolution `n`.
    pub fn resample(&self, n: usize) -> SpectralField {
        let mut out = SpectralField::zeros(n, self.components);
        let m = self.n.min(n) as i64;
        let s = out.side_sq();
        for c in 0..self.components {
            for k1 in -m..=m {
                for k2 in -m..=m {
                    let idx = out.index(k1, k2);
                    out.coeffs[c * s + idx] = self.get(c, k1, k2);
                }
            }
        }
        out.divergence_free = self.divergence_free;
        out
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &SpectralField) {
        assert_eq!(self.n, other.n);
        assert_eq!(self.components, other.components);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * alpha;
        }
        self.divergence_free &= other.divergence_free;
    }

    pub fn scaled(&self, alpha: f64) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|z| *z *= alpha);
        out
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Largest coefficient difference against a field of equal shape.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Add<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl AddAssign for SpectralField {
    fn add_assign(&mut self, rhs: SpectralField) {
        self.axpy(1.0, &rhs);
    }
}

impl Sub<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

pub(crate) fn wrap(k: i64, len: usize) -> usize {
    k.rem_euclid(len as i64) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_has_half_amplitude_modes() {
        let f = SpectralField::from_fn(4, 1, |x, _| [x.cos(), 0.0]);
        assert!((f.get(0, 1, 0).re - 0.5).abs() < 1e-15);
        assert!((f.get(0, -1, 0).re - 0.5).abs() < 1e-15);
        assert!(f.get(0, 0, 0).norm() < 1e-15);
        assert!((f.energy() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_round_trip() {
        let f = SpectralField::from_fn(5, 2, |x, y| {
            [(2.0 * x).sin() * y.cos() + 0.3, (x - 3.0 * y).cos()]
        });
        let g = f.to_grid(13);
        let back = SpectralField::from_grid(5, 13, &g);
        assert!(back.max_abs_diff(&f) < 1e-14);
    }

    #[test]
    fn set_mode_keeps_hermitian_symmetry() {
        let mut f = SpectralField::zeros(3, 2);
        f.set_mode(0, 2, -1, Complex64::new(0.3, -0.7));
        f.set_mode(1, 0, 0, Complex64::new(1.0, 5.0));
        assert_eq!(f.hermitian_defect(), 0.0);
        assert_eq!(f.get(1, 0, 0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn resample_truncates_and_pads() {
        let f = SpectralField::from_fn(6, 1, |x, y| [(5.0 * x).cos() + y.sin(), 0.0]);
        let coarse = f.resample(3);
        assert!((coarse.energy() - 0.5).abs() < 1e-14);
        let padded = coarse.resample(8);
        assert_eq!(padded.resolution(), 8);
        assert!((padded.energy() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sobolev_index_rejects_negative() {
        assert!(SobolevIndex::new(-0.5).is_err());
        assert!(SobolevIndex::new(f64::NAN).is_err());
        assert!(SobolevIndex::new(0.0).is_ok());
    }
}
