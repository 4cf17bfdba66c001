use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2};
use num_complex::Complex64;

use super::SpectralField;

const CHUNK: usize = 256;

/// Batched exact evaluation of a real field at off-grid points.
///
/// Uses the Hermitian half plane `k₁ ≥ 0` and reduces the inner `k₂` sums to a
/// real matrix product, so the result is the truncated trigonometric sum
/// `Σ_k û_k e^{ik·x}` up to rounding.
#[derive(Debug, Clone)]
pub struct FieldEvaluator {
    n: usize,
    components: usize,
    // (2N+1) × (components·(N+1)), columns grouped by component.
    coeff_re: Array2<f64>,
    coeff_im: Array2<f64>,
}

impl FieldEvaluator {
    pub fn new(f: &SpectralField) -> Self {
        let n = f.resolution();
        let ni = n as i64;
        let side = 2 * n + 1;
        let cols = f.components() * (n + 1);
        let mut coeff_re = Array2::zeros((side, cols));
        let mut coeff_im = Array2::zeros((side, cols));
        for c in 0..f.components() {
            for k1 in 0..=ni {
                let w = if k1 == 0 { 1.0 } else { 2.0 };
                for k2 in -ni..=ni {
                    let z = f.get(c, k1, k2) * w;
                    let (r, col) = ((k2 + ni) as usize, c * (n + 1) + k1 as usize);
                    coeff_re[[r, col]] = z.re;
                    coeff_im[[r, col]] = z.im;
                }
            }
        }
        Self { n, components: f.components(), coeff_re, coeff_im }
    }

    pub fn evaluate(&self, points: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(points.len());
        for chunk in points.chunks(CHUNK) {
            self.evaluate_chunk(chunk, &mut out);
        }
        out
    }

    fn evaluate_chunk(&self, points: &[[f64; 2]], out: &mut Vec<[f64; 2]>) {
        let n = self.n;
        let side = 2 * n + 1;
        let p = points.len();
        let mut ey_re = Array2::zeros((p, side));
        let mut ey_im = Array2::zeros((p, side));
        let mut ex = vec![Complex64::new(0.0, 0.0); p * (n + 1)];
        for (i, &[x, y]) in points.iter().enumerate() {
            let (wy, wx) = (Complex64::from_polar(1.0, y), Complex64::from_polar(1.0, x));
            let mut zy = Complex64::new(1.0, 0.0);
            let mut zx = Complex64::new(1.0, 0.0);
            for k in 0..=n {
                ey_re[[i, n + k]] = zy.re;
                ey_im[[i, n + k]] = zy.im;
                ey_re[[i, n - k]] = zy.re;
                ey_im[[i, n - k]] = -zy.im;
                ex[i * (n + 1) + k] = zx;
                zy *= wy;
                zx *= wx;
            }
        }
        let cols = self.coeff_re.ncols();
        let mut g_re = Array2::zeros((p, cols));
        let mut g_im = Array2::zeros((p, cols));
        general_mat_mul(1.0, &ey_re, &self.coeff_re, 0.0, &mut g_re);
        general_mat_mul(-1.0, &ey_im, &self.coeff_im, 1.0, &mut g_re);
        general_mat_mul(1.0, &ey_re, &self.coeff_im, 0.0, &mut g_im);
        general_mat_mul(1.0, &ey_im, &self.coeff_re, 1.0, &mut g_im);
        for i in 0..p {
            let mut v = [0.0; 2];
            let exs = &ex[i * (n + 1)..(i + 1) * (n + 1)];
            for (c, vc) in v.iter_mut().enumerate().take(self.components) {
                let gr = g_re.slice(s![i, c * (n + 1)..(c + 1) * (n + 1)]);
                let gi = g_im.slice(s![i, c * (n + 1)..(c + 1) * (n + 1)]);
                let mut acc = 0.0;
                for k in 0..=n {
                    acc += gr[k] * exs[k].re - gi[k] * exs[k].im;
                }
                *vc = acc;
            }
            out.push(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::evaluate_at;

    #[test]
    fn batched_matches_direct_sum() {
        let f = SpectralField::from_fn(9, 2, |x, y| {
            [
                (3.0 * x - y).sin() + 0.2 * (x + 5.0 * y).cos() + 0.1,
                (x * 2.0).cos() * (y * 9.0).sin() - 0.3,
            ]
        });
        let pts: Vec<[f64; 2]> = (0..700)
            .map(|i| {
                let t = i as f64;
                [(t * 0.731).rem_euclid(7.0) - 0.5, (t * 1.377).rem_euclid(6.5)]
            })
            .collect();
        let fast = FieldEvaluator::new(&f).evaluate(&pts);
        let slow = evaluate_at(&f, &pts);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a[0] - b[0]).abs() < 1e-12, "{a:?} {b:?}");
            assert!((a[1] - b[1]).abs() < 1e-12);
        }
    }
}
