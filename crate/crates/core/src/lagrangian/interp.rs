//! Periodic interpolation of gridded data over the label torus.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Tensor-product linear, second order.
    Bilinear,
    /// Tensor-product four-point Lagrange, fourth order.
    Cubic,
}

fn weights(kind: Interpolation, t: f64) -> ([f64; 4], i64) {
    match kind {
        Interpolation::Bilinear => ([0.0, 1.0 - t, t, 0.0], -1),
        Interpolation::Cubic => (
            [
                -t * (t - 1.0) * (t - 2.0) / 6.0,
                (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0,
                (t + 1.0) * t * (t - 1.0) / 6.0,
            ],
            -1,
        ),
    }
}

/// Interpolates `values[i·m + j]` (samples at `(2πi/m, 2πj/m)`) at an arbitrary point.
pub fn interpolate(kind: Interpolation, m: usize, values: &[[f64; 2]], point: [f64; 2]) -> [f64; 2] {
    let h = std::f64::consts::TAU / m as f64;
    let (sx, sy) = (point[0] / h, point[1] / h);
    let (fx, fy) = (sx.floor(), sy.floor());
    let (wx, ox) = weights(kind, sx - fx);
    let (wy, oy) = weights(kind, sy - fy);
    let (ix, iy) = (fx as i64, fy as i64);
    let mi = m as i64;
    let mut out = [0.0; 2];
    for (a, &wa) in wx.iter().enumerate() {
        if wa == 0.0 {
            continue;
        }
        let i = (ix + ox + a as i64).rem_euclid(mi) as usize;
        for (b, &wb) in wy.iter().enumerate() {
            if wb == 0.0 {
                continue;
            }
            let j = (iy + oy + b as i64).rem_euclid(mi) as usize;
            let v = values[i * m + j];
            out[0] += wa * wb * v[0];
            out[1] += wa * wb * v[1];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(m: usize, f: impl Fn(f64, f64) -> f64) -> Vec<[f64; 2]> {
        let h = std::f64::consts::TAU / m as f64;
        (0..m * m).map(|k| {
            let v = f((k / m) as f64 * h, (k % m) as f64 * h);
            [v, -v]
        }).collect()
    }

    #[test]
    fn exact_at_nodes_and_for_low_degree() {
        let m = 16;
        let f = |x: f64, y: f64| (x).sin() + (2.0 * y).cos();
        let vals = sample(m, f);
        let h = std::f64::consts::TAU / m as f64;
        for kind in [Interpolation::Bilinear, Interpolation::Cubic] {
            let v = interpolate(kind, m, &vals, [3.0 * h, 5.0 * h]);
            assert!((v[0] - f(3.0 * h, 5.0 * h)).abs() < 1e-14);
            // periodic wrap
            let w = interpolate(kind, m, &vals, [3.0 * h - std::f64::consts::TAU, 5.0 * h + 2.0 * std::f64::consts::TAU]);
            assert!((w[0] - v[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn convergence_orders() {
        let f = |x: f64, y: f64| (x + 0.3).sin() * (2.0 * y).cos();
        let pts: Vec<[f64; 2]> = (0..40).map(|i| [0.37 + 0.151 * i as f64, 4.321 - 0.093 * i as f64]).collect();
        for (kind, order) in [(Interpolation::Bilinear, 2.0), (Interpolation::Cubic, 4.0)] {
            let err = |m: usize| {
                let vals = sample(m, f);
                pts.iter().map(|&p| (interpolate(kind, m, &vals, p)[0] - f(p[0], p[1])).abs()).fold(0.0, f64::max)
            };
            let (e1, e2) = (err(32), err(64));
            let measured = (e1 / e2).log2();
            assert!(measured > order - 0.6, "{kind:?}: {measured}");
        }
    }
}
