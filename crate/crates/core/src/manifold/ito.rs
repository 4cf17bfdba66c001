//! Residual of the Itô formula along a stored discrete path:
//! `h(X_t) − h(X_0) − ∫ Dh·b dt − ∫ Dh·σ dB − ½ ∫ Σ_j D(Dh·σ_j)[σ_j] dt`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{SdePath, SdeProblem};

pub trait Observable {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

/// `h(x) = a·x`.
#[derive(Debug, Clone)]
pub struct LinearObservable(pub DVector<f64>);

impl Observable for LinearObservable {
    fn value(&self, x: &DVector<f64>) -> f64 {
        self.0.dot(x)
    }

    fn gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
        self.0.clone()
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(x.len(), x.len())
    }
}

/// `h(x) = |x|²`, the constraint function of the unit sphere up to a constant.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticNorm;

impl Observable for QuadraticNorm {
    fn value(&self, x: &DVector<f64>) -> f64 {
        x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x * 2.0
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(x.len(), x.len()) * 2.0
    }
}

/// `h(x) = x₁³ − 3x₁x₂² + ½x₁²x₂ + x₂³/3` on ℝ².
#[derive(Debug, Clone, Copy)]
pub struct CubicObservable;

impl Observable for CubicObservable {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let (a, b) = (x[0], x[1]);
        a.powi(3) - 3.0 * a * b * b + 0.5 * a * a * b + b.powi(3) / 3.0
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (a, b) = (x[0], x[1]);
        DVector::from_column_slice(&[3.0 * a * a - 3.0 * b * b + a * b, -6.0 * a * b + 0.5 * a * a + b * b])
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let (a, b) = (x[0], x[1]);
        DMatrix::from_row_slice(2, 2, &[6.0 * a + b, a - 6.0 * b, a - 6.0 * b, -6.0 * a + 2.0 * b])
    }
}

/// Quadrature of the stochastic integral `∫ Dh·σ dB` over one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItoQuadrature {
    /// `f(X_k) ΔB`.
    LeftPoint,
    /// `f(X_k) ΔB + ½ Σ_{j,l} Df_j[σ_l] (ΔB_j ΔB_l − δ_{jl} Δt)`: the symmetric part of
    /// the iterated integrals, exact in law for a single channel or commuting fields.
    SecondOrder,
}

/// Cumulative residual at every time of `path`.
pub fn ito_formula_residual<P: SdeProblem + ?Sized, H: Observable + ?Sized>(
    p: &P,
    h: &H,
    path: &SdePath,
    quad: ItoQuadrature,
) -> Vec<f64> {
    let dt = path.dt;
    let m = p.noise_dim();
    let h0 = h.value(&path.states[0]);
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(path.states.len());
    out.push(0.0);
    for (k, db) in path.increments.iter().enumerate() {
        let x = &path.states[k];
        let (g, hess, s) = (h.gradient(x), h.hessian(x), p.diffusion(x));
        // d_f[l][j] = D(Dh·σ_j)[σ_l]
        let d_f: Vec<DVector<f64>> = (0..m)
            .map(|l| {
                let sl = s.column(l).into_owned();
                let dsig = p.diffusion_derivative(x, &sl);
                let mut row = DVector::zeros(m);
                for j in 0..m {
                    row[j] = (sl.transpose() * &hess * s.column(j))[0] + g.dot(&dsig.column(j));
                }
                row
            })
            .collect();
        let mut step = g.dot(&p.drift(x)) * dt + (g.transpose() * &s * db)[0];
        step += 0.5 * dt * (0..m).map(|j| d_f[j][j]).sum::<f64>();
        if quad == ItoQuadrature::SecondOrder {
            for l in 0..m {
                for j in 0..m {
                    let delta = if j == l { dt } else { 0.0 };
                    step += 0.5 * d_f[l][j] * (db[j] * db[l] - delta);
                }
            }
        }
        integral += step;
        out.push(h.value(&path.states[k + 1]) - h0 - integral);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{simulate, CircleBrownian, Integrator, LinearSde};
    use crate::rng::BrownianDriver;

    #[test]
    fn cubic_derivatives_match_differences() {
        let x = DVector::from_column_slice(&[0.7, -0.4]);
        let e = 1e-5;
        for i in 0..2 {
            let mut d = DVector::zeros(2);
            d[i] = e;
            let g = (CubicObservable.value(&(&x + &d)) - CubicObservable.value(&(&x - &d))) / (2.0 * e);
            assert!((g - CubicObservable.gradient(&x)[i]).abs() < 1e-8);
            let hcol = (CubicObservable.gradient(&(&x + &d)) - CubicObservable.gradient(&(&x - &d))) / (2.0 * e);
            assert!((hcol - CubicObservable.hessian(&x).column(i)).norm() < 1e-8);
        }
    }

    #[test]
    fn linear_observable_additive_noise_exact() {
        let p = LinearSde::additive(DMatrix::zeros(2, 2), DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.2, 0.8]));
        let path = simulate(&p, &DVector::from_column_slice(&[0.1, 0.2]), &BrownianDriver::new(2, 1e-3), 1.0, Integrator::HEUN).unwrap();
        let h = LinearObservable(DVector::from_column_slice(&[2.0, -1.0]));
        for q in [ItoQuadrature::LeftPoint, ItoQuadrature::SecondOrder] {
            assert!(ito_formula_residual(&p, &h, &path, q).iter().all(|r| r.abs() <= 1e-12));
        }
    }

    #[test]
    fn constraint_observable_on_circle() {
        let path = simulate(&CircleBrownian, &DVector::from_column_slice(&[1.0, 0.0]), &BrownianDriver::new(2, 1e-3), 1.0, Integrator::HEUN_PROJECTED).unwrap();
        let r = ito_formula_residual(&CircleBrownian, &QuadraticNorm, &path, ItoQuadrature::LeftPoint);
        assert!(r.iter().all(|r| r.abs() <= 1e-10));
    }
}
