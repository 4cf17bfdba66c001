//! Concrete test problems.

use nalgebra::{DMatrix, DVector, Vector3};

use super::{Constraint, SdeProblem};

/// `dX = JX ∘ dB` on the unit circle, `J` the rotation by π/2.
#[derive(Debug, Clone, Copy, Default)]
pub struct CircleBrownian;

fn rot(x: &DVector<f64>) -> DVector<f64> {
    DVector::from_column_slice(&[-x[1], x[0]])
}

impl SdeProblem for CircleBrownian {
    fn state_dim(&self) -> usize {
        2
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn drift(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(2)
    }

    fn diffusion(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_column_slice(2, 1, rot(x).as_slice())
    }

    fn drift_derivative(&self, _x: &DVector<f64>, _h: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(2)
    }

    fn diffusion_derivative(&self, _x: &DVector<f64>, h: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_column_slice(2, 1, rot(h).as_slice())
    }

    fn constraint(&self) -> Option<Constraint> {
        Some(Constraint::UnitSphere)
    }
}

/// Brownian motion on S² with a rigid rotation drift:
/// `dX = ω × X dt + s P(X) ∘ dB`, `P(x) = I − xxᵀ/|x|²`, three noise channels.
#[derive(Debug, Clone, Copy)]
pub struct SphereBrownian {
    pub rotation: [f64; 3],
    pub noise: f64,
}

impl SphereBrownian {
    pub fn new(rotation: [f64; 3], noise: f64) -> Self {
        Self { rotation, noise }
    }

    fn omega(&self) -> Vector3<f64> {
        Vector3::from(self.rotation)
    }
}

fn v3(x: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(x[0], x[1], x[2])
}

impl SdeProblem for SphereBrownian {
    fn state_dim(&self) -> usize {
        3
    }

    fn noise_dim(&self) -> usize {
        3
    }

    fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_column_slice(self.omega().cross(&v3(x)).as_slice())
    }

    fn diffusion(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let r2 = x.norm_squared();
        (DMatrix::identity(3, 3) - x * x.transpose() / r2) * self.noise
    }

    fn drift_derivative(&self, _x: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
        DVector::from_column_slice(self.omega().cross(&v3(h)).as_slice())
    }

    fn diffusion_derivative(&self, x: &DVector<f64>, h: &DVector<f64>) -> DMatrix<f64> {
        let r2 = x.norm_squared();
        let sym = h * x.transpose() + x * h.transpose();
        (x * x.transpose() * (2.0 * x.dot(h) / (r2 * r2)) - sym / r2) * self.noise
    }

    fn constraint(&self) -> Option<Constraint> {
        Some(Constraint::UnitSphere)
    }
}

/// `dX = MX dt + Σ_j (C_j X + c_j) ∘ dB_j`.
#[derive(Debug, Clone)]
pub struct LinearSde {
    pub m: DMatrix<f64>,
    /// One `n × n` matrix per noise channel.
    pub linear: Vec<DMatrix<f64>>,
    /// `n × m`, column `j` is `c_j`.
    pub constant: DMatrix<f64>,
}

impl LinearSde {
    pub fn new(m: DMatrix<f64>, linear: Vec<DMatrix<f64>>, constant: DMatrix<f64>) -> Self {
        assert_eq!(linear.len(), constant.ncols());
        Self { m, linear, constant }
    }

    /// Constant diffusion.
    pub fn additive(m: DMatrix<f64>, constant: DMatrix<f64>) -> Self {
        let n = m.nrows();
        let linear = vec![DMatrix::zeros(n, n); constant.ncols()];
        Self { m, linear, constant }
    }

    /// Deterministic `ẋ = Mx` with one inert noise channel.
    pub fn deterministic(m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        Self::additive(m, DMatrix::zeros(n, 1))
    }
}

impl SdeProblem for LinearSde {
    fn state_dim(&self) -> usize {
        self.m.nrows()
    }

    fn noise_dim(&self) -> usize {
        self.constant.ncols()
    }

    fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.m * x
    }

    fn diffusion(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut s = self.constant.clone();
        for (j, c) in self.linear.iter().enumerate() {
            let col = c * x;
            let mut dst = s.column_mut(j);
            dst += &col;
        }
        s
    }

    fn drift_derivative(&self, _x: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
        &self.m * h
    }

    fn diffusion_derivative(&self, _x: &DVector<f64>, h: &DVector<f64>) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.state_dim(), self.noise_dim());
        for (j, c) in self.linear.iter().enumerate() {
            s.set_column(j, &(c * h));
        }
        s
    }
}

/// Scalar `dX = μ dt + s dB` on the interval `(lower, upper)`.
#[derive(Debug, Clone, Copy)]
pub struct IntervalDiffusion {
    pub drift: f64,
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
}

impl IntervalDiffusion {
    pub fn new(drift: f64, sigma: f64, lower: f64, upper: f64) -> Self {
        assert!(lower < upper);
        Self { drift, sigma, lower, upper }
    }
}

impl SdeProblem for IntervalDiffusion {
    fn state_dim(&self) -> usize {
        1
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn drift(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, self.drift)
    }

    fn diffusion(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, self.sigma)
    }

    fn drift_derivative(&self, _x: &DVector<f64>, _h: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(1)
    }

    fn diffusion_derivative(&self, _x: &DVector<f64>, _h: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(1, 1)
    }

    fn domain_distance(&self, x: &DVector<f64>) -> f64 {
        (x[0] - self.lower).min(self.upper - x[0])
    }

    fn distance_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let g = if x[0] - self.lower < self.upper - x[0] { 1.0 } else { -1.0 };
        DVector::from_element(1, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::diffusion_derivative_defect;

    #[test]
    fn analytic_derivatives_are_consistent() {
        let probes: Vec<_> = [[0.3, -0.5, 0.8], [1.0, 0.2, 0.1], [-0.4, 0.4, -0.7]]
            .iter()
            .map(|x| (DVector::from_column_slice(x), DVector::from_column_slice(&[0.1, -0.3, 0.5])))
            .collect();
        let s = SphereBrownian::new([0.1, 0.2, 0.3], 0.7);
        let lin = LinearSde::new(
            DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -0.5]),
            vec![DMatrix::from_row_slice(3, 3, &[0.1, 0.0, 0.2, 0.0, -0.3, 0.0, 0.0, 0.1, 0.0])],
            DMatrix::from_row_slice(3, 1, &[0.5, 0.0, 1.0]),
        );
        for (e, bound) in [(1e-3, 1e-2), (1e-5, 1e-4)] {
            assert!(diffusion_derivative_defect(&s, &probes, e) < bound);
            assert!(diffusion_derivative_defect(&lin, &probes, e) < 1e-10);
        }
    }

    #[test]
    fn sphere_fields_are_tangent() {
        let s = SphereBrownian::new([0.1, 0.2, 0.3], 1.0);
        let x = DVector::from_column_slice(&[0.6, 0.0, 0.8]);
        assert!(s.drift(&x).dot(&x).abs() < 1e-15);
        assert!((x.transpose() * s.diffusion(&x)).norm() < 1e-15);
    }

    #[test]
    fn interval_distance() {
        let p = IntervalDiffusion::new(1.0, 0.0, -1.0, 1.0);
        let x = DVector::from_element(1, 0.25);
        assert_eq!(p.domain_distance(&x), 0.75);
        assert_eq!(p.distance_gradient(&x)[0], -1.0);
    }
}
