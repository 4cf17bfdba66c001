//! Derivative of the solution with respect to the initial condition:
//! `dA = Db(X) A dt + Dσ(X)[A] ∘ dB`, `A_0 = h`, driven by the noise of `X`.
//!
//! The pair `(X, A)` is advanced by the same Heun step (and projection) as `X`
//! alone, so `A` is the exact derivative of the discrete solution map.

use nalgebra::DVector;
use serde::Serialize;

use super::{check_dim, increment, SdeError, SdeProblem};
use crate::rng::BrownianDriver;

/// `|A|` above which the derivative is flagged as blown up.
pub const BLOWUP_BOUND: f64 = 1e12;

#[derive(Debug, Clone, Serialize)]
pub struct VariationalState {
    pub direction: Vec<f64>,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub base: Vec<DVector<f64>>,
    #[serde(skip)]
    pub derivative: Vec<DVector<f64>>,
    /// Time at which `|A|` left `[0, BLOWUP_BOUND]`, if it did.
    pub blown_up: Option<f64>,
}

pub fn variational_derivative<P: SdeProblem + ?Sized>(
    p: &P,
    x0: &DVector<f64>,
    h: &DVector<f64>,
    driver: &BrownianDriver,
    t_end: f64,
    project: bool,
) -> Result<VariationalState, SdeError> {
    check_dim(x0, p.state_dim())?;
    check_dim(h, p.state_dim())?;
    let dt = driver.dt();
    let steps = (t_end / dt).round() as u64;
    let constraint = if project { p.constraint() } else { None };
    let mut out = VariationalState {
        direction: h.iter().copied().collect(),
        times: vec![0.0],
        base: vec![x0.clone()],
        derivative: vec![h.clone()],
        blown_up: None,
    };
    let (mut x, mut a) = (x0.clone(), h.clone());
    for k in 0..steps {
        let db = increment(driver, k, p.noise_dim());
        let (b0, s0) = (p.drift(&x), p.diffusion(&x));
        let (db0, ds0) = (p.drift_derivative(&x, &a), p.diffusion_derivative(&x, &a) * &db);
        let xp = &x + &b0 * dt + &s0 * &db;
        let ap = &a + &db0 * dt + &ds0;
        let (b1, s1) = (p.drift(&xp), p.diffusion(&xp));
        let (db1, ds1) = (p.drift_derivative(&xp, &ap), p.diffusion_derivative(&xp, &ap) * &db);
        let mut xn = &x + (b0 + b1) * (0.5 * dt) + (s0 + s1) * &db * 0.5;
        let mut an = &a + (db0 + db1) * (0.5 * dt) + (ds0 + ds1) * 0.5;
        if let Some(c) = constraint {
            an = c.project_derivative(&xn, &an);
            xn = c.project(&xn);
        }
        if !xn.iter().all(|v| v.is_finite()) {
            return Err(SdeError::NonFinite { step: k + 1 });
        }
        x = xn;
        a = an;
        let t = (k + 1) as f64 * dt;
        out.times.push(t);
        out.base.push(x.clone());
        out.derivative.push(a.clone());
        let size = a.norm();
        if !(size <= BLOWUP_BOUND) {
            out.blown_up = Some(t);
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{simulate, Integrator, LinearSde, SphereBrownian};
    use nalgebra::DMatrix;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn zero_direction_stays_zero() {
        let p = SphereBrownian::new([0.0, 1.0, 0.0], 0.5);
        let st = variational_derivative(&p, &v(&[1.0, 0.0, 0.0]), &DVector::zeros(3), &BrownianDriver::new(1, 1e-2), 1.0, true).unwrap();
        assert!(st.derivative.iter().all(|a| a.norm() == 0.0));
        assert_eq!(st.derivative[0], DVector::zeros(3));
    }

    #[test]
    fn linear_in_direction() {
        let p = SphereBrownian::new([0.0, 1.0, 0.0], 0.5);
        let x0 = v(&[0.6, 0.0, 0.8]);
        let h = v(&[0.8, 0.0, -0.6]);
        let d = BrownianDriver::new(1, 1e-2);
        let a = variational_derivative(&p, &x0, &h, &d, 1.0, true).unwrap();
        let b = variational_derivative(&p, &x0, &(&h * 2.5), &d, 1.0, true).unwrap();
        for (u, w) in a.derivative.iter().zip(&b.derivative) {
            assert!((u * 2.5 - w).norm() <= 1e-13 * (1.0 + w.norm()));
        }
    }

    #[test]
    fn rotation_generator_matches_exponential() {
        // ẋ = Mx with M the rotation generator: e^{Mt} is a rotation by t.
        let p = LinearSde::deterministic(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let st = variational_derivative(&p, &v(&[1.0, 0.0]), &v(&[1.0, 0.0]), &BrownianDriver::new(0, 1e-3), 1.0, false).unwrap();
        let a = st.derivative.last().unwrap();
        assert!((a - v(&[1f64.cos(), 1f64.sin()])).norm() < 1e-6);
    }

    #[test]
    fn matches_discrete_difference_quotient() {
        let p = SphereBrownian::new([0.2, 1.0, 0.0], 0.7);
        let x0 = v(&[0.6, 0.0, 0.8]);
        let h = v(&[0.8, 0.0, -0.6]);
        let d = BrownianDriver::new(4, 1e-2);
        let a = variational_derivative(&p, &x0, &h, &d, 1.0, true).unwrap();
        let res = |eps: f64| {
            let xp = simulate(&p, &(&x0 + &h * eps), &d, 1.0, Integrator::HEUN_PROJECTED).unwrap();
            let xb = simulate(&p, &x0, &d, 1.0, Integrator::HEUN_PROJECTED).unwrap();
            ((xp.last() - xb.last()) / eps - a.derivative.last().unwrap()).norm()
        };
        let (r2, r3) = (res(1e-2), res(1e-3));
        let slope = (r2 / r3).log10();
        assert!((0.8..=1.2).contains(&slope), "{r2} {r3}");
    }
}
