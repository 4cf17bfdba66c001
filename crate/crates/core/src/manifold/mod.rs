//! Finite-dimensional Stratonovich SDEs `dX = b(X) dt + σ(X) ∘ dB` on open
//! sets and embedded manifolds: steppers, stopping ladders, cutoffs, charts,
//! Itô-formula residuals and the variational equation.

mod charts;
mod ito;
mod ladder;
mod problems;
mod variational;

pub use charts::{chart_consistency, glue_maximal, Chart, ChartProblem, ChartReport, GluedPath};
pub use ito::{ito_formula_residual, CubicObservable, LinearObservable, Observable, QuadraticNorm, ItoQuadrature};
pub use ladder::{
    bump, cutoff_agreement, solve_with_ladder, CutoffProblem, CutoffReport, LadderOptions, LadderRun, StoppingLadder,
    StageHit,
};
pub use problems::{CircleBrownian, IntervalDiffusion, LinearSde, SphereBrownian};
pub use variational::{variational_derivative, VariationalState};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::BrownianDriver;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdeError {
    #[error("initial state is not in the domain (distance {0})")]
    NotInDomain(f64),
    #[error("non-finite state at step {step}")]
    NonFinite { step: u64 },
    #[error("left the chart domain at t = {time}")]
    ChartExit { time: f64 },
    #[error("no chart of the cover contains the state at t = {time}")]
    CoverViolation { time: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Step used by the default finite-difference derivatives.
pub const FD_STEP: f64 = 1e-6;

/// Level set `|x| = 1` in ℝⁿ (circle for n = 2, sphere for n = 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constraint {
    UnitSphere,
}

impl Constraint {
    /// `g(x) = |x|² − 1`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        x.norm_squared() - 1.0
    }

    /// Closest point on the constraint set.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        x / x.norm()
    }

    /// Derivative of `project` at `x` in direction `a`.
    pub fn project_derivative(&self, x: &DVector<f64>, a: &DVector<f64>) -> DVector<f64> {
        let r = x.norm();
        let xh = x / r;
        (a - &xh * xh.dot(a)) / r
    }
}

pub trait SdeProblem: Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn drift(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `n × m` matrix whose columns are the noise vector fields `σ_j`.
    fn diffusion(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// `Db(x) h`.
    fn drift_derivative(&self, x: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
        (self.drift(&(x + h * FD_STEP)) - self.drift(&(x - h * FD_STEP))) / (2.0 * FD_STEP)
    }

    /// `Dσ(x) h`, an `n × m` matrix.
    fn diffusion_derivative(&self, x: &DVector<f64>, h: &DVector<f64>) -> DMatrix<f64> {
        (self.diffusion(&(x + h * FD_STEP)) - self.diffusion(&(x - h * FD_STEP))) / (2.0 * FD_STEP)
    }

    /// `dist(x, Uᶜ)`; infinite for `U = ℝⁿ`.
    fn domain_distance(&self, _x: &DVector<f64>) -> f64 {
        f64::INFINITY
    }

    fn distance_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(x.len());
        for i in 0..x.len() {
            let mut e = DVector::zeros(x.len());
            e[i] = FD_STEP;
            g[i] = (self.domain_distance(&(x + &e)) - self.domain_distance(&(x - &e))) / (2.0 * FD_STEP);
        }
        g
    }

    fn constraint(&self) -> Option<Constraint> {
        None
    }
}

/// Itô drift `b + ½ Σ_j Dσ_j[σ_j]`.
pub fn ito_drift<P: SdeProblem + ?Sized>(p: &P, x: &DVector<f64>) -> DVector<f64> {
    let s = p.diffusion(x);
    let mut out = p.drift(x);
    for j in 0..p.noise_dim() {
        let col = s.column(j).into_owned();
        out += p.diffusion_derivative(x, &col).column(j) * 0.5;
    }
    out
}

/// Largest `|σ(x + εh) − σ(x) − ε Dσ(x)h| / ε` over the probes: `O(ε)` when
/// `diffusion_derivative` is consistent with `diffusion`.
pub fn diffusion_derivative_defect<P: SdeProblem + ?Sized>(p: &P, probes: &[(DVector<f64>, DVector<f64>)], eps: f64) -> f64 {
    probes
        .iter()
        .map(|(x, h)| {
            let fd = (p.diffusion(&(x + h * eps)) - p.diffusion(x)) / eps;
            (fd - p.diffusion_derivative(x, h)).norm()
        })
        .fold(0.0, f64::max)
}

/// One Stratonovich–Heun step; returns the new state and the predictor.
pub fn heun_stages<P: SdeProblem + ?Sized>(
    p: &P,
    x: &DVector<f64>,
    db: &DVector<f64>,
    dt: f64,
) -> (DVector<f64>, DVector<f64>) {
    let (b0, s0) = (p.drift(x), p.diffusion(x));
    let pred = x + &b0 * dt + &s0 * db;
    let (b1, s1) = (p.drift(&pred), p.diffusion(&pred));
    let next = x + (b0 + b1) * (0.5 * dt) + (s0 + s1) * db * 0.5;
    (next, pred)
}

/// Stratonovich–Heun step (trapezoidal in both `b` and `σ`), without projection.
pub fn stratonovich_step<P: SdeProblem + ?Sized>(
    p: &P,
    x: &DVector<f64>,
    db: &DVector<f64>,
    dt: f64,
) -> Result<DVector<f64>, SdeError> {
    let next = heun_stages(p, x, db, dt).0;
    finite(next, 0)
}

/// Euler–Maruyama step on the Itô form with drift `b + ½ Σ_j Dσ_j[σ_j]`.
pub fn ito_corrected_step<P: SdeProblem + ?Sized>(
    p: &P,
    x: &DVector<f64>,
    db: &DVector<f64>,
    dt: f64,
) -> Result<DVector<f64>, SdeError> {
    let next = x + ito_drift(p, x) * dt + p.diffusion(x) * db;
    finite(next, 0)
}

fn finite(x: DVector<f64>, step: u64) -> Result<DVector<f64>, SdeError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(SdeError::NonFinite { step })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    StratonovichHeun,
    ItoEuler,
}

/// A scheme plus optional projection onto the problem's constraint after each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Integrator {
    pub scheme: Scheme,
    pub project: bool,
}

impl Integrator {
    pub const HEUN: Integrator = Integrator { scheme: Scheme::StratonovichHeun, project: false };
    pub const HEUN_PROJECTED: Integrator = Integrator { scheme: Scheme::StratonovichHeun, project: true };

    pub fn step<P: SdeProblem + ?Sized>(
        &self,
        p: &P,
        x: &DVector<f64>,
        db: &DVector<f64>,
        dt: f64,
        step: u64,
    ) -> Result<DVector<f64>, SdeError> {
        let next = match self.scheme {
            Scheme::StratonovichHeun => stratonovich_step(p, x, db, dt),
            Scheme::ItoEuler => ito_corrected_step(p, x, db, dt),
        }
        .map_err(|_| SdeError::NonFinite { step })?;
        match (self.project, p.constraint()) {
            (true, Some(c)) => finite(c.project(&next), step),
            _ => Ok(next),
        }
    }
}

/// A discrete path with the increments that drove it (`increments[k]` takes `states[k]` to `states[k + 1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SdePath {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub increments: Vec<DVector<f64>>,
}

impl SdePath {
    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("path has the initial state")
    }
}

pub(crate) fn increment(driver: &BrownianDriver, step: u64, m: usize) -> DVector<f64> {
    DVector::from_vec(driver.increments(step, m))
}

pub(crate) fn check_dim(x: &DVector<f64>, n: usize) -> Result<(), SdeError> {
    if x.len() != n {
        return Err(SdeError::DimensionMismatch { expected: n, got: x.len() });
    }
    Ok(())
}

/// Integrates over `round(t_end / dt)` steps of the driver.
pub fn simulate<P: SdeProblem + ?Sized>(
    p: &P,
    x0: &DVector<f64>,
    driver: &BrownianDriver,
    t_end: f64,
    integrator: Integrator,
) -> Result<SdePath, SdeError> {
    check_dim(x0, p.state_dim())?;
    let dt = driver.dt();
    let steps = (t_end / dt).round() as u64;
    let mut path = SdePath {
        dt,
        times: vec![0.0],
        states: vec![x0.clone()],
        increments: Vec::with_capacity(steps as usize),
    };
    let mut x = x0.clone();
    for k in 0..steps {
        let db = increment(driver, k, p.noise_dim());
        x = integrator.step(p, &x, &db, dt, k + 1)?;
        path.times.push((k + 1) as f64 * dt);
        path.states.push(x.clone());
        path.increments.push(db);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn circle_correction_is_minus_half_x() {
        let p = CircleBrownian;
        let x = v(&[0.6, 0.8]);
        let d = ito_drift(&p, &x);
        assert!((d - &x * -0.5).norm() < 1e-15);
    }

    #[test]
    fn constant_diffusion_has_no_correction() {
        let p = LinearSde::additive(DMatrix::zeros(2, 2), DMatrix::from_row_slice(2, 1, &[1.0, 2.0]));
        let x = v(&[0.3, -0.1]);
        assert_eq!(ito_drift(&p, &x), DVector::zeros(2));
        let db = v(&[0.1]);
        let next = stratonovich_step(&p, &x, &db, 0.01).unwrap();
        assert!((next - v(&[0.4, 0.1])).norm() < 1e-15);
    }

    #[test]
    fn zero_noise_zero_drift_is_fixed() {
        let p = CircleBrownian;
        let x = v(&[1.0, 0.0]);
        assert_eq!(stratonovich_step(&p, &x, &v(&[0.0]), 0.1).unwrap(), x);
    }

    #[test]
    fn default_derivatives_match_analytic() {
        struct Fd(SphereBrownian);
        impl SdeProblem for Fd {
            fn state_dim(&self) -> usize { 3 }
            fn noise_dim(&self) -> usize { 3 }
            fn drift(&self, x: &DVector<f64>) -> DVector<f64> { self.0.drift(x) }
            fn diffusion(&self, x: &DVector<f64>) -> DMatrix<f64> { self.0.diffusion(x) }
        }
        let s = SphereBrownian::new([0.0, 0.0, 1.0], 1.0);
        let fd = Fd(s);
        let x = v(&[0.3, -0.5, 0.8]);
        let h = v(&[0.2, 0.7, -0.1]);
        assert!((fd.drift_derivative(&x, &h) - s.drift_derivative(&x, &h)).norm() < 1e-8);
        assert!((fd.diffusion_derivative(&x, &h) - s.diffusion_derivative(&x, &h)).norm() < 1e-8);
        let probes = vec![(x.clone(), h.clone())];
        let (a, b) = (diffusion_derivative_defect(&s, &probes, 1e-3), diffusion_derivative_defect(&s, &probes, 1e-4));
        assert!(b < a && a < 1e-2);
    }

    #[test]
    fn projected_circle_stays_on_circle() {
        let driver = BrownianDriver::new(3, 1e-3);
        let x0 = v(&[1.0, 0.0]);
        let path = simulate(&CircleBrownian, &x0, &driver, 1.0, Integrator::HEUN_PROJECTED).unwrap();
        for x in &path.states {
            assert!((x.norm() - 1.0).abs() <= 1e-12);
        }
        let raw = simulate(&CircleBrownian, &x0, &driver, 1.0, Integrator::HEUN).unwrap();
        let drift = raw.states.iter().map(|x| (x.norm() - 1.0).abs()).fold(0.0, f64::max);
        assert!(drift > 1e-8 && drift < 1e-2);
    }

    #[test]
    fn projection_derivative_is_tangent() {
        let c = Constraint::UnitSphere;
        let x = v(&[0.0, 0.0, 2.0]);
        let d = c.project_derivative(&x, &v(&[1.0, 1.0, 1.0]));
        assert!((d - v(&[0.5, 0.5, 0.0])).norm() < 1e-15);
    }
}
