//! Solutions in charts: push-forward of the coefficients, comparison with the
//! embedded solution, and gluing across a chart cover.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_dim, increment, simulate, Integrator, SdeError, SdeProblem};
use crate::rng::BrownianDriver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chart {
    Identity,
    /// Stereographic projection from the north pole, `(x₁, x₂)/(1 − x₃)`.
    StereoNorth,
    /// Stereographic projection from the south pole, `(x₁, x₂)/(1 + x₃)`.
    StereoSouth,
}

impl Chart {
    fn sign(&self) -> f64 {
        match self {
            Chart::StereoNorth => -1.0,
            _ => 1.0,
        }
    }

    pub fn to_chart(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Chart::Identity => x.clone(),
            _ => {
                let d = 1.0 + self.sign() * x[2];
                DVector::from_column_slice(&[x[0] / d, x[1] / d])
            }
        }
    }

    pub fn from_chart(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            Chart::Identity => y.clone(),
            _ => {
                let r2 = y.norm_squared();
                let d = 1.0 + r2;
                DVector::from_column_slice(&[2.0 * y[0] / d, 2.0 * y[1] / d, -self.sign() * (r2 - 1.0) / d])
            }
        }
    }

    /// `Dψ(x)`, chart dimension × ambient dimension.
    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match self {
            Chart::Identity => DMatrix::identity(x.len(), x.len()),
            _ => {
                let s = self.sign();
                let d = 1.0 + s * x[2];
                let e = -s / (d * d);
                DMatrix::from_row_slice(2, 3, &[1.0 / d, 0.0, e * x[0], 0.0, 1.0 / d, e * x[1]])
            }
        }
    }
}

/// The problem in chart coordinates: `b̃ = Dψ b ∘ ψ⁻¹`, `σ̃ = Dψ σ ∘ ψ⁻¹`, on the disk `|y| < radius`.
pub struct ChartProblem<'a, P: ?Sized> {
    pub inner: &'a P,
    pub chart: Chart,
    pub radius: f64,
}

impl<P: SdeProblem + ?Sized> SdeProblem for ChartProblem<'_, P> {
    fn state_dim(&self) -> usize {
        match self.chart {
            Chart::Identity => self.inner.state_dim(),
            _ => 2,
        }
    }

    fn noise_dim(&self) -> usize {
        self.inner.noise_dim()
    }

    fn drift(&self, y: &DVector<f64>) -> DVector<f64> {
        if self.chart == Chart::Identity {
            return self.inner.drift(y);
        }
        let x = self.chart.from_chart(y);
        self.chart.jacobian(&x) * self.inner.drift(&x)
    }

    fn diffusion(&self, y: &DVector<f64>) -> DMatrix<f64> {
        if self.chart == Chart::Identity {
            return self.inner.diffusion(y);
        }
        let x = self.chart.from_chart(y);
        self.chart.jacobian(&x) * self.inner.diffusion(&x)
    }

    fn domain_distance(&self, y: &DVector<f64>) -> f64 {
        match self.chart {
            Chart::Identity => self.inner.domain_distance(y).min(self.radius - y.norm()),
            _ => self.radius - y.norm(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChartReport {
    pub chart: Chart,
    pub steps: usize,
    /// `sup_k |ψ(X_k) − Y_k|`.
    pub max_deviation: f64,
}

/// Integrates the embedded problem and its chart push-forward on the same
/// noise and compares them in chart coordinates.
pub fn chart_consistency<P: SdeProblem + ?Sized>(
    p: &P,
    chart: Chart,
    radius: f64,
    x0: &DVector<f64>,
    driver: &BrownianDriver,
    t_end: f64,
    project: bool,
) -> Result<ChartReport, SdeError> {
    let embedded = simulate(p, x0, driver, t_end, Integrator { project, ..Integrator::HEUN })?;
    let cp = ChartProblem { inner: p, chart, radius };
    let in_chart = simulate(&cp, &chart.to_chart(x0), driver, t_end, Integrator::HEUN)?;
    let mut max_deviation: f64 = 0.0;
    for (k, (x, y)) in embedded.states.iter().zip(&in_chart.states).enumerate() {
        if cp.domain_distance(y) <= 0.0 {
            return Err(SdeError::ChartExit { time: in_chart.times[k] });
        }
        max_deviation = max_deviation.max((chart.to_chart(x) - y).norm());
    }
    Ok(ChartReport { chart, steps: embedded.increments.len(), max_deviation })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub chart: Chart,
    pub start_step: usize,
    pub start_time: f64,
}

#[derive(Debug, Clone)]
pub struct GluedPath {
    pub times: Vec<f64>,
    /// Ambient states `ψ⁻¹(Y_k)`.
    pub states: Vec<DVector<f64>>,
    pub segments: Vec<Segment>,
}

fn best_chart(cover: &[Chart], x: &DVector<f64>, switch_radius: f64, time: f64) -> Result<(usize, DVector<f64>), SdeError> {
    let (mut best, mut best_r) = (usize::MAX, f64::INFINITY);
    let mut best_y = DVector::zeros(0);
    for (i, c) in cover.iter().enumerate() {
        let y = c.to_chart(x);
        let r = y.norm();
        if r < best_r {
            (best, best_r, best_y) = (i, r, y);
        }
    }
    if best == usize::MAX || !(best_r < switch_radius) {
        return Err(SdeError::CoverViolation { time });
    }
    Ok((best, best_y))
}

/// Integrates in one chart until `|y|` exceeds `switch_radius`, then re-centers
/// into the chart of the cover where the state is closest to the center.
pub fn glue_maximal<P: SdeProblem + ?Sized>(
    p: &P,
    x0: &DVector<f64>,
    cover: &[Chart],
    switch_radius: f64,
    driver: &BrownianDriver,
    t_end: f64,
) -> Result<GluedPath, SdeError> {
    check_dim(x0, p.state_dim())?;
    let dt = driver.dt();
    let steps = (t_end / dt).round() as u64;
    let (mut ci, mut y) = best_chart(cover, x0, switch_radius, 0.0)?;
    let mut out = GluedPath {
        times: vec![0.0],
        states: vec![cover[ci].from_chart(&y)],
        segments: vec![Segment { chart: cover[ci], start_step: 0, start_time: 0.0 }],
    };
    for k in 0..steps {
        let cp = ChartProblem { inner: p, chart: cover[ci], radius: f64::INFINITY };
        let db = increment(driver, k, p.noise_dim());
        y = Integrator::HEUN.step(&cp, &y, &db, dt, k + 1)?;
        let t = (k + 1) as f64 * dt;
        let x = cover[ci].from_chart(&y);
        if y.norm() > switch_radius {
            let (next, ny) = best_chart(cover, &x, switch_radius, t)?;
            if next != ci {
                ci = next;
                y = ny;
                out.segments.push(Segment { chart: cover[ci], start_step: k as usize + 1, start_time: t });
            }
        }
        out.times.push(t);
        out.states.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{LinearSde, SphereBrownian};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn stereographic_round_trip() {
        let x = v(&[0.48, -0.6, 0.64]);
        for c in [Chart::StereoNorth, Chart::StereoSouth] {
            assert!((c.from_chart(&c.to_chart(&x)) - &x).norm() < 1e-15);
            let h = 1e-6;
            let t = v(&[0.6, 0.8, 0.0]).cross(&x).normalize();
            let fd = (c.to_chart(&(&x + &t * h)) - c.to_chart(&(&x - &t * h))) / (2.0 * h);
            assert!((fd - c.jacobian(&x) * &t).norm() < 1e-8);
        }
        let n = Chart::StereoNorth.to_chart(&x).norm();
        let s = Chart::StereoSouth.to_chart(&x).norm();
        assert!((n * s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_chart_is_exact() {
        let p = LinearSde::additive(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.1]),
            DMatrix::from_row_slice(2, 1, &[0.3, 0.2]),
        );
        let r = chart_consistency(&p, Chart::Identity, f64::INFINITY, &v(&[1.0, 0.0]), &BrownianDriver::new(1, 1e-3), 1.0, false).unwrap();
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn deterministic_rotation_second_order() {
        let p = SphereBrownian::new([1.0, 0.5, 0.0], 0.0);
        let x0 = v(&[0.6, 0.0, -0.8]);
        let dev = |dt: f64| chart_consistency(&p, Chart::StereoNorth, 10.0, &x0, &BrownianDriver::new(0, dt), 0.5, true).unwrap().max_deviation;
        let (a, b) = (dev(1e-2), dev(5e-3));
        assert!(a < 1e-3 && a / b > 3.5, "{a} {b}");
    }

    #[test]
    fn chart_exit_reported() {
        let p = SphereBrownian::new([1.0, 0.0, 0.0], 0.0);
        let r = chart_consistency(&p, Chart::StereoNorth, 1.5, &v(&[0.0, 0.0, -1.0]), &BrownianDriver::new(0, 1e-2), 3.0, true);
        assert!(matches!(r, Err(SdeError::ChartExit { .. })));
    }

    #[test]
    fn glued_rotation_tracks_embedded() {
        let p = SphereBrownian::new([1.0, 0.0, 0.0], 0.0);
        let x0 = v(&[0.0, 0.0, -1.0]);
        let driver = BrownianDriver::new(0, 1e-3);
        let glued = glue_maximal(&p, &x0, &[Chart::StereoNorth, Chart::StereoSouth], 2.0, &driver, 10.0).unwrap();
        assert!(glued.segments.len() >= 3);
        let reference = simulate(&p, &x0, &driver, 10.0, Integrator::HEUN_PROJECTED).unwrap();
        let dev = glued.states.iter().zip(&reference.states).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-5, "{dev}");
        let single = simulate(&ChartProblem { inner: &p, chart: Chart::StereoNorth, radius: f64::INFINITY }, &v(&[0.0, 0.0]), &driver, 0.5, Integrator::HEUN).unwrap();
        for (k, y) in single.states.iter().enumerate() {
            assert_eq!(Chart::StereoNorth.from_chart(y), glued.states[k]);
        }
    }

    #[test]
    fn cover_violation() {
        let p = SphereBrownian::new([1.0, 0.0, 0.0], 0.0);
        let r = glue_maximal(&p, &v(&[0.0, 0.0, 1.0]), &[Chart::StereoNorth], 2.0, &BrownianDriver::new(0, 1e-2), 1.0);
        assert!(matches!(r, Err(SdeError::CoverViolation { .. })));
    }
}
