//! Exit times from `U`, the announcing ladder `U_n = {dist(·, Uᶜ) > 1/n}`, and
//! the cutoff localization `(φ_n b, φ_n σ)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{check_dim, heun_stages, increment, Constraint, Integrator, SdeError, SdePath, SdeProblem};
use crate::rng::{self, BrownianDriver};

/// Address offset separating bridge-test uniforms from the Gaussian stream.
const BRIDGE_PATH_TAG: u64 = 0xB51D_6E00_0000_0001;

#[derive(Debug, Clone)]
pub struct LadderOptions {
    pub stages: Vec<u32>,
    /// Brownian-bridge test for exits between grid points.
    pub bridge: bool,
    pub integrator: Integrator,
}

impl Default for LadderOptions {
    fn default() -> Self {
        Self { stages: (1..=10).collect(), bridge: false, integrator: Integrator::HEUN }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageHit {
    pub n: u32,
    pub level: f64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingLadder {
    /// First hits of `U_nᶜ`, in order of `n`.
    pub hits: Vec<StageHit>,
    /// Exit time from `U`; `None` if the path stayed inside up to `t_end`.
    pub tau: Option<f64>,
    pub bridge_exit: bool,
}

impl StoppingLadder {
    pub fn hit(&self, n: u32) -> Option<f64> {
        self.hits.iter().find(|h| h.n == n).map(|h| h.time)
    }
}

#[derive(Debug, Clone)]
pub struct LadderRun {
    pub path: SdePath,
    pub ladder: StoppingLadder,
}

fn bridge_exit_probability<P: SdeProblem + ?Sized>(p: &P, x: &DVector<f64>, d0: f64, d1: f64, dt: f64) -> f64 {
    let g = p.distance_gradient(x);
    let s2 = (g.transpose() * p.diffusion(x)).norm_squared();
    if s2 == 0.0 {
        return 0.0;
    }
    (-2.0 * d0 * d1 / (s2 * dt)).exp()
}

/// Integrates until the exit from `U` or `t_end`, recording the ladder.
pub fn solve_with_ladder<P: SdeProblem + ?Sized>(
    p: &P,
    x0: &DVector<f64>,
    driver: &BrownianDriver,
    t_end: f64,
    opts: &LadderOptions,
) -> Result<LadderRun, SdeError> {
    check_dim(x0, p.state_dim())?;
    let d_start = p.domain_distance(x0);
    if !(d_start > 0.0) {
        return Err(SdeError::NotInDomain(d_start));
    }
    let dt = driver.dt();
    let steps = (t_end / dt).round() as u64;
    let mut stages: Vec<u32> = opts.stages.clone();
    stages.sort_unstable();
    stages.dedup();
    let mut hits = Vec::new();
    let mut pending = Vec::new();
    for n in stages {
        let level = 1.0 / n as f64;
        if d_start <= level {
            hits.push(StageHit { n, level, time: 0.0 });
        } else {
            pending.push((n, level));
        }
    }

    let mut path = SdePath { dt, times: vec![0.0], states: vec![x0.clone()], increments: Vec::new() };
    let mut ladder = StoppingLadder { hits, tau: None, bridge_exit: false };
    let mut x = x0.clone();
    let mut d0 = d_start;
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let db = increment(driver, k, p.noise_dim());
        let next = opts.integrator.step(p, &x, &db, dt, k + 1)?;
        let d1 = p.domain_distance(&next);
        path.times.push(t0 + dt);
        path.states.push(next.clone());
        path.increments.push(db);

        let exit_at = if d1 <= 0.0 {
            Some(t0 + dt * d0 / (d0 - d1))
        } else if opts.bridge
            && rng::uniform(driver.seed, driver.path ^ BRIDGE_PATH_TAG, k, 0) < bridge_exit_probability(p, &x, d0, d1, dt)
        {
            ladder.bridge_exit = true;
            Some(t0 + 0.5 * dt)
        } else {
            None
        };

        let mut remaining = Vec::with_capacity(pending.len());
        for &(n, level) in &pending {
            let time = match exit_at {
                Some(tau) if d1 > level => Some(t0 + (tau - t0) * (d0 - level) / d0),
                _ if d1 <= level => Some(t0 + dt * (d0 - level) / (d0 - d1)),
                _ => None,
            };
            match time {
                Some(time) => ladder.hits.push(StageHit { n, level, time }),
                None => remaining.push((n, level)),
            }
        }
        pending = remaining;
        if exit_at.is_some() {
            ladder.tau = exit_at;
            break;
        }
        x = next;
        d0 = d1;
    }
    ladder.hits.sort_by_key(|h| h.n);
    Ok(LadderRun { path, ladder })
}

/// Smooth step of the distance: `1` for `d ≥ 1/n`, `0` for `d ≤ 1/(2n)`.
pub fn bump(d: f64, n: u32) -> f64 {
    let (lo, hi) = (0.5 / n as f64, 1.0 / n as f64);
    if d >= hi {
        return 1.0;
    }
    if d <= lo {
        return 0.0;
    }
    let s = (d - lo) / (hi - lo);
    let f = |t: f64| (-1.0 / t).exp();
    f(s) / (f(s) + f(1.0 - s))
}

/// `(φ_n b, φ_n σ)`: bounded coefficients that coincide with the originals on `U_n`.
pub struct CutoffProblem<'a, P: ?Sized> {
    pub inner: &'a P,
    pub n: u32,
}

impl<P: SdeProblem + ?Sized> SdeProblem for CutoffProblem<'_, P> {
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    fn noise_dim(&self) -> usize {
        self.inner.noise_dim()
    }

    fn drift(&self, x: &DVector<f64>) -> DVector<f64> {
        self.inner.drift(x) * bump(self.inner.domain_distance(x), self.n)
    }

    fn diffusion(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.inner.diffusion(x) * bump(self.inner.domain_distance(x), self.n)
    }

    fn domain_distance(&self, x: &DVector<f64>) -> f64 {
        self.inner.domain_distance(x)
    }

    fn constraint(&self) -> Option<Constraint> {
        self.inner.constraint()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CutoffReport {
    pub n: u32,
    pub tau_n: Option<f64>,
    /// Last grid time at which every stage of the plain scheme so far stayed in `U_n`.
    pub window_end: f64,
    pub compared_steps: usize,
    pub max_deviation: f64,
}

/// Runs the plain and cut-off Heun schemes on one noise path and compares them
/// over the window in which the plain scheme never evaluated outside `U_n`.
pub fn cutoff_agreement<P: SdeProblem + ?Sized>(
    p: &P,
    x0: &DVector<f64>,
    driver: &BrownianDriver,
    t_end: f64,
    n: u32,
    project: bool,
) -> Result<CutoffReport, SdeError> {
    check_dim(x0, p.state_dim())?;
    let integ = Integrator { project, ..Integrator::HEUN };
    let opts = LadderOptions { stages: vec![n], bridge: false, integrator: integ };
    let run = solve_with_ladder(p, x0, driver, t_end, &opts)?;
    let cut = CutoffProblem { inner: p, n };
    let level = 1.0 / n as f64;
    let dt = driver.dt();

    let mut report = CutoffReport { n, tau_n: run.ladder.hit(n), window_end: 0.0, compared_steps: 0, max_deviation: 0.0 };
    if p.domain_distance(x0) < level {
        return Ok(report);
    }
    let mut y = x0.clone();
    for (k, db) in run.path.increments.iter().enumerate() {
        let x = &run.path.states[k];
        let (_, pred) = heun_stages(p, x, db, dt);
        if p.domain_distance(&pred) < level || p.domain_distance(&run.path.states[k + 1]) < level {
            break;
        }
        y = integ.step(&cut, &y, db, dt, k as u64 + 1)?;
        report.max_deviation = report.max_deviation.max((&y - &run.path.states[k + 1]).amax());
        report.compared_steps += 1;
        report.window_end = run.path.times[k + 1];
    }
    Ok(report)
}
