use rayon::prelude::*;
use serde::Serialize;

use super::{run_with, EulerianError, EulerianRunConfig, RunOutcome};
use crate::spectral::{sobolev_norm, SobolevIndex};

/// Monte Carlo estimate of `d/dt E‖u_t‖²_{L²}`.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyBalance {
    pub slope: f64,
    pub std_error: f64,
    pub n_paths: usize,
    /// Ensemble mean energy at each step time.
    pub times: Vec<f64>,
    pub mean_energy: Vec<f64>,
}

/// Least-squares slope of `y` against `x`.
fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Fits the energy slope of each path (driver path ids `0..n_paths`) and
/// returns the ensemble mean slope with its standard error.
pub fn energy_balance_estimate(config: &EulerianRunConfig, n_paths: usize) -> Result<EnergyBalance, EulerianError> {
    if n_paths < 2 {
        return Err(EulerianError::InvalidConfig(vec![format!("n_paths must be at least 2, got {n_paths}")]));
    }
    let per_path: Vec<Result<(Vec<f64>, Vec<f64>), EulerianError>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let cfg = EulerianRunConfig { path: p, checkpoints: Vec::new(), ..config.clone() };
            let mut times = Vec::new();
            let mut energy = Vec::new();
            let rec = run_with(&cfg, |_, t, u| {
                times.push(t);
                energy.push(u.energy());
            })?;
            if rec.outcome != RunOutcome::Completed {
                return Err(EulerianError::InvalidConfig(vec![format!("path {p} ended early: {:?}", rec.outcome)]));
            }
            Ok((times, energy))
        })
        .collect();
    let mut slopes = Vec::with_capacity(n_paths);
    let mut times = Vec::new();
    let mut mean_energy: Vec<f64> = Vec::new();
    for item in per_path {
        let (t, e) = item?;
        slopes.push(ols_slope(&t, &e));
        if mean_energy.is_empty() {
            mean_energy = vec![0.0; e.len()];
            times = t;
        }
        for (m, v) in mean_energy.iter_mut().zip(&e) {
            *m += v / n_paths as f64;
        }
    }
    let n = slopes.len() as f64;
    let slope = slopes.iter().sum::<f64>() / n;
    let var = slopes.iter().map(|s| (s - slope).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(EnergyBalance { slope, std_error: (var / n).sqrt(), n_paths, times, mean_energy })
}

/// Sobolev norms of one resolution at the checkpoint times.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementCurve {
    pub n: usize,
    pub hs: Vec<f64>,
    pub hs1: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoLossReport {
    pub s: f64,
    pub times: Vec<f64>,
    pub curves: Vec<RefinementCurve>,
    /// `rel_change[i][j]`: relative `H^{s+1}` change from `curves[i]` to `curves[i+1]` at `times[j]`.
    pub rel_change: Vec<Vec<f64>>,
    pub cap: f64,
    /// Every `H^s` value stayed below the cap.
    pub below_cap: bool,
    /// Finest pair changed by less than `NOLOSS_TOLERANCE` at every checkpoint.
    pub converged: bool,
    /// `H^{s+1}` increases with `N` at every checkpoint by at least the tolerance.
    pub growing: bool,
}

/// Relative change allowed between the two finest resolutions.
pub const NOLOSS_TOLERANCE: f64 = 0.01;

/// Runs the same datum and Brownian realization at each resolution and
/// compares `‖u_t‖_{H^{s+1}}` at the checkpoints (plus `t = 0`).
///
/// `s` is the configuration's `s_cap`.
pub fn noloss_nogain_diagnostic(config: &EulerianRunConfig, refinements: &[usize]) -> Result<NoLossReport, EulerianError> {
    let s = config.s_cap;
    let s1 = SobolevIndex::new(s.value() + 1.0)?;
    let tracked = |x: SobolevIndex| config.s_track.iter().any(|t| (t.value() - x.value()).abs() < 1e-12);
    if !tracked(s) || !tracked(s1) {
        return Err(EulerianError::InvalidConfig(vec![format!(
            "s_track must contain s = {} and s + 1 = {}",
            s.value(),
            s1.value()
        )]));
    }
    if refinements.len() < 2 {
        return Err(EulerianError::InvalidConfig(vec!["need at least two resolutions".into()]));
    }
    let mut times = vec![0.0];
    if config.checkpoints.is_empty() {
        times.extend([0.25, 0.5, 0.75, 1.0].iter().map(|f| f * config.t_end));
    } else {
        times.extend(config.checkpoints.iter().copied().filter(|&t| t > 0.0));
    }
    let steps: Vec<u64> = times.iter().map(|t| (t / config.dt).round() as u64).collect();

    let mut curves = Vec::new();
    let mut cap = f64::INFINITY;
    let mut below_cap = true;
    for &n in refinements {
        let cfg = EulerianRunConfig { n, checkpoints: Vec::new(), ..config.clone() };
        let mut hs = vec![f64::NAN; times.len()];
        let mut hs1 = vec![f64::NAN; times.len()];
        let rec = run_with(&cfg, |k, _, u| {
            for (j, &sk) in steps.iter().enumerate() {
                if sk == k {
                    hs[j] = sobolev_norm(u, s);
                    hs1[j] = sobolev_norm(u, s1);
                }
            }
        })?;
        cap = cap.min(rec.cap);
        if rec.outcome != RunOutcome::Completed {
            if hs[1].is_nan() {
                return Err(EulerianError::ExitBeforeCheckpoint { exit_time: rec.final_time, checkpoint: times[1] });
            }
            below_cap = false;
        }
        below_cap &= hs.iter().all(|&v| v < rec.cap);
        curves.push(RefinementCurve { n, hs, hs1 });
    }
    let rel_change: Vec<Vec<f64>> = curves
        .windows(2)
        .map(|w| w[0].hs1.iter().zip(&w[1].hs1).map(|(a, b)| (b - a) / a).collect())
        .collect();
    let last = rel_change.last().unwrap();
    let converged = below_cap && last.iter().all(|r| r.abs() < NOLOSS_TOLERANCE);
    let growing = rel_change.iter().all(|row| row.iter().all(|&r| r >= NOLOSS_TOLERANCE));
    Ok(NoLossReport { s: s.value(), times, curves, rel_change, cap, below_cap, converged, growing })
}
