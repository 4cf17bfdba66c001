//! Finite-dimensional SDE studies: constraint drift, strong orders under
//! shared noise, exit times, cutoffs, charts and derivatives.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::manifold::{
    chart_consistency, cutoff_agreement, glue_maximal, ito_formula_residual, simulate, solve_with_ladder, variational_derivative, Chart,
    CircleBrownian, CubicObservable, Integrator, IntervalDiffusion, ItoQuadrature, LadderOptions, LinearObservable, LinearSde,
    QuadraticNorm, Scheme, SdeError, SdeProblem, SphereBrownian,
};
use crate::rng::BrownianDriver;

/// Least-squares slope of `log e` against `log h`.
pub fn fit_order(h: &[f64], e: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// RMS errors over paths at a ladder of steps `fine_dt · 2^j`, all driven by one fine path per sample.
/// A path whose error is `None` at any level is left out; `paths` counts the ones kept.
#[derive(Debug, Clone, Serialize)]
pub struct Refinement {
    pub dts: Vec<f64>,
    pub rms: Vec<f64>,
    pub order: f64,
    pub paths: usize,
    pub excluded: usize,
}

impl Refinement {
    pub fn measure<F>(seed: u64, fine_dt: f64, levels: u32, paths: usize, err: F) -> Result<Self, SdeError>
    where
        F: Fn(&BrownianDriver) -> Result<Option<f64>, SdeError> + Sync,
    {
        let factors: Vec<u64> = (0..levels).rev().map(|j| 1u64 << j).collect();
        let per_path: Vec<Result<Option<Vec<f64>>, SdeError>> = (0..paths as u64)
            .into_par_iter()
            .map(|p| {
                let fine = BrownianDriver::new(seed, fine_dt).with_path(p);
                factors.iter().map(|&f| err(&fine.coarsened(f))).collect()
            })
            .collect();
        let mut sums = vec![0.0; factors.len()];
        let mut kept = 0;
        for row in per_path {
            if let Some(row) = row? {
                kept += 1;
                for (s, e) in sums.iter_mut().zip(row) {
                    *s += e * e;
                }
            }
        }
        let rms: Vec<f64> = sums.iter().map(|s| (s / kept as f64).sqrt()).collect();
        let dts: Vec<f64> = factors.iter().map(|&f| fine_dt * f as f64).collect();
        Ok(Self { order: fit_order(&dts, &rms), dts, rms, paths: kept, excluded: paths - kept })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConstraintStudy {
    pub dt: f64,
    pub projected_max: f64,
    pub raw_max: f64,
}

/// `sup_t ||X_t| − 1|` over paths, with and without projection.
pub fn constraint_study<P: SdeProblem>(p: &P, x0: &DVector<f64>, seed: u64, dt: f64, t_end: f64, paths: usize) -> Result<ConstraintStudy, SdeError> {
    let drift = |integ: Integrator| -> Result<f64, SdeError> {
        let per: Result<Vec<f64>, SdeError> = (0..paths as u64)
            .into_par_iter()
            .map(|k| {
                let path = simulate(p, x0, &BrownianDriver::new(seed, dt).with_path(k), t_end, integ)?;
                Ok(path.states.iter().map(|x| (x.norm() - 1.0).abs()).fold(0.0, f64::max))
            })
            .collect();
        Ok(per?.into_iter().fold(0.0, f64::max))
    };
    Ok(ConstraintStudy { dt, projected_max: drift(Integrator::HEUN_PROJECTED)?, raw_max: drift(Integrator::HEUN)? })
}

pub fn circle_constraint(seed: u64, dt: f64, t_end: f64, paths: usize) -> Result<ConstraintStudy, SdeError> {
    constraint_study(&CircleBrownian, &DVector::from_column_slice(&[1.0, 0.0]), seed, dt, t_end, paths)
}

/// `|X^{Itô-EM}_T − X^{Heun}_T|` on the circle under shared noise.
pub fn ito_vs_stratonovich(seed: u64, fine_dt: f64, levels: u32, t_end: f64, paths: usize, project: bool) -> Result<Refinement, SdeError> {
    let x0 = DVector::from_column_slice(&[1.0, 0.0]);
    Refinement::measure(seed, fine_dt, levels, paths, |d| {
        let strat = simulate(&CircleBrownian, &x0, d, t_end, Integrator { scheme: Scheme::StratonovichHeun, project })?;
        let ito = simulate(&CircleBrownian, &x0, d, t_end, Integrator { scheme: Scheme::ItoEuler, project })?;
        Ok(Some((strat.last() - ito.last()).norm()))
    })
}

/// Linear test problem `ẋ = Mx` for the variational equation.
pub fn linear_test_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[-0.5, 1.0, 0.2, -1.0, -0.3, 0.0, 0.1, 0.4, -0.2])
}

/// `|A_T − e^{MT} h|` for `ẋ = Mx`.
pub fn linear_variational_error(dt: f64, t_end: f64) -> Result<f64, SdeError> {
    let m = linear_test_matrix();
    let p = LinearSde::deterministic(m.clone());
    let x0 = DVector::from_column_slice(&[1.0, -0.5, 0.25]);
    let h = DVector::from_column_slice(&[0.3, 0.7, -0.2]);
    let st = variational_derivative(&p, &x0, &h, &BrownianDriver::new(0, dt), t_end, false)?;
    let exact = (m * t_end).exp() * &h;
    Ok((st.derivative.last().unwrap() - exact).norm())
}

pub fn sphere_problem() -> SphereBrownian {
    SphereBrownian::new([0.3, -0.2, 1.0], 0.8)
}

/// RMS over paths of `sup_t |(X^{x₀+εh}_t − X^{x₀}_t)/ε − A_t|` on the sphere, per `ε`.
pub fn sphere_fd_residuals(seed: u64, dt: f64, t_end: f64, eps: &[f64], paths: usize) -> Result<Vec<f64>, SdeError> {
    let p = sphere_problem();
    let x0 = DVector::from_column_slice(&[0.6, 0.0, 0.8]);
    let h = DVector::from_column_slice(&[0.8, 0.0, -0.6]);
    let per: Result<Vec<Vec<f64>>, SdeError> = (0..paths as u64)
        .into_par_iter()
        .map(|k| {
            let d = BrownianDriver::new(seed, dt).with_path(k);
            let var = variational_derivative(&p, &x0, &h, &d, t_end, true)?;
            let base = simulate(&p, &x0, &d, t_end, Integrator::HEUN_PROJECTED)?;
            eps.iter()
                .map(|&e| {
                    let bumped = simulate(&p, &(&x0 + &h * e), &d, t_end, Integrator::HEUN_PROJECTED)?;
                    Ok(bumped
                        .states
                        .iter()
                        .zip(&base.states)
                        .zip(&var.derivative)
                        .map(|((xb, x), a)| ((xb - x) / e - a).norm())
                        .fold(0.0, f64::max))
                })
                .collect()
        })
        .collect();
    let per = per?;
    Ok((0..eps.len()).map(|i| (per.iter().map(|r| r[i] * r[i]).sum::<f64>() / paths as f64).sqrt()).collect())
}

/// Deterministic motion `ẋ = 1` on `(−1, 1)` from 0: `(τ, max_n |τ_n − (1 − 1/n)|)`.
pub fn deterministic_ladder(dt: f64) -> Result<(f64, f64), SdeError> {
    let p = IntervalDiffusion::new(1.0, 0.0, -1.0, 1.0);
    let run = solve_with_ladder(&p, &DVector::zeros(1), &BrownianDriver::new(0, dt), 2.0, &LadderOptions::default())?;
    let tau = run.ladder.tau.unwrap_or(f64::NAN);
    let worst = run.ladder.hits.iter().map(|h| (h.time - (1.0 - 1.0 / h.n as f64)).abs()).fold(0.0, f64::max);
    Ok((tau, worst))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExitStats {
    pub mean: f64,
    pub std_error: f64,
    pub exited: usize,
    pub paths: usize,
    /// Paths whose ladder was monotone with every `τ_n < τ`.
    pub announcing: usize,
}

/// Mean exit time of `dX = μ dt + s dB` from `(−1, 1)`.
pub fn exit_time_mean(p: &IntervalDiffusion, x0: f64, seed: u64, dt: f64, paths: usize, t_max: f64, bridge: bool) -> Result<ExitStats, SdeError> {
    let opts = LadderOptions { bridge, ..LadderOptions::default() };
    let x0 = DVector::from_element(1, x0);
    let per: Result<Vec<(Option<f64>, bool)>, SdeError> = (0..paths as u64)
        .into_par_iter()
        .map(|k| {
            let run = solve_with_ladder(p, &x0, &BrownianDriver::new(seed, dt).with_path(k), t_max, &opts)?;
            let l = &run.ladder;
            let ok = l.hits.windows(2).all(|w| w[0].time <= w[1].time) && l.tau.map_or(true, |t| l.hits.iter().all(|h| h.time < t));
            Ok((l.tau, ok))
        })
        .collect();
    let per = per?;
    let taus: Vec<f64> = per.iter().filter_map(|r| r.0).collect();
    let n = taus.len() as f64;
    let mean = taus.iter().sum::<f64>() / n;
    let var = taus.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(ExitStats { mean, std_error: (var / n).sqrt(), exited: taus.len(), paths, announcing: per.iter().filter(|r| r.1).count() })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CutoffStudy {
    pub max_deviation: f64,
    pub compared_steps: usize,
    /// Paths whose comparison window ended no later than `τ_n`.
    pub windows_before_stage: usize,
    pub paths: usize,
}

pub fn cutoff_study(p: &IntervalDiffusion, x0: f64, seed: u64, dt: f64, t_end: f64, n: u32, paths: usize) -> Result<CutoffStudy, SdeError> {
    let x0 = DVector::from_element(1, x0);
    let per: Result<Vec<_>, SdeError> = (0..paths as u64)
        .into_par_iter()
        .map(|k| cutoff_agreement(p, &x0, &BrownianDriver::new(seed, dt).with_path(k), t_end, n, false))
        .collect();
    let per = per?;
    Ok(CutoffStudy {
        max_deviation: per.iter().map(|r| r.max_deviation).fold(0.0, f64::max),
        compared_steps: per.iter().map(|r| r.compared_steps).sum(),
        windows_before_stage: per.iter().filter(|r| r.tau_n.map_or(true, |t| r.window_end <= t)).count(),
        paths,
    })
}

/// Two-dimensional linear SDE with a single multiplicative channel.
pub fn ito_test_problem() -> LinearSde {
    LinearSde::new(
        DMatrix::from_row_slice(2, 2, &[-0.5, 1.0, -1.0, -0.5]),
        vec![DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.1, 0.2])],
        DMatrix::from_row_slice(2, 1, &[0.2, 0.1]),
    )
}

/// RMS of the Itô-formula residual at `t_end` for the cubic observable on the linear test problem.
pub fn ito_residual_order(seed: u64, fine_dt: f64, levels: u32, t_end: f64, paths: usize, quad: ItoQuadrature) -> Result<Refinement, SdeError> {
    let p = ito_test_problem();
    let x0 = DVector::from_column_slice(&[1.0, 0.5]);
    Refinement::measure(seed, fine_dt, levels, paths, |d| {
        let path = simulate(&p, &x0, d, t_end, Integrator::HEUN)?;
        Ok(Some(*ito_formula_residual(&p, &CubicObservable, &path, quad).last().unwrap()))
    })
}

/// Largest residuals for the exact cases: linear `h` with constant `σ`, and `|x|²` on the circle.
pub fn ito_exact_cases(seed: u64, dt: f64, t_end: f64, paths: usize) -> Result<(f64, f64), SdeError> {
    let additive = LinearSde::additive(DMatrix::zeros(2, 2), DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.2, 0.8]));
    let h = LinearObservable(DVector::from_column_slice(&[2.0, -1.0]));
    let (mut lin, mut con) = (0.0f64, 0.0f64);
    for k in 0..paths as u64 {
        let d = BrownianDriver::new(seed, dt).with_path(k);
        let path = simulate(&additive, &DVector::from_column_slice(&[0.1, 0.2]), &d, t_end, Integrator::HEUN)?;
        for q in [ItoQuadrature::LeftPoint, ItoQuadrature::SecondOrder] {
            lin = lin.max(ito_formula_residual(&additive, &h, &path, q).iter().map(|r| r.abs()).fold(0.0, f64::max));
        }
        let circ = simulate(&CircleBrownian, &DVector::from_column_slice(&[1.0, 0.0]), &d, t_end, Integrator::HEUN_PROJECTED)?;
        for q in [ItoQuadrature::LeftPoint, ItoQuadrature::SecondOrder] {
            con = con.max(ito_formula_residual(&CircleBrownian, &QuadraticNorm, &circ, q).iter().map(|r| r.abs()).fold(0.0, f64::max));
        }
    }
    Ok((lin, con))
}

/// Embedded vs north-chart Brownian motion on S², started near the south pole.
/// Paths that leave the chart disk (or blow up next to its edge) are stopped and excluded.
pub fn chart_refinement(p: &SphereBrownian, radius: f64, seed: u64, fine_dt: f64, levels: u32, t_end: f64, paths: usize) -> Result<Refinement, SdeError> {
    let x0 = DVector::from_column_slice(&[0.6, 0.0, -0.8]);
    Refinement::measure(seed, fine_dt, levels, paths, |d| match chart_consistency(p, Chart::StereoNorth, radius, &x0, d, t_end, true) {
        Ok(r) => Ok(Some(r.max_deviation)),
        Err(SdeError::ChartExit { .. } | SdeError::NonFinite { .. }) => Ok(None),
        Err(e) => Err(e),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GlueStudy {
    pub times: Vec<f64>,
    pub charts: Vec<usize>,
    pub deviation: Vec<f64>,
    pub switches: usize,
    pub max_deviation: f64,
    /// Largest gap between two switch schedules on the same noise.
    pub schedule_gap: f64,
}

pub fn glue_study<P: SdeProblem>(p: &P, x0: &DVector<f64>, switch_radius: f64, driver: &BrownianDriver, t_end: f64) -> Result<GlueStudy, SdeError> {
    let cover = [Chart::StereoNorth, Chart::StereoSouth];
    let glued = glue_maximal(p, x0, &cover, switch_radius, driver, t_end)?;
    let alt = glue_maximal(p, x0, &cover, 1.0 + 0.5 * (switch_radius - 1.0), driver, t_end)?;
    let reference = simulate(p, x0, driver, t_end, Integrator::HEUN_PROJECTED)?;
    let deviation: Vec<f64> = glued.states.iter().zip(&reference.states).map(|(a, b)| (a - b).norm()).collect();
    let mut charts = Vec::with_capacity(glued.times.len());
    let mut seg = 0;
    for k in 0..glued.times.len() {
        while seg + 1 < glued.segments.len() && glued.segments[seg + 1].start_step <= k {
            seg += 1;
        }
        charts.push(cover.iter().position(|c| *c == glued.segments[seg].chart).unwrap());
    }
    Ok(GlueStudy {
        max_deviation: deviation.iter().copied().fold(0.0, f64::max),
        schedule_gap: glued.states.iter().zip(&alt.states).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max),
        switches: glued.segments.len() - 1,
        times: glued.times,
        charts,
        deviation,
    })
}

/// The `sde-lab` subcommand.
pub fn sde_lab(cfg: &super::RunConfig, experiment: super::SdeExperiment) -> Result<super::Outputs, super::HarnessError> {
    use super::{Check, Csv, Metric, OutputFile, Outputs, SdeExperiment};
    use crate::csv_row;

    let s = &cfg.sde;
    let seed = cfg.seed;
    let mut out = Outputs::default();
    match experiment {
        SdeExperiment::Ladder => {
            let p = IntervalDiffusion::new(s.drift, s.sigma, -1.0, 1.0);
            let opts = LadderOptions { bridge: s.bridge, ..LadderOptions::default() };
            let x0 = DVector::from_element(1, s.x0);
            let mut ladder = Csv::new(&["path", "n", "level", "tau_n"]);
            let mut exits = Csv::new(&["path", "tau", "bridge_exit"]);
            for k in 0..s.paths as u64 {
                let run = solve_with_ladder(&p, &x0, &BrownianDriver::new(seed, s.dt).with_path(k), s.t_end, &opts)?;
                for h in &run.ladder.hits {
                    ladder.row(csv_row![k, h.n, h.level, h.time]);
                }
                exits.row(csv_row![k, run.ladder.tau.unwrap_or(f64::NAN), run.ladder.bridge_exit]);
            }
            let stats = exit_time_mean(&p, s.x0, seed, s.dt, s.paths, s.t_end, s.bridge)?;
            let cut = cutoff_study(&p, s.x0, seed, s.dt, s.t_end, s.cutoff_stage, s.paths)?;
            let mut summary = Csv::new(&["mean_tau", "std_error", "exited", "paths", "cutoff_max_deviation", "cutoff_compared_steps"]);
            summary.row(csv_row![stats.mean, stats.std_error, stats.exited, stats.paths, cut.max_deviation, cut.compared_steps]);
            out.files.push(OutputFile::text("ladder.csv", ladder.finish()));
            out.files.push(OutputFile::text("exit.csv", exits.finish()));
            out.files.push(OutputFile::text("ladder_summary.csv", summary.finish()));
            out.checks.push(Check::new(
                "ladder",
                vec![
                    Metric::info("mean_tau", stats.mean),
                    Metric::info("std_error", stats.std_error),
                    Metric::at_least("announcing_fraction", stats.announcing as f64 / stats.paths as f64, 1.0),
                    Metric::at_most("cutoff_max_deviation", cut.max_deviation, 1e-12),
                ],
            ));
        }
        SdeExperiment::Chart => {
            let p = SphereBrownian::new(s.rotation, s.noise);
            let r = chart_refinement(&p, s.chart_radius, seed, s.dt, s.refinements, s.t_end, s.paths)?;
            let mut csv = Csv::new(&["dt", "rms_deviation"]);
            for (dt, e) in r.dts.iter().zip(&r.rms) {
                csv.row(csv_row![*dt, *e]);
            }
            out.files.push(OutputFile::text("chart.csv", csv.finish()));
            out.checks.push(Check::new(
                "chart",
                vec![Metric::at_least("order", r.order, 0.5), Metric::info("paths", r.paths as f64), Metric::info("excluded", r.excluded as f64)],
            ));
        }
        SdeExperiment::Ito => {
            let left = ito_residual_order(seed, s.dt, s.refinements, s.t_end, s.paths, ItoQuadrature::LeftPoint)?;
            let second = ito_residual_order(seed, s.dt, s.refinements, s.t_end, s.paths, ItoQuadrature::SecondOrder)?;
            let (lin, con) = ito_exact_cases(seed, s.dt, s.t_end, s.paths.min(16))?;
            let mut csv = Csv::new(&["dt", "rms_left_point", "rms_second_order"]);
            for i in 0..left.dts.len() {
                csv.row(csv_row![left.dts[i], left.rms[i], second.rms[i]]);
            }
            out.files.push(OutputFile::text("ito.csv", csv.finish()));
            out.checks.push(Check::new(
                "ito",
                vec![
                    Metric::info("order_left_point", left.order),
                    Metric::at_least("order_second_order", second.order, 0.5),
                    Metric::at_most("linear_exact", lin, 1e-10),
                    Metric::at_most("constraint_exact", con, 1e-10),
                ],
            ));
        }
        SdeExperiment::Variational => {
            let lin = linear_variational_error(s.dt, s.t_end)?;
            let res = sphere_fd_residuals(seed, s.dt, s.t_end, &s.epsilons, s.paths)?;
            let mut csv = Csv::new(&["epsilon", "rms_residual"]);
            for (e, r) in s.epsilons.iter().zip(&res) {
                csv.row(csv_row![*e, *r]);
            }
            out.files.push(OutputFile::text("variational.csv", csv.finish()));
            let mut metrics = vec![Metric::info("linear_oracle_error", lin)];
            if res.len() >= 2 {
                metrics.push(Metric::within("epsilon_slope", fit_order(&s.epsilons, &res), 0.8, 1.2));
            }
            out.checks.push(Check::new("variational", metrics));
        }
        SdeExperiment::Glue => {
            let p = SphereBrownian::new(s.glue_rotation, s.noise);
            let x0 = DVector::from_column_slice(&[0.6, 0.0, -0.8]);
            let g = glue_study(&p, &x0, s.switch_radius, &BrownianDriver::new(seed, s.dt), s.t_end)?;
            let mut csv = Csv::new(&["time", "chart", "deviation"]);
            for i in 0..g.times.len() {
                csv.row(csv_row![g.times[i], g.charts[i], g.deviation[i]]);
            }
            out.files.push(OutputFile::text("glue.csv", csv.finish()));
            out.checks.push(Check::new(
                "glue",
                vec![
                    Metric::info("switches", g.switches as f64),
                    Metric::at_most("max_deviation", g.max_deviation, s.chart_tol),
                    Metric::at_most("schedule_gap", g.schedule_gap, 10.0 * s.chart_tol),
                ],
            ));
        }
    }
    Ok(out)
}
