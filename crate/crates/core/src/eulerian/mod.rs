//! Time integration of `du = −Π[(u·∇)u] dt + dW` on divergence-free, mean-free
//! velocity fields, with Sobolev-norm tracking and exit-time bookkeeping.

mod diagnostics;
mod initial;

pub use diagnostics::{
    energy_balance_estimate, noloss_nogain_diagnostic, EnergyBalance, NoLossReport, RefinementCurve, NOLOSS_TOLERANCE,
};
pub use initial::InitialCondition;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forcing::{sample_increment, BrownianDriver, NoiseError, NoiseModel};
use crate::spectral::{convective_term, sobolev_norm, SobolevIndex, SpectralError, SpectralField};

#[derive(Debug, Error)]
pub enum EulerianError {
    #[error("invalid run configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("numerical blow-up (non-finite coefficients) at step {step}")]
    NumericalBlowUp { step: u64 },
    #[error("run exited at t = {exit_time} before the first checkpoint t = {checkpoint}")]
    ExitBeforeCheckpoint { exit_time: f64, checkpoint: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Announcing levels `cap·(1 − 1/n)` for `n` in this range.
pub const ANNOUNCING_STAGES: std::ops::RangeInclusive<u32> = 2..=10;

/// Default blow-up cap as a multiple of the initial `H^s` norm.
pub const DEFAULT_CAP_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianRunConfig {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Sobolev indices whose norms are tabulated.
    pub s_track: Vec<SobolevIndex>,
    /// Index of the norm compared against `cap`.
    pub s_cap: SobolevIndex,
    /// `H^{s_cap}` exit threshold; defaults to `DEFAULT_CAP_FACTOR` times the initial norm.
    pub cap: Option<f64>,
    pub norm_stride: u64,
    pub noise: NoiseModel,
    pub seed: u64,
    /// Monte Carlo path id of the Brownian driver.
    pub path: u64,
    /// Each step's increment is the sum of this many finer increments, so runs
    /// with `dt` and `dt/2` (substeps 2 and 1) share one Brownian path.
    pub noise_substeps: u64,
    pub initial: InitialCondition,
    /// Times at which full fields are kept.
    pub checkpoints: Vec<f64>,
}

impl EulerianRunConfig {
    pub fn new(n: usize, dt: f64, t_end: f64, initial: InitialCondition, noise: NoiseModel) -> Self {
        let s = |v| SobolevIndex::new(v).unwrap();
        Self {
            n,
            dt,
            t_end,
            s_track: vec![s(0.0), s(2.0), s(3.0)],
            s_cap: s(2.0),
            cap: None,
            norm_stride: 10,
            noise,
            seed: 0,
            path: 0,
            noise_substeps: 1,
            initial,
            checkpoints: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    pub fn driver(&self) -> BrownianDriver {
        BrownianDriver {
            seed: self.seed,
            path: self.path,
            fine_dt: self.dt / self.noise_substeps as f64,
            factor: self.noise_substeps,
        }
    }

    /// Checks everything that does not need the initial field.
    pub fn validate_static(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.n < crate::spectral::MIN_CONVECTIVE_RESOLUTION {
            errs.push(format!("n must be at least {}", crate::spectral::MIN_CONVECTIVE_RESOLUTION));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            errs.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            errs.push(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.norm_stride == 0 {
            errs.push("norm_stride must be at least 1".into());
        }
        if self.noise_substeps == 0 {
            errs.push("noise_substeps must be at least 1".into());
        }
        if let Some(c) = self.cap {
            if !(c > 0.0) {
                errs.push(format!("cap must be positive, got {c}"));
            }
        }
        if self.noise.max_wavenumber() > self.n {
            errs.push(format!("noise modes reach |k| = {} beyond n = {}", self.noise.max_wavenumber(), self.n));
        }
        for &t in &self.checkpoints {
            if !(t >= 0.0 && t <= self.t_end) {
                errs.push(format!("checkpoint {t} outside [0, t_end]"));
            }
        }
        errs
    }

    /// Builds the initial field and resolves the cap, checking `cap > ‖u₀‖_{H^s}`.
    pub fn prepare(&self) -> Result<(SpectralField, f64), EulerianError> {
        let mut errs = self.validate_static();
        if !errs.is_empty() {
            return Err(EulerianError::InvalidConfig(errs));
        }
        let u0 = self.initial.build(self.n)?;
        let norm0 = sobolev_norm(&u0, self.s_cap);
        let cap = self.cap.unwrap_or(DEFAULT_CAP_FACTOR * norm0.max(1.0));
        if cap <= norm0 {
            errs.push(format!("cap {cap} must exceed the initial H^{} norm {norm0}", self.s_cap.value()));
            return Err(EulerianError::InvalidConfig(errs));
        }
        Ok((u0, cap))
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunOutcome {
    Completed,
    /// `‖u‖_{H^s}` reached the cap.
    CapExit,
    /// Non-finite coefficients appeared; distinct from a modeled exit.
    NumericalBlowUp { step: u64 },
}

/// First crossing of one announcing level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnouncingStage {
    pub n: u32,
    pub level: f64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    /// First grid time at which the cap was reached.
    pub tau: f64,
    /// Largest stage index crossed, with its announcing time.
    pub exit_stage: Option<AnnouncingStage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub times: Vec<f64>,
    pub s_values: Vec<f64>,
    /// `norm_table[i][j]` is `‖u(times[i])‖_{H^{s_values[j]}}`.
    pub norm_table: Vec<Vec<f64>>,
    /// `‖u‖²_{L²}` at each recorded time.
    pub energy: Vec<f64>,
    pub outcome: RunOutcome,
    pub exit: Option<ExitRecord>,
    /// Every announcing level crossed so far (possibly without a cap exit).
    pub stages: Vec<AnnouncingStage>,
    pub cap: f64,
    pub snapshots: Vec<(f64, SpectralField)>,
    pub final_field: SpectralField,
    pub final_time: f64,
}

fn drift(u: &SpectralField) -> Result<SpectralField, SpectralError> {
    Ok(convective_term(u)?.scaled(-1.0))
}

/// One step: Heun on the drift `−Π[(u·∇)u]`, then the increment `dW` added once.
///
/// The noise is additive, so Itô and Stratonovich readings coincide. The
/// increment is independent of the drift evaluations, which keeps the energy
/// injection per step exactly `‖dW‖²` in expectation.
pub fn step(u: &SpectralField, dw: &SpectralField, dt: f64, step_index: u64) -> Result<SpectralField, EulerianError> {
    let f0 = drift(u)?;
    let mut predictor = u.clone();
    predictor.axpy(dt, &f0);
    let f1 = drift(&predictor)?;
    let mut next = u.clone();
    next.axpy(0.5 * dt, &f0);
    next.axpy(0.5 * dt, &f1);
    next.axpy(1.0, dw);
    if !next.is_finite() {
        return Err(EulerianError::NumericalBlowUp { step: step_index });
    }
    Ok(next)
}

struct LadderTracker {
    cap: f64,
    stages: Vec<AnnouncingStage>,
    pending: Vec<(u32, f64)>,
}

impl LadderTracker {
    fn new(cap: f64, norm0: f64) -> Self {
        let mut stages = Vec::new();
        let mut pending = Vec::new();
        for n in ANNOUNCING_STAGES {
            let level = cap * (1.0 - 1.0 / n as f64);
            if norm0 >= level {
                stages.push(AnnouncingStage { n, level, time: 0.0 });
            } else {
                pending.push((n, level));
            }
        }
        Self { cap, stages, pending }
    }

    /// Registers the step `(t0, a) → (t1, b)`; returns true on a cap exit.
    fn update(&mut self, t0: f64, a: f64, t1: f64, b: f64) -> bool {
        let mut remaining = Vec::with_capacity(self.pending.len());
        for &(n, level) in &self.pending {
            if b >= level {
                let frac = if b > a { ((level - a) / (b - a)).clamp(0.0, 1.0) } else { 1.0 };
                self.stages.push(AnnouncingStage { n, level, time: t0 + (t1 - t0) * frac });
            } else {
                remaining.push((n, level));
            }
        }
        self.pending = remaining;
        b >= self.cap
    }
}

/// Integrates one path, calling `observer(step, t, u)` after every step (and at `t = 0`).
pub fn run_with<F>(config: &EulerianRunConfig, mut observer: F) -> Result<SolutionRecord, EulerianError>
where
    F: FnMut(u64, f64, &SpectralField),
{
    let (mut u, cap) = config.prepare()?;
    let driver = config.driver();
    let steps = config.steps();
    let s_values: Vec<f64> = config.s_track.iter().map(|s| s.value()).collect();
    let checkpoint_steps: Vec<u64> = config.checkpoints.iter().map(|t| (t / config.dt).round() as u64).collect();

    let mut record = SolutionRecord {
        times: Vec::new(),
        s_values,
        norm_table: Vec::new(),
        energy: Vec::new(),
        outcome: RunOutcome::Completed,
        exit: None,
        stages: Vec::new(),
        cap,
        snapshots: Vec::new(),
        final_field: u.clone(),
        final_time: 0.0,
    };
    let push_row = |record: &mut SolutionRecord, t: f64, u: &SpectralField| {
        record.times.push(t);
        record.norm_table.push(config.s_track.iter().map(|&s| sobolev_norm(u, s)).collect());
        record.energy.push(u.energy());
    };

    let mut cap_norm = sobolev_norm(&u, config.s_cap);
    let mut ladder = LadderTracker::new(cap, cap_norm);
    push_row(&mut record, 0.0, &u);
    if checkpoint_steps.contains(&0) {
        record.snapshots.push((0.0, u.clone()));
    }
    observer(0, 0.0, &u);

    for k in 0..steps {
        let dw = sample_increment(&driver, &config.noise, k, config.n)?;
        let next = match step(&u, &dw, config.dt, k + 1) {
            Ok(v) => v,
            Err(EulerianError::NumericalBlowUp { step }) => {
                record.outcome = RunOutcome::NumericalBlowUp { step };
                break;
            }
            Err(e) => return Err(e),
        };
        u = next;
        let (t0, t1) = (k as f64 * config.dt, (k + 1) as f64 * config.dt);
        let norm = sobolev_norm(&u, config.s_cap);
        let exited = ladder.update(t0, cap_norm, t1, norm);
        cap_norm = norm;
        observer(k + 1, t1, &u);
        record.final_time = t1;
        if checkpoint_steps.contains(&(k + 1)) {
            record.snapshots.push((t1, u.clone()));
        }
        if exited {
            push_row(&mut record, t1, &u);
            record.outcome = RunOutcome::CapExit;
            record.exit = Some(ExitRecord {
                tau: t1,
                exit_stage: ladder.stages.iter().copied().max_by_key(|s| s.n),
            });
            break;
        }
        if (k + 1) % config.norm_stride == 0 || k + 1 == steps {
            push_row(&mut record, t1, &u);
        }
    }
    record.stages = ladder.stages;
    record.final_field = u;
    Ok(record)
}

pub fn run(config: &EulerianRunConfig) -> Result<SolutionRecord, EulerianError> {
    run_with(config, |_, _, _| {})
}

/// Runs and keeps the field after every step (for the Lagrangian flow).
pub fn run_keeping_path(config: &EulerianRunConfig) -> Result<(SolutionRecord, Vec<SpectralField>), EulerianError> {
    let mut path = Vec::with_capacity(config.steps() as usize + 1);
    let record = run_with(config, |_, _, u| path.push(u.clone()))?;
    Ok((record, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::evaluate_at;

    fn s(v: f64) -> SobolevIndex {
        SobolevIndex::new(v).unwrap()
    }

    #[test]
    fn pure_noise_step_from_rest() {
        let u = SpectralField::zeros(8, 2);
        let model = NoiseModel::power_law(4, 1.0, 1.0, s(0.0));
        let dw = sample_increment(&BrownianDriver::new(3, 0.01), &model, 0, 8).unwrap();
        let next = step(&u, &dw, 0.01, 1).unwrap();
        assert!(next.max_abs_diff(&dw) < 1e-15);
    }

    #[test]
    fn steady_states_are_fixed() {
        let zero = SpectralField::zeros(8, 2);
        let shear = InitialCondition::Shear { amplitude: 1.0 }.build(8).unwrap();
        let next = step(&shear, &zero, 1e-2, 1).unwrap();
        assert!(next.max_abs_diff(&shear) < 1e-13);
        let tg = InitialCondition::TaylorGreen { amplitude: 1.0 }.build(8).unwrap();
        let next = step(&tg, &zero, 1e-2, 1).unwrap();
        assert!(next.max_abs_diff(&tg) < 1e-13);
    }

    #[test]
    fn step_preserves_mean_and_divergence() {
        let u = InitialCondition::RandomSmooth { k_max: 4, energy: 1.0, seed: 2 }.build(8).unwrap();
        let model = NoiseModel::power_law(4, 1.0, 1.0, s(0.0));
        let dw = sample_increment(&BrownianDriver::new(3, 0.01), &model, 0, 8).unwrap();
        let next = step(&u, &dw, 0.01, 1).unwrap();
        assert!(next.divergence_defect() < 1e-12);
        assert!(next.is_divergence_free());
        assert!(next.mean().iter().all(|z| z.norm() == 0.0));
        assert_eq!(next.hermitian_defect(), 0.0);
    }

    #[test]
    fn blow_up_is_reported_with_step() {
        let mut u = SpectralField::zeros(8, 2);
        u.set_mode(0, 0, 1, num_complex::Complex64::new(f64::NAN, 0.0));
        let zero = SpectralField::zeros(8, 2);
        match step(&u, &zero, 0.1, 17) {
            Err(EulerianError::NumericalBlowUp { step }) => assert_eq!(step, 17),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cap_below_initial_norm_rejected() {
        let mut cfg = EulerianRunConfig::new(8, 1e-3, 0.1, InitialCondition::TaylorGreen { amplitude: 1.0 }, NoiseModel::empty());
        let norm0 = sobolev_norm(&cfg.initial.build(8).unwrap(), cfg.s_cap);
        // Rescale so the initial H² norm is 2 and ask for cap 1.
        cfg.initial = InitialCondition::TaylorGreen { amplitude: 2.0 / norm0 };
        cfg.cap = Some(1.0);
        assert!(matches!(run(&cfg), Err(EulerianError::InvalidConfig(_))));
    }

    #[test]
    fn cap_exit_records_announcing_sequence() {
        // Strong noise on a small cap forces an exit.
        let mut cfg = EulerianRunConfig::new(8, 1e-2, 5.0, InitialCondition::Zero, NoiseModel::power_law(2, 0.0, 5.0, s(0.0)));
        cfg.cap = Some(3.0);
        let rec = run(&cfg).unwrap();
        assert_eq!(rec.outcome, RunOutcome::CapExit);
        let exit = rec.exit.clone().unwrap();
        assert!(rec.times.iter().all(|&t| t <= exit.tau));
        let mut stages = rec.stages.clone();
        stages.sort_by_key(|s| s.n);
        assert_eq!(stages.len(), 9);
        for w in stages.windows(2) {
            assert!(w[0].time <= w[1].time);
        }
        assert!(stages.iter().all(|s| s.time < exit.tau));
        assert_eq!(exit.exit_stage.unwrap().n, 10);
    }

    #[test]
    fn zero_noise_shear_stays_put() {
        let cfg = EulerianRunConfig::new(8, 1e-2, 0.5, InitialCondition::Shear { amplitude: 1.0 }, NoiseModel::empty());
        let rec = run(&cfg).unwrap();
        let u0 = cfg.initial.build(8).unwrap();
        assert!(rec.final_field.max_abs_diff(&u0) < 1e-13);
        let v = evaluate_at(&rec.final_field, &[[0.0, 0.0]])[0];
        assert!((v[0] - 1.0).abs() < 1e-13);
        assert_eq!(rec.outcome, RunOutcome::Completed);
        assert!((rec.final_time - 0.5).abs() < 1e-15);
    }

    #[test]
    fn momentum_stays_exactly_zero_with_noise() {
        let mut cfg = EulerianRunConfig::new(8, 1e-2, 0.3, InitialCondition::RandomSmooth { k_max: 3, energy: 0.5, seed: 1 }, NoiseModel::power_law(4, 1.0, 1.0, s(0.0)));
        cfg.seed = 99;
        let mut max_mean: f64 = 0.0;
        let mut max_div: f64 = 0.0;
        run_with(&cfg, |_, _, u| {
            max_mean = max_mean.max(u.mean().iter().map(|z| z.norm()).fold(0.0, f64::max));
            max_div = max_div.max(u.divergence_defect());
        })
        .unwrap();
        assert_eq!(max_mean, 0.0);
        assert!(max_div < 1e-12);
    }
}
