//! Eulerian and Lagrangian experiments behind the CLI subcommands.

use crate::csv_row;
use crate::eulerian::{noloss_nogain_diagnostic, run, run_keeping_path, EulerianRunConfig, InitialCondition, NoLossReport, SolutionRecord};
use crate::lagrangian::{
    advance_flow, composition_residual, invert_flow, reconstruct_velocity, reconstruction_mismatch, right_invariance_check,
    FlowMap, Interpolation, LagrangianState, MapPreset, Reconstruction, VelocityPath,
};
use crate::spectral::{snapshot, SobolevIndex};

use super::{Check, Csv, HarnessError, Metric, OutputFile, Outputs, RunConfig};

pub fn norms_csv(record: &SolutionRecord) -> String {
    let names: Vec<String> = record.s_values.iter().map(|s| format!("h{s}")).collect();
    let mut header = vec!["time", "energy"];
    header.extend(names.iter().map(|s| s.as_str()));
    let mut csv = Csv::new(&header);
    for (i, &t) in record.times.iter().enumerate() {
        let mut row = csv_row![t, record.energy[i]];
        row.extend(record.norm_table[i].iter().map(|&v| v.into()));
        csv.row(row);
    }
    csv.finish()
}

pub fn stages_csv(record: &SolutionRecord) -> String {
    let mut csv = Csv::new(&["n", "level", "time"]);
    for s in &record.stages {
        csv.row(csv_row![s.n, s.level, s.time]);
    }
    csv.finish()
}

pub fn run_eulerian(cfg: &RunConfig) -> Result<Outputs, HarnessError> {
    let record = run(&cfg.eulerian_config())?;
    let mut out = Outputs::default();
    out.files.push(OutputFile::text("norms.csv", norms_csv(&record)));
    out.files.push(OutputFile::text("stages.csv", stages_csv(&record)));
    let mut summary = Csv::new(&["outcome", "final_time", "cap", "tau"]);
    summary.row(csv_row![
        format!("{:?}", record.outcome),
        record.final_time,
        record.cap,
        record.exit.map(|e| e.tau).unwrap_or(f64::NAN)
    ]);
    out.files.push(OutputFile::text("summary.csv", summary.finish()));
    for (t, f) in &record.snapshots {
        out.files.push(OutputFile { name: format!("snapshot_t{t:.6}.bin"), contents: snapshot::to_bytes(f) });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct FlowSettings {
    pub m: usize,
    pub substeps: u64,
    pub interpolation: Interpolation,
    pub jacobian_order: usize,
}

impl FlowSettings {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self { m: cfg.flow.m, substeps: cfg.flow.substeps, interpolation: cfg.flow.interpolation, jacobian_order: cfg.flow.jacobian_order }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FlowDiagRow {
    pub time: f64,
    pub det_min: f64,
    pub det_max: f64,
    pub volume_defect: f64,
    pub inversion_residual: f64,
    pub mismatch: f64,
}

/// Runs the Eulerian path, then the flow, its inverse and the reconstruction at each time.
pub fn flow_diagnostics(ecfg: &EulerianRunConfig, fs: FlowSettings, times: &[f64]) -> Result<Vec<FlowDiagRow>, HarnessError> {
    let (_, fields) = run_keeping_path(ecfg)?;
    let path = VelocityPath::new(0.0, ecfg.dt, fields);
    let dt = ecfg.dt / fs.substeps as f64;
    let mut flow = FlowMap::identity(fs.m);
    let mut rows = Vec::new();
    for &t in times {
        flow = advance_flow(&flow, &path, t, dt)?;
        let inverse = invert_flow(&path, t, fs.m, dt)?;
        let inversion_residual = composition_residual(&path, &inverse, dt)?;
        let state = LagrangianState::new(flow.clone(), &path)?;
        let rec = reconstruct_velocity(&state, &inverse, Reconstruction::Interpolate(fs.interpolation), &path, dt)?;
        let mismatch = reconstruction_mismatch(&rec, &path.at_time(t)?, fs.m);
        let dets = flow.jacobian_determinants(fs.jacobian_order);
        let det_min = dets.iter().copied().fold(f64::INFINITY, f64::min);
        let det_max = dets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        rows.push(FlowDiagRow {
            time: t,
            det_min,
            det_max,
            volume_defect: (det_max - 1.0).max(1.0 - det_min),
            inversion_residual,
            mismatch,
        });
    }
    Ok(rows)
}

pub fn flow_diag_csv(rows: &[FlowDiagRow]) -> String {
    let mut csv = Csv::new(&["time", "det_min", "det_max", "inversion_residual", "reconstruction_mismatch"]);
    for r in rows {
        csv.row(csv_row![r.time, r.det_min, r.det_max, r.inversion_residual, r.mismatch]);
    }
    csv.finish()
}

fn flow_times(cfg: &RunConfig) -> Vec<f64> {
    let mut times: Vec<f64> = cfg.checkpoints.iter().copied().filter(|&t| t > 0.0).collect();
    if times.is_empty() {
        times.push(cfg.eulerian.t_end);
    }
    times.sort_by(f64::total_cmp);
    times
}

pub fn run_flow(cfg: &RunConfig) -> Result<Outputs, HarnessError> {
    let rows = flow_diagnostics(&cfg.eulerian_config(), FlowSettings::from_config(cfg), &flow_times(cfg))?;
    Ok(Outputs { files: vec![OutputFile::text("flow_diag.csv", flow_diag_csv(&rows))], checks: Vec::new() })
}

/// The same Brownian path at half the flow grid and twice the step.
pub fn coarsened(ecfg: &EulerianRunConfig) -> EulerianRunConfig {
    EulerianRunConfig { dt: 2.0 * ecfg.dt, noise_substeps: 2 * ecfg.noise_substeps, ..ecfg.clone() }
}

/// Equivalence checks: volume, inversion and reconstruction bounds plus the
/// reconstruction gain from `(M/2, 2dt)` to `(M, dt)`.
pub fn equivalence_checks(
    ecfg: &EulerianRunConfig,
    fs: FlowSettings,
    times: &[f64],
    tol: (f64, f64, f64),
) -> Result<(Vec<FlowDiagRow>, FlowDiagRow, Check), HarnessError> {
    let rows = flow_diagnostics(ecfg, fs, times)?;
    let last_t = *times.last().expect("at least one time");
    let coarse_fs = FlowSettings { m: fs.m / 2, ..fs };
    let coarse = flow_diagnostics(&coarsened(ecfg), coarse_fs, &[last_t])?[0];
    let fine = *rows.last().unwrap();
    let worst = |f: fn(&FlowDiagRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let check = Check::new(
        "equivalence",
        vec![
            Metric::at_most("volume_defect", worst(|r| r.volume_defect), tol.0),
            Metric::at_most("inversion_residual", worst(|r| r.inversion_residual), tol.1),
            Metric::at_most("reconstruction_mismatch", worst(|r| r.mismatch), tol.2),
            Metric::at_least("refinement_gain", coarse.mismatch / fine.mismatch, 2.0),
        ],
    );
    Ok((rows, coarse, check))
}

pub fn check_equivalence(cfg: &RunConfig) -> Result<Outputs, HarnessError> {
    let fs = FlowSettings::from_config(cfg);
    let ecfg = cfg.eulerian_config();
    let (rows, coarse, check) = equivalence_checks(&ecfg, fs, &flow_times(cfg), (cfg.flow.tol_vol, cfg.flow.tol_inv, cfg.flow.tol_rec))?;
    let mut refine = Csv::new(&["m", "dt", "reconstruction_mismatch"]);
    refine.row(csv_row![fs.m / 2, 2.0 * ecfg.dt, coarse.mismatch]);
    refine.row(csv_row![fs.m, ecfg.dt, rows.last().unwrap().mismatch]);
    Ok(Outputs {
        files: vec![OutputFile::text("flow_diag.csv", flow_diag_csv(&rows)), OutputFile::text("flow_refine.csv", refine.finish())],
        checks: vec![check],
    })
}

/// Right-invariance deviations at the checkpoints for each grid size.
pub fn invariance_study(
    ecfg: &EulerianRunConfig,
    phi: MapPreset,
    grids: &[usize],
    times: &[f64],
    interpolation: Interpolation,
    substeps: u64,
) -> Result<Vec<(usize, Vec<(f64, f64)>)>, HarnessError> {
    let (_, fields) = run_keeping_path(ecfg)?;
    let path = VelocityPath::new(0.0, ecfg.dt, fields);
    let mut out = Vec::new();
    for &m in grids {
        let samples = right_invariance_check(&path, &phi, times, m, ecfg.dt / substeps as f64, interpolation)?;
        out.push((m, samples.iter().map(|s| (s.time, s.deviation)).collect()));
    }
    Ok(out)
}

pub fn invariance_csv(phi: &MapPreset, study: &[(usize, Vec<(f64, f64)>)]) -> String {
    let kind = match phi {
        MapPreset::Identity => "identity",
        MapPreset::Translation { .. } => "translation",
        MapPreset::Shear { .. } => "shear",
    };
    let mut csv = Csv::new(&["phi", "m", "time", "deviation"]);
    for (m, samples) in study {
        for &(t, d) in samples {
            csv.row(csv_row![kind, *m, t, d]);
        }
    }
    csv.finish()
}

fn sup(samples: &[(f64, f64)]) -> f64 {
    samples.iter().map(|s| s.1).fold(0.0, f64::max)
}

pub fn check_invariance(cfg: &RunConfig, phi: MapPreset) -> Result<Outputs, HarnessError> {
    let ecfg = cfg.eulerian_config();
    let m = cfg.flow.m;
    let times = flow_times(cfg);
    let grids: Vec<usize> = match phi {
        MapPreset::Shear { .. } => vec![m / 2, m],
        _ => vec![m],
    };
    let study = invariance_study(&ecfg, phi, &grids, &times, cfg.flow.interpolation, cfg.flow.substeps)?;
    let check = match phi {
        MapPreset::Shear { .. } => {
            let (coarse, fine) = (sup(&study[0].1), sup(&study[1].1));
            Check::new("invariance", vec![Metric::info("deviation_coarse", coarse), Metric::info("deviation_fine", fine), Metric::at_least("refinement_gain", coarse / fine, 2.0)])
        }
        _ => Check::new("invariance", vec![Metric::at_most("deviation", sup(&study[0].1), cfg.flow.tol_invariance)]),
    };
    Ok(Outputs { files: vec![OutputFile::text("invariance.csv", invariance_csv(&phi, &study))], checks: vec![check] })
}

/// Makes sure `s` and `s + 1` are tracked.
pub fn with_noloss_tracking(mut ecfg: EulerianRunConfig) -> EulerianRunConfig {
    let s = ecfg.s_cap.value();
    for v in [s, s + 1.0] {
        if !ecfg.s_track.iter().any(|t| (t.value() - v).abs() < 1e-12) {
            ecfg.s_track.push(SobolevIndex::new(v).expect("nonnegative"));
        }
    }
    ecfg
}

pub fn noloss_rows(csv: &mut Csv, case: &str, report: &NoLossReport) {
    for c in &report.curves {
        for (j, &t) in report.times.iter().enumerate() {
            csv.row(csv_row![case, c.n, t, c.hs[j], c.hs1[j]]);
        }
    }
}

pub const NOLOSS_HEADER: [&str; 5] = ["case", "n", "time", "hs", "hs1"];

/// The regular run and, for power-tail data, the `H^{s+1}`-divergent control with exponent `s + 1`.
pub fn noloss_study(ecfg: &EulerianRunConfig, refinements: &[usize], control: bool) -> Result<(NoLossReport, Option<NoLossReport>), HarnessError> {
    let ecfg = with_noloss_tracking(ecfg.clone());
    let regular = noloss_nogain_diagnostic(&ecfg, refinements)?;
    let control = match (&ecfg.initial, control) {
        (InitialCondition::PowerTail { amplitude, seed, .. }, true) => {
            let initial = InitialCondition::PowerTail { exponent: ecfg.s_cap.value() + 1.0, amplitude: *amplitude, seed: *seed };
            Some(noloss_nogain_diagnostic(&EulerianRunConfig { initial, ..ecfg.clone() }, refinements)?)
        }
        _ => None,
    };
    Ok((regular, control))
}

pub fn noloss_checks(regular: &NoLossReport, control: Option<&NoLossReport>) -> Vec<Check> {
    let worst = regular.rel_change.last().map(|r| r.iter().map(|v| v.abs()).fold(0.0, f64::max)).unwrap_or(f64::NAN);
    let mut checks = vec![Check::new(
        "noloss-regular",
        vec![Metric::flag("below_cap", regular.below_cap), Metric::at_most("max_rel_change_finest", worst, crate::eulerian::NOLOSS_TOLERANCE)],
    )];
    if let Some(c) = control {
        let least = c.rel_change.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        checks.push(Check::new("noloss-control", vec![Metric::flag("growing", c.growing), Metric::info("min_rel_growth", least)]));
    }
    checks
}

pub fn check_noloss(cfg: &RunConfig) -> Result<Outputs, HarnessError> {
    let (regular, control) = noloss_study(&cfg.eulerian_config(), &cfg.noloss.refinements, cfg.noloss.control)?;
    let mut csv = Csv::new(&NOLOSS_HEADER);
    noloss_rows(&mut csv, "regular", &regular);
    if let Some(c) = &control {
        noloss_rows(&mut csv, "control", c);
    }
    Ok(Outputs { files: vec![OutputFile::text("noloss.csv", csv.finish())], checks: noloss_checks(&regular, control.as_ref()) })
}
