//! Lagrangian side of the stochastic Euler equations: the particle flow
//! `dΦ = u(t, Φ) dt`, its inverse, the Lagrangian velocity `η = u∘Φ`, and the
//! reconstruction `u = η∘Φ⁻¹`.
//!
//! Flow maps live on the uniform label grid `x_ij = (2πi/M, 2πj/M)` (index
//! `i·M + j`). Positions are stored as continuous lifts to ℝ², so winding
//! around the torus is kept and `Φ(x) − x` is a periodic displacement.

mod interp;
mod presets;

pub use interp::{interpolate, Interpolation};
pub use presets::{FnMap, LabelMap, MapPreset};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::spectral::{FieldEvaluator, SpectralField};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("velocity path does not cover [{0}, {1}]")]
    PathGap(f64, f64),
    #[error("time {time} is not on the flow grid of spacing {dt}")]
    OffGrid { time: f64, dt: f64 },
    #[error("flow step {flow_dt} must divide the path spacing {path_dt}")]
    StepMismatch { flow_dt: f64, path_dt: f64 },
    #[error("state at t = {state} and inverse at t = {inverse} do not match")]
    TimeMismatch { state: f64, inverse: f64 },
    #[error("map is not volume preserving: |det Dφ − 1| = {0:e}")]
    NotVolumePreserving(f64),
    #[error("grid resolution mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),
}

/// Velocity fields at `start + k·dt`, linear in time between nodes.
#[derive(Debug, Clone)]
pub struct VelocityPath {
    start: f64,
    dt: f64,
    fields: Vec<SpectralField>,
}

const GRID_EPS: f64 = 1e-9;

impl VelocityPath {
    pub fn new(start: f64, dt: f64, fields: Vec<SpectralField>) -> Self {
        assert!(dt > 0.0 && !fields.is_empty());
        Self { start, dt, fields }
    }

    /// A time-independent path on `[start, end]`.
    pub fn steady(field: SpectralField, start: f64, end: f64, dt: f64) -> Self {
        let steps = ((end - start) / dt).round() as usize;
        Self::new(start, dt, vec![field; steps + 1])
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.start + (self.fields.len() - 1) as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn fields(&self) -> &[SpectralField] {
        &self.fields
    }

    fn covers(&self, t0: f64, t1: f64) -> Result<(), FlowError> {
        let (lo, hi) = (t0.min(t1), t0.max(t1));
        let tol = GRID_EPS * self.dt;
        if lo < self.start - tol || hi > self.end() + tol {
            let gap = if lo < self.start - tol { (lo, self.start) } else { (self.end(), hi) };
            return Err(FlowError::PathGap(gap.0, gap.1));
        }
        Ok(())
    }

    /// The field at time `start + (node + frac)·dt`, `0 ≤ frac ≤ 1`.
    fn field_at(&self, node: usize, frac: f64) -> SpectralField {
        if frac == 0.0 || node + 1 >= self.fields.len() {
            return self.fields[node.min(self.fields.len() - 1)].clone();
        }
        if frac == 1.0 {
            return self.fields[node + 1].clone();
        }
        let mut f = self.fields[node].scaled(1.0 - frac);
        f.axpy(frac, &self.fields[node + 1]);
        f
    }

    /// The field at an arbitrary covered time.
    pub fn at_time(&self, t: f64) -> Result<SpectralField, FlowError> {
        self.covers(t, t)?;
        let x = ((t - self.start) / self.dt).max(0.0);
        let node = (x.floor() as usize).min(self.fields.len() - 1);
        let frac = (x - node as f64).clamp(0.0, 1.0);
        if frac < GRID_EPS {
            return Ok(self.field_at(node, 0.0));
        }
        Ok(self.field_at(node, frac))
    }
}

/// Time grid of one flow integration: `substeps` RK4 steps per path interval.
struct FlowClock {
    substeps: usize,
}

impl FlowClock {
    fn new(path: &VelocityPath, dt: f64) -> Result<Self, FlowError> {
        let ratio = path.dt / dt;
        let substeps = ratio.round();
        if substeps < 1.0 || (ratio - substeps).abs() > GRID_EPS * ratio {
            return Err(FlowError::StepMismatch { flow_dt: dt, path_dt: path.dt });
        }
        Ok(Self { substeps: substeps as usize })
    }

    /// Flow-step index of `t`.
    fn index(&self, path: &VelocityPath, t: f64) -> Result<usize, FlowError> {
        let x = (t - path.start) / path.dt * self.substeps as f64;
        let k = x.round();
        if (x - k).abs() > GRID_EPS * x.abs().max(1.0) || k < 0.0 {
            return Err(FlowError::OffGrid { time: t, dt: path.dt / self.substeps as f64 });
        }
        Ok(k as usize)
    }

    /// Velocity evaluator at half-step index `2k + h` (`h` ∈ {0, 1}).
    fn evaluator(&self, path: &VelocityPath, half_index: usize) -> FieldEvaluator {
        let denom = 2 * self.substeps;
        let node = half_index / denom;
        let frac = (half_index % denom) as f64 / denom as f64;
        FieldEvaluator::new(&path.field_at(node, frac))
    }
}

/// RK4 integration of `dX/dt = u(t, X)` for every point, from `t0` to `t1` (either direction).
pub fn advance_points(
    points: &mut [[f64; 2]],
    path: &VelocityPath,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<(), FlowError> {
    path.covers(t0, t1)?;
    let clock = FlowClock::new(path, dt)?;
    let (k0, k1) = (clock.index(path, t0)?, clock.index(path, t1)?);
    if k0 == k1 {
        return Ok(());
    }
    let forward = k1 > k0;
    let h = if forward { dt } else { -dt };
    let mut k = k0;
    let mut start_eval = clock.evaluator(path, 2 * k);
    while k != k1 {
        let next = if forward { k + 1 } else { k - 1 };
        let mid_eval = clock.evaluator(path, k + next);
        let end_eval = clock.evaluator(path, 2 * next);
        rk4_step(points, h, &start_eval, &mid_eval, &end_eval);
        start_eval = end_eval;
        k = next;
    }
    Ok(())
}

fn rk4_step(points: &mut [[f64; 2]], h: f64, e0: &FieldEvaluator, emid: &FieldEvaluator, e1: &FieldEvaluator) {
    let shifted = |base: &[[f64; 2]], slope: &[[f64; 2]], c: f64| -> Vec<[f64; 2]> {
        base.iter().zip(slope).map(|(p, s)| [p[0] + c * s[0], p[1] + c * s[1]]).collect()
    };
    let k1 = e0.evaluate(points);
    let k2 = emid.evaluate(&shifted(points, &k1, 0.5 * h));
    let k3 = emid.evaluate(&shifted(points, &k2, 0.5 * h));
    let k4 = e1.evaluate(&shifted(points, &k3, h));
    points.par_iter_mut().enumerate().for_each(|(i, p)| {
        for c in 0..2 {
            p[c] += h / 6.0 * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
        }
    });
}

/// Particle positions `Φ(t)(x_ij)` on the uniform label grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMap {
    m: usize,
    time: f64,
    positions: Vec<[f64; 2]>,
}

pub fn grid_points(m: usize) -> Vec<[f64; 2]> {
    let h = std::f64::consts::TAU / m as f64;
    (0..m * m).map(|k| [(k / m) as f64 * h, (k % m) as f64 * h]).collect()
}

/// Stencils for centered first derivatives of order 2, 4, 6, 8.
fn central_stencil(order: usize) -> &'static [f64] {
    match order {
        2 => &[0.5],
        4 => &[2.0 / 3.0, -1.0 / 12.0],
        6 => &[3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
        8 => &[4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0],
        _ => panic!("unsupported stencil order {order}"),
    }
}

/// Order of the centered differences used for `DΦ`.
pub const DEFAULT_JACOBIAN_ORDER: usize = 8;

impl FlowMap {
    pub fn identity(m: usize) -> Self {
        Self { m, time: 0.0, positions: grid_points(m) }
    }

    /// `Φ = φ` at time `time`.
    pub fn from_map(m: usize, time: f64, map: &dyn LabelMap) -> Self {
        Self { m, time, positions: grid_points(m).into_iter().map(|x| map.apply(x)).collect() }
    }

    pub fn grid_resolution(&self) -> usize {
        self.m
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    /// `Φ(x) − x` at every label.
    pub fn displacement(&self) -> Vec<[f64; 2]> {
        self.positions.iter().zip(grid_points(self.m)).map(|(p, x)| [p[0] - x[0], p[1] - x[1]]).collect()
    }

    /// `det DΦ` at every label, from centered differences of the periodic displacement.
    pub fn jacobian_determinants(&self, order: usize) -> Vec<f64> {
        let m = self.m as i64;
        let h = std::f64::consts::TAU / self.m as f64;
        let d = self.displacement();
        let stencil = central_stencil(order);
        let at = |i: i64, j: i64| d[(i.rem_euclid(m) * m + j.rem_euclid(m)) as usize];
        (0..m * m)
            .map(|idx| {
                let (i, j) = (idx / m, idx % m);
                let mut dx = [0.0; 2];
                let mut dy = [0.0; 2];
                for (s, &c) in stencil.iter().enumerate() {
                    let o = s as i64 + 1;
                    let (xp, xm, yp, ym) = (at(i + o, j), at(i - o, j), at(i, j + o), at(i, j - o));
                    for comp in 0..2 {
                        dx[comp] += c * (xp[comp] - xm[comp]);
                        dy[comp] += c * (yp[comp] - ym[comp]);
                    }
                }
                let (a, b) = (1.0 + dx[0] / h, dy[0] / h);
                let (cc, dd) = (dx[1] / h, 1.0 + dy[1] / h);
                a * dd - b * cc
            })
            .collect()
    }

    /// `max |det DΦ − 1|`.
    pub fn volume_defect(&self, order: usize) -> f64 {
        self.jacobian_determinants(order).iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Advances `flow` (at its own time) to `t1` along `path`.
pub fn advance_flow(flow: &FlowMap, path: &VelocityPath, t1: f64, dt: f64) -> Result<FlowMap, FlowError> {
    let mut positions = flow.positions.clone();
    advance_points(&mut positions, path, flow.time, t1, dt)?;
    Ok(FlowMap { m: flow.m, time: t1, positions })
}

/// `Φ(t)⁻¹` on the label grid by backward characteristics: each grid point is
/// carried from time `t` back to `path.start()`.
pub fn invert_flow(path: &VelocityPath, t: f64, m: usize, dt: f64) -> Result<FlowMap, FlowError> {
    let mut positions = grid_points(m);
    advance_points(&mut positions, path, t, path.start(), dt)?;
    Ok(FlowMap { m, time: t, positions })
}

/// `sup_x |Φ(t)(Φ(t)⁻¹(x)) − x|`, carrying the inverse points forward again.
pub fn composition_residual(path: &VelocityPath, inverse: &FlowMap, dt: f64) -> Result<f64, FlowError> {
    let mut positions = inverse.positions.clone();
    advance_points(&mut positions, path, path.start(), inverse.time, dt)?;
    Ok(positions
        .iter()
        .zip(grid_points(inverse.m))
        .map(|(p, x)| (p[0] - x[0]).hypot(p[1] - x[1]))
        .fold(0.0, f64::max))
}

/// Flow map with the Lagrangian velocity `η(x) = u(t, Φ(x))`, a tangent vector
/// attached at the base point `Φ(x)`.
#[derive(Debug, Clone)]
pub struct LagrangianState {
    pub flow: FlowMap,
    pub eta: Vec<[f64; 2]>,
}

impl LagrangianState {
    pub fn new(flow: FlowMap, path: &VelocityPath) -> Result<Self, FlowError> {
        let u = path.at_time(flow.time)?;
        let eta = FieldEvaluator::new(&u).evaluate(&flow.positions);
        debug_assert_eq!(eta.len(), flow.positions.len());
        Ok(Self { flow, eta })
    }

    pub fn time(&self) -> f64 {
        self.flow.time
    }

    /// Base point of `η(x)`; equal to `Φ(x)` by construction.
    pub fn base_point(&self, idx: usize) -> [f64; 2] {
        self.flow.positions[idx]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Reconstruction {
    /// Interpolate `η` over the label grid at `Φ⁻¹(x)`.
    Interpolate(Interpolation),
    /// Evaluate `u(t)` at `Φ(Φ⁻¹(x))`, carrying the inverse points forward (self-test).
    Reevaluate,
}

/// `u(t) = η(t)∘Φ(t)⁻¹` on the label grid.
pub fn reconstruct_velocity(
    state: &LagrangianState,
    inverse: &FlowMap,
    method: Reconstruction,
    path: &VelocityPath,
    dt: f64,
) -> Result<Vec<[f64; 2]>, FlowError> {
    if (state.time() - inverse.time).abs() > GRID_EPS * path.dt {
        return Err(FlowError::TimeMismatch { state: state.time(), inverse: inverse.time });
    }
    match method {
        Reconstruction::Interpolate(kind) => {
            if state.flow.m != inverse.m {
                return Err(FlowError::GridMismatch(state.flow.m, inverse.m));
            }
            let m = state.flow.m;
            Ok(inverse.positions.par_iter().map(|&p| interpolate(kind, m, &state.eta, p)).collect())
        }
        Reconstruction::Reevaluate => {
            let mut positions = inverse.positions.clone();
            advance_points(&mut positions, path, path.start(), inverse.time, dt)?;
            Ok(FieldEvaluator::new(&path.at_time(inverse.time)?).evaluate(&positions))
        }
    }
}

/// `‖û − u‖_{L²} / ‖u‖_{L²}` over the `m × m` grid, against the Eulerian field.
pub fn reconstruction_mismatch(reconstructed: &[[f64; 2]], u: &SpectralField, m: usize) -> f64 {
    let grid = u.to_grid(m);
    let (mut num, mut den) = (0.0, 0.0);
    for (i, r) in reconstructed.iter().enumerate() {
        for c in 0..2 {
            num += (r[c] - grid[c][i]).powi(2);
            den += grid[c][i].powi(2);
        }
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Deviation from right-invariance at one checkpoint.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InvarianceSample {
    pub time: f64,
    pub deviation: f64,
}

/// Compares `η_t∘φ` (from the flow started at the identity, interpolated at the
/// labels `φ(x)`) against `η_t^{∘φ}` (the flow started at `φ`) along one velocity path.
pub fn right_invariance_check(
    path: &VelocityPath,
    phi: &dyn LabelMap,
    checkpoints: &[f64],
    m: usize,
    dt: f64,
    interp: Interpolation,
) -> Result<Vec<InvarianceSample>, FlowError> {
    let defect = presets::volume_defect(phi, m);
    if defect > presets::VOLUME_TOL {
        return Err(FlowError::NotVolumePreserving(defect));
    }
    let labels: Vec<[f64; 2]> = grid_points(m).into_iter().map(|x| phi.apply(x)).collect();
    let mut plain = FlowMap::identity(m);
    plain.time = path.start();
    let mut relabeled = FlowMap { m, time: path.start(), positions: labels.clone() };
    let mut out = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        plain = advance_flow(&plain, path, t, dt)?;
        relabeled = advance_flow(&relabeled, path, t, dt)?;
        let u = FieldEvaluator::new(&path.at_time(t)?);
        let eta = u.evaluate(&plain.positions);
        let eta_phi = u.evaluate(&relabeled.positions);
        let deviation = labels
            .iter()
            .zip(&eta_phi)
            .map(|(&l, e)| {
                let v = interpolate(interp, m, &eta, l);
                (v[0] - e[0]).hypot(v[1] - e[1])
            })
            .fold(0.0, f64::max);
        out.push(InvarianceSample { time: t, deviation });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eulerian::InitialCondition;

    fn shear_path(t_end: f64, dt: f64) -> VelocityPath {
        let u = InitialCondition::Shear { amplitude: 1.0 }.build(8).unwrap();
        VelocityPath::steady(u, 0.0, t_end, dt)
    }

    #[test]
    fn zero_velocity_keeps_identity() {
        let path = VelocityPath::steady(SpectralField::zeros(6, 2), 0.0, 1.0, 0.1);
        let flow = advance_flow(&FlowMap::identity(8), &path, 1.0, 0.1).unwrap();
        assert_eq!(flow.positions(), FlowMap::identity(8).positions());
        let inv = invert_flow(&path, 1.0, 8, 0.1).unwrap();
        assert_eq!(inv.positions(), FlowMap::identity(8).positions());
    }

    #[test]
    fn constant_velocity_translates_exactly() {
        let mut u = SpectralField::zeros(4, 2);
        u.set_mode(0, 0, 0, num_complex::Complex64::new(0.3, 0.0));
        u.set_mode(1, 0, 0, num_complex::Complex64::new(-1.1, 0.0));
        let path = VelocityPath::steady(u, 0.0, 1.0, 0.05);
        let flow = advance_flow(&FlowMap::identity(8), &path, 1.0, 0.05).unwrap();
        for (p, x) in flow.positions().iter().zip(grid_points(8)) {
            assert!((p[0] - x[0] - 0.3).abs() < 1e-13);
            assert!((p[1] - x[1] + 1.1).abs() < 1e-13);
        }
    }

    #[test]
    fn shear_characteristics_fourth_order() {
        let err = |dt: f64| {
            let path = shear_path(1.0, dt);
            let flow = advance_flow(&FlowMap::identity(8), &path, 1.0, dt).unwrap();
            flow.positions()
                .iter()
                .zip(grid_points(8))
                .map(|(p, x)| (p[0] - (x[0] + x[1].cos())).abs().max((p[1] - x[1]).abs()))
                .fold(0.0, f64::max)
        };
        // Steady shear is exact for any RK scheme: x-velocity is constant along the path.
        assert!(err(0.1) < 1e-13);
        let inv = invert_flow(&shear_path(1.0, 0.1), 1.0, 8, 0.1).unwrap();
        for (p, x) in inv.positions().iter().zip(grid_points(8)) {
            assert!((p[0] - (x[0] - x[1].cos())).abs() < 1e-13);
        }
    }

    #[test]
    fn gap_and_grid_errors() {
        let path = shear_path(1.0, 0.1);
        assert!(matches!(advance_flow(&FlowMap::identity(4), &path, 1.5, 0.1), Err(FlowError::PathGap(..))));
        assert!(matches!(advance_flow(&FlowMap::identity(4), &path, 0.5, 0.03), Err(FlowError::StepMismatch { .. })));
        assert!(matches!(advance_flow(&FlowMap::identity(4), &path, 0.55, 0.1), Err(FlowError::OffGrid { .. })));
    }

    #[test]
    fn group_property_is_exact() {
        let u0 = InitialCondition::RandomSmooth { k_max: 3, energy: 0.5, seed: 4 }.build(6).unwrap();
        let u1 = InitialCondition::RandomSmooth { k_max: 3, energy: 0.5, seed: 5 }.build(6).unwrap();
        let fields: Vec<_> = (0..=10).map(|k| { let mut f = u0.scaled(1.0 - k as f64 / 10.0); f.axpy(k as f64 / 10.0, &u1); f }).collect();
        let path = VelocityPath::new(0.0, 0.05, fields);
        let id = FlowMap::identity(8);
        let direct = advance_flow(&id, &path, 0.5, 0.025).unwrap();
        let half = advance_flow(&id, &path, 0.2, 0.025).unwrap();
        let split = advance_flow(&half, &path, 0.5, 0.025).unwrap();
        for (a, b) in direct.positions().iter().zip(split.positions()) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_map_has_unit_jacobian() {
        let id = FlowMap::identity(16);
        assert!(id.volume_defect(8) < 1e-14);
        assert!(id.volume_defect(2) < 1e-14);
    }

    #[test]
    fn reconstruction_at_time_zero_is_exact() {
        let u = InitialCondition::RandomSmooth { k_max: 3, energy: 0.5, seed: 4 }.build(6).unwrap();
        let path = VelocityPath::steady(u.clone(), 0.0, 0.2, 0.05);
        let state = LagrangianState::new(FlowMap::identity(16), &path).unwrap();
        let inv = invert_flow(&path, 0.0, 16, 0.05).unwrap();
        let r = reconstruct_velocity(&state, &inv, Reconstruction::Interpolate(Interpolation::Cubic), &path, 0.05).unwrap();
        assert!(reconstruction_mismatch(&r, &u, 16) < 1e-14);
        for i in [0, 7, 100] {
            assert_eq!(state.base_point(i), state.flow.positions()[i]);
        }
    }

    #[test]
    fn reconstruction_time_mismatch_rejected() {
        let path = shear_path(0.4, 0.1);
        let state = LagrangianState::new(FlowMap::identity(8), &path).unwrap();
        let inv = invert_flow(&path, 0.3, 8, 0.1).unwrap();
        assert!(matches!(
            reconstruct_velocity(&state, &inv, Reconstruction::Reevaluate, &path, 0.1),
            Err(FlowError::TimeMismatch { .. })
        ));
    }

    #[test]
    fn identity_relabeling_is_exactly_invariant() {
        let path = shear_path(0.2, 0.05);
        let out = right_invariance_check(&path, &MapPreset::Identity, &[0.1, 0.2], 8, 0.05, Interpolation::Cubic).unwrap();
        assert!(out.iter().all(|s| s.deviation == 0.0));
    }

    #[test]
    fn non_volume_preserving_map_rejected() {
        let path = shear_path(0.2, 0.05);
        let squeeze = FnMap(|p| [p[0] + 0.1 * p[0].sin(), p[1]]);
        assert!(matches!(
            right_invariance_check(&path, &squeeze, &[0.1], 8, 0.05, Interpolation::Cubic),
            Err(FlowError::NotVolumePreserving(_))
        ));
    }

    #[test]
    fn shear_reconstruction_matches_closed_form() {
        let path = shear_path(0.5, 0.05);
        let flow = advance_flow(&FlowMap::identity(64), &path, 0.5, 0.05).unwrap();
        let state = LagrangianState::new(flow, &path).unwrap();
        let inv = invert_flow(&path, 0.5, 64, 0.05).unwrap();
        let u = path.at_time(0.5).unwrap();
        for method in [Reconstruction::Interpolate(Interpolation::Bilinear), Reconstruction::Interpolate(Interpolation::Cubic), Reconstruction::Reevaluate] {
            let r = reconstruct_velocity(&state, &inv, method, &path, 0.05).unwrap();
            assert!(reconstruction_mismatch(&r, &u, 64) <= 1e-6);
        }
    }

    #[test]
    fn random_short_time_inverse_composes_to_identity() {
        let u0 = InitialCondition::RandomSmooth { k_max: 4, energy: 0.5, seed: 11 }.build(8).unwrap();
        let u1 = InitialCondition::RandomSmooth { k_max: 4, energy: 0.5, seed: 12 }.build(8).unwrap();
        let fields: Vec<_> = (0..=100).map(|k| { let mut f = u0.scaled(1.0 - k as f64 / 100.0); f.axpy(k as f64 / 100.0, &u1); f }).collect();
        let path = VelocityPath::new(0.0, 1e-3, fields);
        let inv = invert_flow(&path, 0.1, 64, 1e-3).unwrap();
        assert!(composition_residual(&path, &inv, 1e-3).unwrap() <= 1e-6);
        let flow = advance_flow(&FlowMap::identity(64), &path, 0.1, 1e-3).unwrap();
        assert!(flow.volume_defect(DEFAULT_JACOBIAN_ORDER) <= 1e-4);
    }

    #[test]
    fn grid_translation_is_invariant() {
        let u = InitialCondition::RandomSmooth { k_max: 3, energy: 0.5, seed: 4 }.build(6).unwrap();
        let path = VelocityPath::steady(u, 0.0, 0.2, 0.02);
        let phi = MapPreset::Translation { shift: [std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_4] };
        let out = right_invariance_check(&path, &phi, &[0.1, 0.2], 16, 0.02, Interpolation::Cubic).unwrap();
        assert!(out.iter().all(|s| s.deviation <= 1e-6), "{out:?}");
    }

    #[test]
    fn shear_relabeling_converges() {
        let u = InitialCondition::RandomSmooth { k_max: 3, energy: 0.5, seed: 4 }.build(6).unwrap();
        let path = VelocityPath::steady(u, 0.0, 0.2, 0.02);
        let phi = MapPreset::Shear { amplitude: 0.3 };
        let dev = |m| right_invariance_check(&path, &phi, &[0.2], m, 0.02, Interpolation::Cubic).unwrap()[0].deviation;
        let (a, b) = (dev(16), dev(32));
        assert!(a / b >= 2.0, "{a} {b}");
    }
}
