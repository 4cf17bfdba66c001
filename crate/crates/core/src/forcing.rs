//! Finite-rank divergence-free Wiener process on the torus.
//!
//! For every wavenumber `k` in the mode set `J` (one representative of each
//! pair `±k`) the noise carries two L²-orthonormal basis fields
//!
//! ```text
//! e_{k,cos} = (k⊥/|k|) √2 cos(k·x),    e_{k,sin} = (k⊥/|k|) √2 sin(k·x),    k⊥ = (−k₂, k₁),
//! ```
//!
//! both with variance `q_k` per unit time, so `W = Σ_j √q_j β_j e_j`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::rng::BrownianDriver;
use crate::spectral::{SobolevIndex, SpectralField};

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("noise mode {0:?} is the mean mode")]
    MeanMode((i64, i64)),
    #[error("noise mode {0:?} appears twice (as k or −k)")]
    DuplicateMode((i64, i64)),
    #[error("noise amplitude for mode {k:?} must be finite and nonnegative, got {q}")]
    InvalidAmplitude { k: (i64, i64), q: f64 },
    #[error("noise mode {k:?} exceeds field resolution N = {n}")]
    ModeOutsideResolution { k: (i64, i64), n: usize },
}

/// Cosine or sine partner of a noise wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseMode {
    pub k: (i64, i64),
    /// Variance per unit time of each of the two basis elements of `k`.
    pub q: f64,
}

/// One element `e_j` of the noise basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisElement {
    pub k: (i64, i64),
    pub phase: Phase,
    pub q: f64,
}

impl BasisElement {
    /// Stable RNG address of this element, independent of the mode list order.
    pub fn address(&self) -> u64 {
        let (k1, k2) = ((self.k.0 + 1024) as u64, (self.k.1 + 1024) as u64);
        (k1 * 2048 + k2) * 2 + if self.phase == Phase::Cos { 0 } else { 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    modes: Vec<NoiseMode>,
    r: SobolevIndex,
}

fn canonical(k: (i64, i64)) -> (i64, i64) {
    if k.0 > 0 || (k.0 == 0 && k.1 > 0) {
        k
    } else {
        (-k.0, -k.1)
    }
}

impl NoiseModel {
    /// Explicit mode list; each `k` is replaced by its half-plane representative.
    pub fn new(modes: Vec<NoiseMode>, r: SobolevIndex) -> Result<Self, NoiseError> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::with_capacity(modes.len());
        for m in modes {
            if m.k == (0, 0) {
                return Err(NoiseError::MeanMode(m.k));
            }
            if !(m.q.is_finite() && m.q >= 0.0) {
                return Err(NoiseError::InvalidAmplitude { k: m.k, q: m.q });
            }
            let k = canonical(m.k);
            if !seen.insert(k) {
                return Err(NoiseError::DuplicateMode(m.k));
            }
            out.push(NoiseMode { k, q: m.q });
        }
        Ok(Self { modes: out, r })
    }

    /// `q_k = amplitude · |k|^{−2α}` on `0 < |k|∞ ≤ k_max`.
    pub fn power_law(k_max: usize, alpha: f64, amplitude: f64, r: SobolevIndex) -> Self {
        let km = k_max as i64;
        let mut modes = Vec::new();
        for k1 in 0..=km {
            for k2 in -km..=km {
                if k1 == 0 && k2 <= 0 {
                    continue;
                }
                let kk = (k1 * k1 + k2 * k2) as f64;
                modes.push(NoiseMode { k: (k1, k2), q: amplitude * kk.powf(-alpha) });
            }
        }
        Self { modes, r }
    }

    pub fn single(k: (i64, i64), q: f64) -> Result<Self, NoiseError> {
        Self::new(vec![NoiseMode { k, q }], SobolevIndex::new(0.0).unwrap())
    }

    pub fn empty() -> Self {
        Self { modes: Vec::new(), r: SobolevIndex::new(0.0).unwrap() }
    }

    pub fn modes(&self) -> &[NoiseMode] {
        &self.modes
    }

    pub fn sobolev_index(&self) -> SobolevIndex {
        self.r
    }

    pub fn with_sobolev_index(mut self, r: SobolevIndex) -> Self {
        self.r = r;
        self
    }

    /// Multiplies every `q_j` by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let modes = self.modes.iter().map(|m| NoiseMode { k: m.k, q: m.q * factor }).collect();
        Self { modes, r: self.r }
    }

    /// Largest `|k|∞` in the mode set.
    pub fn max_wavenumber(&self) -> usize {
        self.modes.iter().map(|m| m.k.0.abs().max(m.k.1.abs()) as usize).max().unwrap_or(0)
    }

    pub fn basis(&self) -> impl Iterator<Item = BasisElement> + '_ {
        self.modes.iter().flat_map(|m| {
            [Phase::Cos, Phase::Sin].into_iter().map(move |phase| BasisElement { k: m.k, phase, q: m.q })
        })
    }

    pub fn rank(&self) -> usize {
        2 * self.modes.len()
    }

    fn check_resolution(&self, n: usize) -> Result<(), NoiseError> {
        match self.modes.iter().find(|m| m.k.0.unsigned_abs() as usize > n || m.k.1.unsigned_abs() as usize > n) {
            Some(m) => Err(NoiseError::ModeOutsideResolution { k: m.k, n }),
            None => Ok(()),
        }
    }

    /// `Σ_j q_j` (both phases of every mode): the energy injection rate `tr Q`.
    pub fn trace_q(&self) -> f64 {
        self.basis().map(|e| e.q).sum()
    }
}

/// Adds `amplitude · e_j` to `field` at mode level.
fn add_basis(field: &mut SpectralField, e: &BasisElement, amplitude: f64) {
    let (k1, k2) = e.k;
    let norm = ((k1 * k1 + k2 * k2) as f64).sqrt();
    let dir = [-(k2 as f64) / norm, k1 as f64 / norm];
    let half = std::f64::consts::SQRT_2 / 2.0 * amplitude;
    let z = match e.phase {
        Phase::Cos => Complex64::new(half, 0.0),
        Phase::Sin => Complex64::new(0.0, -half),
    };
    for (c, d) in dir.iter().enumerate() {
        let cur = field.get(c, k1, k2);
        field.set_mode(c, k1, k2, cur + z * *d);
    }
}

/// The basis field `e_j` at resolution `n`.
pub fn basis_field(e: &BasisElement, n: usize) -> SpectralField {
    let mut f = SpectralField::zeros(n, 2);
    add_basis(&mut f, e, 1.0);
    f
}

/// `ΔW = Σ_j √q_j ΔB_j e_j` over step `step_index` of `driver`.
pub fn sample_increment(
    driver: &BrownianDriver,
    model: &NoiseModel,
    step_index: u64,
    n: usize,
) -> Result<SpectralField, NoiseError> {
    model.check_resolution(n)?;
    let mut field = SpectralField::zeros(n, 2);
    for e in model.basis() {
        if e.q == 0.0 {
            continue;
        }
        let db = driver.increment(step_index, e.address());
        add_basis(&mut field, &e, e.q.sqrt() * db);
    }
    Ok(field)
}

/// `tr_ℋ Λ = Σ_j Λ(√q_j e_j, √q_j e_j)` over the RKHS orthonormal basis.
pub fn trace_bilinear<T, F>(model: &NoiseModel, n: usize, zero: T, lambda: F) -> Result<T, NoiseError>
where
    T: std::ops::AddAssign,
    F: Fn(&SpectralField, &SpectralField) -> T,
{
    model.check_resolution(n)?;
    let mut acc = zero;
    for e in model.basis() {
        let mut f = SpectralField::zeros(n, 2);
        add_basis(&mut f, &e, e.q.sqrt());
        acc += lambda(&f, &f);
    }
    Ok(acc)
}

/// `Σ_j (1 + |k_j|²)^r q_j`, the H^r intensity of the noise.
pub fn hr_trace(model: &NoiseModel) -> f64 {
    model.basis().map(|e| model.r.weight(e.k.0, e.k.1) * e.q).sum()
}
