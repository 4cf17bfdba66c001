//! Experiment harness: configuration, experiment drivers, outputs and the
//! acceptance suite.

pub mod acceptance;
mod config;
mod flows;
mod output;
mod sdelab;

use std::io;

use thiserror::Error;

use crate::eulerian::EulerianError;
use crate::forcing::NoiseError;
use crate::lagrangian::{FlowError, MapPreset};
use crate::manifold::SdeError;
use crate::spectral::SpectralError;

pub use config::{
    parse_config, ConfigErrors, EulerianSection, Experiment, FlowSection, ModeSpec, NoiseSpec, NolossSection, RunConfig,
    SdeExperiment, SdeSection,
};
pub use flows::{
    check_equivalence, check_invariance, check_noloss, coarsened, equivalence_checks, flow_diagnostics, invariance_study,
    noloss_study, run_eulerian, run_flow, FlowDiagRow, FlowSettings,
};
pub use output::{
    fmt_f64, now, persist, sha256_hex, Cell, Check, Csv, FileRecord, Metric, OutputFile, Outputs, RunManifest, MANIFEST_NAME,
};
pub use sdelab::*;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Eulerian(#[from] EulerianError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("configuration rejected: {0}")]
    Config(#[from] ConfigErrors),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Runs the experiment named in `cfg`. `phi` and `sde` override the config
/// sections for the invariance and SDE-lab experiments.
pub fn run_experiment(cfg: &RunConfig, phi: Option<MapPreset>, sde: Option<SdeExperiment>) -> Result<Outputs, HarnessError> {
    match cfg.experiment {
        Experiment::Eulerian => run_eulerian(cfg),
        Experiment::Flow => run_flow(cfg),
        Experiment::Equivalence => check_equivalence(cfg),
        Experiment::Invariance => check_invariance(cfg, phi.unwrap_or(cfg.flow.phi)),
        Experiment::Noloss => check_noloss(cfg),
        Experiment::SdeLab => sdelab::sde_lab(cfg, sde.unwrap_or(cfg.sde.experiment)),
    }
}
