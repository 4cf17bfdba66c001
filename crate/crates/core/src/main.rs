use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stoch_euler::harness::{self, acceptance, now, parse_config, persist, Experiment, RunConfig, RunManifest, SdeExperiment};
use stoch_euler::lagrangian::MapPreset;

/// Overrides the default output root `runs`.
const OUT_ENV: &str = "STOCH_EULER_OUT";

#[derive(Parser)]
#[command(name = "stoch-euler", version, about = "Stochastic Euler equations on the 2-torus and an SDE-on-manifolds lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `output`, else a fresh directory under the output root).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Phi {
    Identity,
    Translation,
    Shear,
}

#[derive(Clone, Copy, ValueEnum)]
enum Lab {
    Ladder,
    Chart,
    Ito,
    Variational,
    Glue,
}

#[derive(Subcommand)]
enum Command {
    /// Eulerian run: norms, announcing stages, snapshots.
    RunEulerian(Common),
    /// Flow map, inverse and reconstruction diagnostics.
    RunFlow(Common),
    /// Eulerian/Lagrangian equivalence checks.
    CheckEquivalence(Common),
    /// Right-invariance under a volume-preserving relabeling.
    CheckInvariance {
        #[command(flatten)]
        common: Common,
        /// Preset kind; parameters come from `flow.phi` when it has the same kind.
        #[arg(long, value_enum)]
        phi: Option<Phi>,
    },
    /// No-loss-no-gain refinement diagnostic.
    CheckNoloss(Common),
    /// Finite-dimensional SDE experiments.
    SdeLab {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        experiment: Option<Lab>,
    },
    /// Acceptance suite: `taylor-green`, `all-fast`, `all` or ids like `A1,A7`.
    Accept {
        #[arg(long, default_value = "all-fast")]
        selection: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

fn fresh_dir(command: &str) -> PathBuf {
    let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    output_root().join(format!("{command}-{stamp}"))
}

fn choose_phi(cfg: &RunConfig, phi: Option<Phi>) -> MapPreset {
    let m = cfg.flow.m as f64;
    match (phi, cfg.flow.phi) {
        (None, p) => p,
        (Some(Phi::Identity), _) => MapPreset::Identity,
        (Some(Phi::Translation), p @ MapPreset::Translation { .. }) => p,
        (Some(Phi::Translation), _) => {
            let h = std::f64::consts::TAU / m;
            MapPreset::Translation { shift: [h * (m / 4.0).floor(), h * (m / 8.0).floor()] }
        }
        (Some(Phi::Shear), p @ MapPreset::Shear { .. }) => p,
        (Some(Phi::Shear), _) => MapPreset::Shear { amplitude: 0.3 },
    }
}

fn lab(l: Lab) -> SdeExperiment {
    match l {
        Lab::Ladder => SdeExperiment::Ladder,
        Lab::Chart => SdeExperiment::Chart,
        Lab::Ito => SdeExperiment::Ito,
        Lab::Variational => SdeExperiment::Variational,
        Lab::Glue => SdeExperiment::Glue,
    }
}

fn run_configured(name: &str, experiment: Experiment, common: &Common, phi: Option<Phi>, sde: Option<Lab>) -> Result<bool, String> {
    let text = std::fs::read_to_string(&common.config).map_err(|e| format!("{}: {e}", common.config.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| format!("{}:\n  {}", common.config.display(), e.0.join("\n  ")))?;
    if cfg.experiment != experiment {
        eprintln!("note: config names experiment `{}`, running `{}`", cfg.experiment.name(), experiment.name());
        cfg.experiment = experiment;
    }
    let dir = common.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| fresh_dir(name));
    let started = now();
    let phi = (experiment == Experiment::Invariance).then(|| choose_phi(&cfg, phi));
    let outputs = harness::run_experiment(&cfg, phi, sde.map(lab)).map_err(|e| e.to_string())?;
    let manifest = RunManifest::new(name, cfg.to_toml(), started, &outputs);
    finish(&dir, &manifest, || persist(&dir, &outputs, &manifest))
}

fn finish<F>(dir: &Path, manifest: &RunManifest, write: F) -> Result<bool, String>
where
    F: FnOnce() -> std::io::Result<PathBuf>,
{
    let path = write().map_err(|e| format!("{}: {e}", dir.display()))?;
    for c in &manifest.checks {
        println!("{}", c.summary_line());
    }
    println!("manifest: {}", path.display());
    Ok(manifest.all_passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RunEulerian(c) => run_configured("run-eulerian", Experiment::Eulerian, c, None, None),
        Command::RunFlow(c) => run_configured("run-flow", Experiment::Flow, c, None, None),
        Command::CheckEquivalence(c) => run_configured("check-equivalence", Experiment::Equivalence, c, None, None),
        Command::CheckInvariance { common, phi } => run_configured("check-invariance", Experiment::Invariance, common, *phi, None),
        Command::CheckNoloss(c) => run_configured("check-noloss", Experiment::Noloss, c, None, None),
        Command::SdeLab { common, experiment } => run_configured("sde-lab", Experiment::SdeLab, common, None, *experiment),
        Command::Accept { selection, out } => {
            let dir = out.clone().unwrap_or_else(|| fresh_dir("accept"));
            acceptance::run_acceptance_suite(selection, &dir)
                .map_err(|e| e.to_string())
                .and_then(|m| finish(&dir, &m, || Ok(dir.join(harness::MANIFEST_NAME))))
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
