//! Run configuration: strict TOML parsing that reports every problem at once.

use std::cell::RefCell;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use toml::{Table, Value};

use crate::eulerian::{EulerianRunConfig, InitialCondition};
use crate::forcing::{NoiseMode, NoiseModel};
use crate::lagrangian::{Interpolation, MapPreset};
use crate::spectral::{SobolevIndex, MIN_CONVECTIVE_RESOLUTION};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} configuration error(s):", self.0.len())?;
        for e in &self.0 {
            write!(f, "\n  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Eulerian,
    Flow,
    Equivalence,
    Invariance,
    Noloss,
    SdeLab,
}

impl Experiment {
    const NAMES: [(&'static str, Experiment); 6] = [
        ("eulerian", Experiment::Eulerian),
        ("flow", Experiment::Flow),
        ("equivalence", Experiment::Equivalence),
        ("invariance", Experiment::Invariance),
        ("noloss", Experiment::Noloss),
        ("sde-lab", Experiment::SdeLab),
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES.iter().find(|(_, e)| *e == self).unwrap().0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerianSection {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub s_track: Vec<f64>,
    pub s_cap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
    pub norm_stride: u64,
    pub noise_substeps: u64,
    pub path: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSpec {
    pub k: [i64; 2],
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseSpec {
    None,
    PowerLaw { k_max: usize, alpha: f64, amplitude: f64, r: f64 },
    Modes { modes: Vec<ModeSpec>, r: f64 },
}

impl NoiseSpec {
    pub fn build(&self) -> Result<NoiseModel, String> {
        let idx = |r: f64| SobolevIndex::new(r).map_err(|e| e.to_string());
        match self {
            NoiseSpec::None => Ok(NoiseModel::empty()),
            NoiseSpec::PowerLaw { k_max, alpha, amplitude, r } => Ok(NoiseModel::power_law(*k_max, *alpha, *amplitude, idx(*r)?)),
            NoiseSpec::Modes { modes, r } => NoiseModel::new(
                modes.iter().map(|m| NoiseMode { k: (m.k[0], m.k[1]), q: m.q }).collect(),
                idx(*r)?,
            )
            .map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSection {
    pub m: usize,
    /// Flow steps per Eulerian step.
    pub substeps: u64,
    pub interpolation: Interpolation,
    pub jacobian_order: usize,
    pub tol_vol: f64,
    pub tol_inv: f64,
    pub tol_rec: f64,
    pub tol_invariance: f64,
    pub phi: MapPreset,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NolossSection {
    pub refinements: Vec<usize>,
    /// Also run the `H^{s+1}`-divergent control datum (power-tail data only).
    pub control: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdeExperiment {
    Ladder,
    Chart,
    Ito,
    Variational,
    Glue,
}

impl SdeExperiment {
    pub const NAMES: [(&'static str, SdeExperiment); 5] = [
        ("ladder", SdeExperiment::Ladder),
        ("chart", SdeExperiment::Chart),
        ("ito", SdeExperiment::Ito),
        ("variational", SdeExperiment::Variational),
        ("glue", SdeExperiment::Glue),
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Self::NAMES.iter().find(|(n, _)| *n == s).map(|(_, e)| *e)
    }

    pub fn name(self) -> &'static str {
        Self::NAMES.iter().find(|(_, e)| *e == self).unwrap().0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdeSection {
    pub experiment: SdeExperiment,
    pub dt: f64,
    pub t_end: f64,
    pub paths: usize,
    /// Interval problem `dX = drift dt + sigma dB` on `(-1, 1)`.
    pub drift: f64,
    pub sigma: f64,
    pub x0: f64,
    pub bridge: bool,
    pub cutoff_stage: u32,
    /// Sphere problem: rotation vector and noise scale.
    pub rotation: [f64; 3],
    /// Rotation for the glue experiment; should carry paths across the equator.
    pub glue_rotation: [f64; 3],
    pub noise: f64,
    pub chart_radius: f64,
    pub switch_radius: f64,
    /// Allowed deviation between chart and embedded solutions.
    pub chart_tol: f64,
    pub epsilons: Vec<f64>,
    pub refinements: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub checkpoints: Vec<f64>,
    pub eulerian: EulerianSection,
    pub initial: InitialCondition,
    pub noise: NoiseSpec,
    pub flow: FlowSection,
    pub noloss: NolossSection,
    pub sde: SdeSection,
}

impl RunConfig {
    pub fn noise_model(&self) -> NoiseModel {
        self.noise.build().expect("validated at parse time")
    }

    pub fn eulerian_config(&self) -> EulerianRunConfig {
        let e = &self.eulerian;
        let s = |v: f64| SobolevIndex::new(v).expect("validated at parse time");
        EulerianRunConfig {
            n: e.n,
            dt: e.dt,
            t_end: e.t_end,
            s_track: e.s_track.iter().map(|&v| s(v)).collect(),
            s_cap: s(e.s_cap),
            cap: e.cap,
            norm_stride: e.norm_stride,
            noise: self.noise_model(),
            seed: self.seed,
            path: e.path,
            noise_substeps: e.noise_substeps,
            initial: self.initial.clone(),
            checkpoints: self.checkpoints.clone(),
        }
    }

    /// TOML echo; parses back to an equal configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

/// Errors shared by every section reader.
type Sink = RefCell<Vec<String>>;

struct Section<'e> {
    name: String,
    table: Table,
    errors: &'e Sink,
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

impl<'e> Section<'e> {
    fn new(name: &str, table: Table, errors: &'e Sink) -> Self {
        Self { name: name.to_string(), table, errors }
    }

    fn path(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.name)
        }
    }

    fn error(&self, msg: String) {
        self.errors.borrow_mut().push(msg);
    }

    fn mismatch(&self, key: &str, want: &str, got: &Value) {
        self.error(format!("`{}`: expected {want}, found {}", self.path(key), type_name(got)));
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.table.remove(key)
    }

    fn as_f64(&self, key: &str, v: &Value) -> Option<f64> {
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.mismatch(key, "a number", v);
                None
            }
        }
    }

    fn opt_f64(&mut self, key: &str) -> Option<f64> {
        let v = self.take(key)?;
        self.as_f64(key, &v)
    }

    fn f64(&mut self, key: &str, default: f64) -> f64 {
        self.opt_f64(key).unwrap_or(default)
    }

    fn required_f64(&mut self, key: &str) -> f64 {
        match self.take(key) {
            Some(v) => self.as_f64(key, &v).unwrap_or(f64::NAN),
            None => {
                self.error(format!("`{}`: missing required key", self.path(key)));
                f64::NAN
            }
        }
    }

    fn as_u64(&self, key: &str, v: &Value) -> Option<u64> {
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::Integer(i) => {
                self.error(format!("`{}`: must be nonnegative, got {i}", self.path(key)));
                None
            }
            _ => {
                self.mismatch(key, "an integer", v);
                None
            }
        }
    }

    fn u64(&mut self, key: &str, default: u64) -> u64 {
        match self.take(key) {
            Some(v) => self.as_u64(key, &v).unwrap_or(default),
            None => default,
        }
    }

    fn required_usize(&mut self, key: &str) -> usize {
        match self.take(key) {
            Some(v) => self.as_u64(key, &v).unwrap_or(0) as usize,
            None => {
                self.error(format!("`{}`: missing required key", self.path(key)));
                0
            }
        }
    }

    fn bool(&mut self, key: &str, default: bool) -> bool {
        match self.take(key) {
            Some(Value::Boolean(b)) => b,
            Some(v) => {
                self.mismatch(key, "a boolean", &v);
                default
            }
            None => default,
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.take(key)? {
            Value::String(s) => Some(s),
            v => {
                self.mismatch(key, "a string", &v);
                None
            }
        }
    }

    fn array(&mut self, key: &str) -> Option<Vec<Value>> {
        match self.take(key)? {
            Value::Array(a) => Some(a),
            v => {
                self.mismatch(key, "an array", &v);
                None
            }
        }
    }

    fn f64_list(&mut self, key: &str, default: Vec<f64>) -> Vec<f64> {
        match self.array(key) {
            Some(a) => a.iter().filter_map(|v| self.as_f64(key, v)).collect(),
            None => default,
        }
    }

    fn usize_list(&mut self, key: &str, default: Vec<usize>) -> Vec<usize> {
        match self.array(key) {
            Some(a) => a.iter().filter_map(|v| self.as_u64(key, v)).map(|v| v as usize).collect(),
            None => default,
        }
    }

    fn sub(&mut self, key: &str) -> Section<'e> {
        let table = match self.take(key) {
            Some(Value::Table(t)) => t,
            Some(v) => {
                self.mismatch(key, "a table", &v);
                Table::new()
            }
            None => Table::new(),
        };
        Section::new(&self.path(key), table, self.errors)
    }

    fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    fn check(&self, ok: bool, key: &str, msg: impl fmt::Display) {
        if !ok {
            self.error(format!("`{}`: {msg}", self.path(key)));
        }
    }

    fn positive(&self, key: &str, v: f64) {
        self.check(v > 0.0 && v.is_finite(), key, format!("must be positive, got {v}"));
    }

    fn finish(self) {
        for key in self.table.keys() {
            self.error(format!("unknown key `{}`", self.path(key)));
        }
    }
}

fn parse_eulerian(mut s: Section) -> EulerianSection {
    let n = s.required_usize("n");
    let dt = s.required_f64("dt");
    let t_end = s.required_f64("t_end");
    let out = EulerianSection {
        n,
        dt,
        t_end,
        s_track: s.f64_list("s_track", vec![0.0, 2.0, 3.0]),
        s_cap: s.f64("s_cap", 2.0),
        cap: s.opt_f64("cap"),
        norm_stride: s.u64("norm_stride", 10),
        noise_substeps: s.u64("noise_substeps", 1),
        path: s.u64("path", 0),
    };
    s.check(n >= MIN_CONVECTIVE_RESOLUTION, "n", format!("must be at least {MIN_CONVECTIVE_RESOLUTION}, got {n}"));
    s.positive("dt", dt);
    s.positive("t_end", t_end);
    if dt > 0.0 && t_end > 0.0 {
        let steps = t_end / dt;
        s.check((steps - steps.round()).abs() < 1e-9 * steps.max(1.0), "t_end", "must be a multiple of dt");
    }
    for &v in &out.s_track {
        s.check(v >= 0.0 && v.is_finite(), "s_track", format!("Sobolev indices must be nonnegative, got {v}"));
    }
    s.check(out.s_cap >= 0.0 && out.s_cap.is_finite(), "s_cap", format!("must be nonnegative, got {}", out.s_cap));
    if let Some(c) = out.cap {
        s.positive("cap", c);
    }
    s.check(out.norm_stride >= 1, "norm_stride", "must be at least 1");
    s.check(out.noise_substeps >= 1, "noise_substeps", "must be at least 1");
    s.finish();
    out
}

fn parse_initial(mut s: Section) -> InitialCondition {
    let preset = s.string("preset").unwrap_or_else(|| "taylor-green".into());
    let ic = match preset.as_str() {
        "taylor-green" => InitialCondition::TaylorGreen { amplitude: s.f64("amplitude", 1.0) },
        "shear" => InitialCondition::Shear { amplitude: s.f64("amplitude", 1.0) },
        "random-smooth" => {
            let k_max = s.u64("k_max", 4) as usize;
            s.check(k_max >= 1, "k_max", "must be at least 1");
            let energy = s.f64("energy", 0.5);
            s.check(energy >= 0.0 && energy.is_finite(), "energy", format!("must be nonnegative, got {energy}"));
            InitialCondition::RandomSmooth { k_max, energy, seed: s.u64("seed", 0) }
        }
        "power-tail" => {
            let exponent = s.required_f64("exponent");
            s.positive("exponent", exponent);
            InitialCondition::PowerTail { exponent, amplitude: s.f64("amplitude", 1.0), seed: s.u64("seed", 0) }
        }
        "zero" => InitialCondition::Zero,
        "snapshot" => match s.string("path") {
            Some(p) => InitialCondition::Snapshot { path: PathBuf::from(p) },
            None => {
                s.error(format!("`{}`: missing required key", s.path("path")));
                InitialCondition::Zero
            }
        },
        other => {
            s.error(format!("`{}`: unknown preset `{other}`", s.path("preset")));
            InitialCondition::Zero
        }
    };
    if let InitialCondition::TaylorGreen { amplitude } | InitialCondition::Shear { amplitude } | InitialCondition::PowerTail { amplitude, .. } = ic {
        s.check(amplitude.is_finite(), "amplitude", "must be finite");
    }
    s.finish();
    ic
}

fn parse_noise(mut s: Section) -> NoiseSpec {
    let kind = s.string("kind").unwrap_or_else(|| "power-law".into());
    let r = s.f64("r", 0.0);
    s.check(r >= 0.0 && r.is_finite(), "r", format!("must be nonnegative, got {r}"));
    let spec = match kind.as_str() {
        "none" => NoiseSpec::None,
        "power-law" => {
            let k_max = s.u64("k_max", 4) as usize;
            let alpha = s.f64("alpha", 3.0);
            let amplitude = s.f64("amplitude", 1.0);
            s.check(k_max >= 1, "k_max", "must be at least 1");
            s.check(alpha.is_finite(), "alpha", "must be finite");
            s.check(amplitude >= 0.0 && amplitude.is_finite(), "amplitude", format!("must be nonnegative, got {amplitude}"));
            NoiseSpec::PowerLaw { k_max, alpha, amplitude, r }
        }
        "modes" => {
            let mut modes = Vec::new();
            for (i, v) in s.array("modes").unwrap_or_default().into_iter().enumerate() {
                let key = format!("modes[{i}]");
                let Value::Table(t) = v else {
                    s.mismatch(&key, "a table", &v);
                    continue;
                };
                let mut m = Section::new(&s.path(&key), t, s.errors);
                let q = m.required_f64("q");
                let k: Vec<i64> = match m.array("k") {
                    Some(a) => a
                        .iter()
                        .filter_map(|v| match v {
                            Value::Integer(i) => Some(*i),
                            _ => {
                                m.mismatch("k", "an integer", v);
                                None
                            }
                        })
                        .collect(),
                    None => Vec::new(),
                };
                m.check(k.len() == 2, "k", "must have two integer entries");
                let k = if k.len() == 2 { [k[0], k[1]] } else { [0, 0] };
                m.finish();
                modes.push(ModeSpec { k, q });
            }
            NoiseSpec::Modes { modes, r }
        }
        other => {
            s.error(format!("`{}`: unknown kind `{other}`", s.path("kind")));
            NoiseSpec::None
        }
    };
    if let Err(e) = spec.build() {
        s.error(format!("`{}`: {e}", s.name));
    }
    s.finish();
    spec
}

fn parse_phi(mut s: Section) -> MapPreset {
    let kind = s.string("kind").unwrap_or_else(|| "translation".into());
    let phi = match kind.as_str() {
        "identity" => MapPreset::Identity,
        "translation" => {
            let shift = s.f64_list("shift", vec![std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_4]);
            s.check(shift.len() == 2, "shift", "must have two entries");
            MapPreset::Translation { shift: [shift.first().copied().unwrap_or(0.0), shift.get(1).copied().unwrap_or(0.0)] }
        }
        "shear" => MapPreset::Shear { amplitude: s.f64("amplitude", 0.3) },
        other => {
            s.error(format!("`{}`: unknown kind `{other}`", s.path("kind")));
            MapPreset::Identity
        }
    };
    s.finish();
    phi
}

fn parse_flow(mut s: Section) -> FlowSection {
    let phi = parse_phi(s.sub("phi"));
    let interpolation = match s.string("interpolation").as_deref() {
        None | Some("cubic") => Interpolation::Cubic,
        Some("bilinear") => Interpolation::Bilinear,
        Some(other) => {
            s.error(format!("`{}`: unknown interpolation `{other}`", s.path("interpolation")));
            Interpolation::Cubic
        }
    };
    let out = FlowSection {
        m: s.u64("m", 64) as usize,
        substeps: s.u64("substeps", 1),
        interpolation,
        jacobian_order: s.u64("jacobian_order", 8) as usize,
        tol_vol: s.f64("tol_vol", 1e-4),
        tol_inv: s.f64("tol_inv", 1e-5),
        tol_rec: s.f64("tol_rec", 1e-4),
        tol_invariance: s.f64("tol_invariance", 1e-6),
        phi,
    };
    s.check(out.m >= 8 && out.m % 2 == 0, "m", format!("must be even and at least 8, got {}", out.m));
    s.check(out.substeps >= 1, "substeps", "must be at least 1");
    s.check([2, 4, 6, 8].contains(&out.jacobian_order), "jacobian_order", "must be 2, 4, 6 or 8");
    for (k, v) in [("tol_vol", out.tol_vol), ("tol_inv", out.tol_inv), ("tol_rec", out.tol_rec), ("tol_invariance", out.tol_invariance)] {
        s.positive(k, v);
    }
    s.finish();
    out
}

fn parse_noloss(mut s: Section) -> NolossSection {
    let out = NolossSection { refinements: s.usize_list("refinements", vec![16, 32, 64]), control: s.bool("control", true) };
    s.check(out.refinements.len() >= 2, "refinements", "needs at least two resolutions");
    s.check(out.refinements.windows(2).all(|w| w[0] < w[1]), "refinements", "must be increasing");
    s.finish();
    out
}

impl Section<'_> {
    fn vec3(&mut self, key: &str, default: [f64; 3]) -> [f64; 3] {
        let v = self.f64_list(key, default.to_vec());
        self.check(v.len() == 3, key, "must have three entries");
        if v.len() == 3 {
            [v[0], v[1], v[2]]
        } else {
            default
        }
    }
}

fn parse_sde(mut s: Section) -> SdeSection {
    let experiment = match s.string("experiment").as_deref() {
        None => SdeExperiment::Ladder,
        Some(name) => SdeExperiment::parse(name).unwrap_or_else(|| {
            s.error(format!("`{}`: unknown experiment `{name}`", s.path("experiment")));
            SdeExperiment::Ladder
        }),
    };
    let rotation = s.vec3("rotation", [0.0, 0.0, 1.0]);
    let glue_rotation = s.vec3("glue_rotation", [8.0, 0.0, 1.0]);
    let out = SdeSection {
        experiment,
        dt: s.f64("dt", 1e-3),
        t_end: s.f64("t_end", 1.0),
        paths: s.u64("paths", 200) as usize,
        drift: s.f64("drift", 0.0),
        sigma: s.f64("sigma", 1.0),
        x0: s.f64("x0", 0.0),
        bridge: s.bool("bridge", true),
        cutoff_stage: s.u64("cutoff_stage", 4) as u32,
        rotation,
        glue_rotation,
        noise: s.f64("noise", 1.0),
        chart_radius: s.f64("chart_radius", 4.0),
        switch_radius: s.f64("switch_radius", 2.0),
        chart_tol: s.f64("chart_tol", 1e-2),
        epsilons: s.f64_list("epsilons", vec![1e-2, 1e-3]),
        refinements: s.u64("refinements", 3) as u32,
    };
    s.positive("dt", out.dt);
    s.positive("t_end", out.t_end);
    s.check(out.paths >= 1, "paths", "must be at least 1");
    s.check(out.sigma >= 0.0 && out.sigma.is_finite(), "sigma", "must be nonnegative");
    s.check(out.x0 > -1.0 && out.x0 < 1.0, "x0", "must lie in (-1, 1)");
    s.check(out.cutoff_stage >= 1, "cutoff_stage", "must be at least 1");
    s.check(out.noise >= 0.0 && out.noise.is_finite(), "noise", "must be nonnegative");
    s.positive("chart_radius", out.chart_radius);
    s.positive("chart_tol", out.chart_tol);
    s.check(out.switch_radius > 1.0 && out.switch_radius.is_finite(), "switch_radius", "must exceed 1 so the two stereographic charts cover the sphere");
    s.check(!out.epsilons.is_empty() && out.epsilons.iter().all(|e| *e > 0.0), "epsilons", "must be nonempty and positive");
    s.check((2..=8).contains(&out.refinements), "refinements", "must be between 2 and 8");
    s.finish();
    out
}

/// Parses and validates a configuration, collecting every error.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| ConfigErrors(vec![format!("invalid TOML: {}", e.message())]))?;
    let errors = Sink::default();
    let mut root = Section::new("", table, &errors);

    let experiment = match root.string("experiment") {
        Some(name) => Experiment::NAMES.iter().find(|(n, _)| *n == name).map(|(_, e)| *e).unwrap_or_else(|| {
            root.error(format!("`experiment`: unknown experiment `{name}`"));
            Experiment::Eulerian
        }),
        None => {
            root.error("`experiment`: missing required key".into());
            Experiment::Eulerian
        }
    };
    let seed = root.u64("seed", 0);
    let output = root.string("output").map(PathBuf::from);
    let checkpoints = root.f64_list("checkpoints", Vec::new());
    let has_eulerian = root.has("eulerian");
    let eulerian = parse_eulerian(root.sub("eulerian"));
    if !has_eulerian {
        errors.borrow_mut().retain(|e| !e.starts_with("`eulerian."));
        root.error("`eulerian`: missing required table".into());
    }
    let initial = parse_initial(root.sub("initial"));
    let noise = parse_noise(root.sub("noise"));
    let flow = parse_flow(root.sub("flow"));
    let noloss = parse_noloss(root.sub("noloss"));
    let sde = parse_sde(root.sub("sde"));
    for &t in &checkpoints {
        root.check(t >= 0.0 && t <= eulerian.t_end, "checkpoints", format!("{t} is outside [0, t_end]"));
    }
    root.finish();

    let config = RunConfig { experiment, seed, output, checkpoints, eulerian, initial, noise, flow, noloss, sde };
    let mut errs = errors.into_inner();
    if errs.is_empty() {
        let e = config.eulerian_config();
        errs.extend(e.validate_static().into_iter().map(|m| format!("`eulerian`: {m}")));
    }
    if errs.is_empty() {
        // Constraints that need the initial field.
        if let Err(e) = config.eulerian_config().prepare() {
            errs.push(format!("`eulerian.cap`: {e}"));
        }
    }
    if errs.is_empty() {
        Ok(config)
    } else {
        Err(ConfigErrors(errs))
    }
}
