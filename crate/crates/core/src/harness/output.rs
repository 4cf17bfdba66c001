//! CSV formatting, checks, and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Fixed 17-significant-digit float format.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Builds a CSV document row by row.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    width: usize,
}

/// One CSV cell.
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::I(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::I(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::S(if v { "true" } else { "false" }.into())
    }
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text, width: header.len() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.width, "CSV row width");
        let parts: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::F(v) => fmt_f64(v),
                Cell::I(v) => v.to_string(),
                Cell::S(s) => s,
            })
            .collect();
        let _ = writeln!(self.text, "{}", parts.join(","));
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Shorthand for a row of heterogeneous cells.
#[macro_export]
macro_rules! csv_row {
    ($($v:expr),* $(,)?) => {
        vec![$($crate::harness::Cell::from($v)),*]
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub contents: Vec<u8>,
}

impl OutputFile {
    pub fn text(name: &str, contents: String) -> Self {
        Self { name: name.to_string(), contents: contents.into_bytes() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    /// Human-readable bound, e.g. `<= 1e-6`; empty for informational values.
    pub bound: String,
    pub passed: bool,
}

impl Metric {
    pub fn info(name: &str, value: f64) -> Self {
        Self { name: name.into(), value, bound: String::new(), passed: true }
    }

    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound: format!("<= {bound:e}"), passed: value <= bound }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound: format!(">= {bound}"), passed: value >= bound }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, bound: format!("in [{lo}, {hi}]"), passed: (lo..=hi).contains(&value) }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, bound: "== 1".into(), passed: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub metrics: Vec<Metric>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Check {
    pub fn new(name: &str, metrics: Vec<Metric>) -> Self {
        let passed = metrics.iter().all(|m| m.passed);
        Self { name: name.into(), passed, metrics, note: String::new() }
    }

    pub fn failed(name: &str, note: String) -> Self {
        Self { name: name.into(), passed: false, metrics: Vec::new(), note }
    }

    pub fn summary_line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let parts: Vec<String> = self
            .metrics
            .iter()
            .map(|m| match m.bound.as_str() {
                "" => format!("{}={:.3e}", m.name, m.value),
                "== 1" => format!("{}={}", m.name, m.value == 1.0),
                b => format!("{}={:.3e} ({b})", m.name, m.value),
            })
            .collect();
        let mut line = format!("{verdict} {}", self.name);
        if !parts.is_empty() {
            line.push_str(": ");
            line.push_str(&parts.join(", "));
        }
        if !self.note.is_empty() {
            line.push_str(&format!(" [{}]", self.note));
        }
        line
    }
}

/// Everything an experiment produces.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub files: Vec<OutputFile>,
    pub checks: Vec<Check>,
}

impl Outputs {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: String,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub outputs: Vec<FileRecord>,
    pub checks: Vec<Check>,
    pub all_passed: bool,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(command: &str, config: String, started: f64, outputs: &Outputs) -> Self {
        Self {
            command: command.into(),
            config,
            version: env!("CARGO_PKG_VERSION").into(),
            started,
            finished: now(),
            outputs: outputs
                .files
                .iter()
                .map(|f| FileRecord { name: f.name.clone(), sha256: sha256_hex(&f.contents), bytes: f.contents.len() as u64 })
                .collect(),
            checks: outputs.checks.clone(),
            all_passed: outputs.all_passed(),
        }
    }

    /// Names of the referenced files that are missing or differ from their checksum.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.outputs
            .iter()
            .filter(|r| fs::read(dir.join(&r.name)).map(|b| sha256_hex(&b) != r.sha256).unwrap_or(true))
            .map(|r| r.name.clone())
            .collect()
    }
}

/// Writes the files and the manifest into `dir`.
pub fn persist(dir: &Path, outputs: &Outputs, manifest: &RunManifest) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    for f in &outputs.files {
        fs::write(dir.join(&f.name), &f.contents)?;
    }
    let path = dir.join(MANIFEST_NAME);
    fs::write(&path, serde_json::to_string_pretty(manifest).expect("manifest serializes"))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_fixed_width() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.1), "-1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn csv_rows() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(csv_row![1usize, 0.5]);
        assert_eq!(c.finish(), "a,b\n1,5.0000000000000000e-1\n");
    }

    #[test]
    fn manifest_checksums_match_disk() {
        let dir = tempfile::tempdir().unwrap();
        let outputs = Outputs {
            files: vec![OutputFile::text("x.csv", "t\n1\n".into())],
            checks: vec![Check::new("c", vec![Metric::at_most("m", 1.0, 2.0)])],
        };
        let m = RunManifest::new("test", String::new(), now(), &outputs);
        persist(dir.path(), &outputs, &m).unwrap();
        assert!(m.verify(dir.path()).is_empty());
        assert!(m.all_passed);
        fs::write(dir.path().join("x.csv"), "t\n2\n").unwrap();
        assert_eq!(m.verify(dir.path()), vec!["x.csv".to_string()]);
    }
}
