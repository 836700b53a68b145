//! Results manifest: a flat structured-text file that records everything
//! needed to replay a run byte-identically (modulo the wall-clock line).

use std::fmt::Write as _;
use std::path::Path;

/// A CSV artifact registered in the manifest.
#[derive(Debug, Clone)]
pub struct CsvArtifact {
    pub name: String,
    pub file: String,
    pub schema: String,
}

/// Manifest of one experiment run.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub experiment: String,
    pub seed: u64,
    pub streams: (u64, u64),
    pub wall_clock_seconds: f64,
    /// Free-form status marker (e.g. "ok", "exact", "trivial").
    pub status: String,
    pub csvs: Vec<CsvArtifact>,
    /// (gate name, passed).
    pub gates: Vec<(String, bool)>,
    /// Canonical config echo (from `ExperimentConfig::echo`).
    pub config_echo: String,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "artifact_version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "experiment = {}", self.experiment);
        let _ = writeln!(out, "status = {}", self.status);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "streams = {}..{}", self.streams.0, self.streams.1);
        let _ = writeln!(out, "wall_clock_seconds = {:.3}", self.wall_clock_seconds);
        for csv in &self.csvs {
            let _ = writeln!(out, "csv.{}.file = {}", csv.name, csv.file);
            let _ = writeln!(out, "csv.{}.schema = {}", csv.name, csv.schema);
        }
        for (gate, passed) in &self.gates {
            let _ = writeln!(out, "gate.{gate} = {}", if *passed { "pass" } else { "fail" });
        }
        for line in self.config_echo.lines() {
            let _ = writeln!(out, "config.{line}");
        }
        out
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::write(dir.join("manifest"), self.render())
    }

    pub fn all_gates_pass(&self) -> bool {
        self.gates.iter().all(|(_, ok)| *ok)
    }
}

/// Extracts the embedded config text from manifest contents (for replay).
pub fn config_from_manifest(text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("config.") {
            out.push_str(rest);
            out.push('\n');
        }
    }
    out
}

/// Manifest contents with the wall-clock line removed, for byte comparisons.
pub fn strip_wall_clock(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("wall_clock_seconds"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Writes a CSV file with a fixed header and pre-rendered rows.
pub fn write_csv(
    path: &Path,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    std::fs::write(path, out)
}
