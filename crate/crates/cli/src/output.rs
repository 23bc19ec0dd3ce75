//! Tables, records and manifests written to the output directory.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

/// A plot table. Cells hold finished text; numbers go through [`num`].
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip decimal; empty for missing values.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub timestamp: String,
    pub threads: usize,
    pub grid_points: usize,
    pub span_fwhm: f64,
    pub z_steps: usize,
    pub round_trips: usize,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

/// Collects output files and warnings for one run.
pub struct Run {
    pub dir: PathBuf,
    pub stem: String,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

impl Run {
    pub fn new(dir: &Path, stem: &str) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), stem: stem.to_string(), outputs: Vec::new(), warnings: Vec::new() })
    }

    pub fn manifest_name(&self) -> String {
        format!("{}.manifest.json", self.stem)
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&table.header)?;
        for r in &table.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// JSON documents carry the manifest name and config hash alongside
    /// the payload.
    pub fn write_json<T: Serialize>(&mut self, name: &str, hash: &str, payload: &T) -> anyhow::Result<()> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            manifest: String,
            config_hash: &'a str,
            #[serde(flatten)]
            payload: &'a T,
        }
        let doc = Doc { manifest: self.manifest_name(), config_hash: hash, payload };
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn finish(self, mut manifest: Manifest) -> anyhow::Result<PathBuf> {
        manifest.outputs = self.outputs;
        manifest.warnings = self.warnings;
        let path = self.dir.join(format!("{}.manifest.json", self.stem));
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Machine-readable failure report.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: ErrorBody,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
    pub chain: Vec<String>,
}

impl ErrorReport {
    pub fn from_anyhow(e: &anyhow::Error) -> Self {
        let kind =
            e.chain().find_map(|c| c.downcast_ref::<ringsq::Error>()).map(kind_of).unwrap_or("config").to_string();
        Self {
            error: ErrorBody {
                kind,
                message: e.to_string(),
                chain: e.chain().skip(1).map(|c| c.to_string()).collect(),
            },
        }
    }
}

fn kind_of(e: &ringsq::Error) -> &'static str {
    use ringsq::Error::*;
    match e {
        InvalidConfig(_) => "invalid_config",
        InvalidGrid(_) => "invalid_grid",
        PumpDiverged { .. } => "pump_diverged",
        IntegrationAccuracy { .. } => "integration_accuracy",
        AboveThreshold { .. } => "above_threshold",
        Decomposition(_) => "decomposition",
        NumericalIntegrity(_) => "numerical_integrity",
        Unphysical { .. } => "unphysical",
        Undefined(_) => "undefined",
        Bracket { .. } => "bracket",
    }
}
