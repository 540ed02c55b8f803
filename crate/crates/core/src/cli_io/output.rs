//! CSV tables, file hashes and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::verify::ResidualReport;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a `# units: ...` line, a header row and the rows.
pub fn write_csv<I>(path: &Path, units: &str, header: &[&str], rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut buf = format!("# units: {units}\n").into_bytes();
    {
        let mut w = csv::WriterBuilder::new().from_writer(&mut buf);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    fs::write(path, buf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parses every row of column `name` as `f64`.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>, String> {
        let c = self.column(name).ok_or_else(|| format!("missing column '{name}'"))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.get(c)
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| format!("row {}: bad value in column '{name}'", i + 1))
            })
            .collect()
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    if !text.starts_with("# units:") {
        return Err(format!("{}: missing units line", path.display()));
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(|e| format!("{}: {e}", path.display()))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = r
        .records()
        .map(|rec| {
            rec.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(|e| format!("{}: {e}", path.display()))
        })
        .collect::<Result<_, _>>()?;
    Ok(CsvTable { header, rows })
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub picard: f64,
    pub bc: f64,
    pub brho: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Iterations {
    pub bisection: usize,
    pub picard: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub file: String,
    pub t: f64,
    pub q: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveRecord {
    pub qdot0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub regime: String,
    pub method: String,
    pub e_eff: f64,
    pub max_energy_drift: f64,
    pub stopped_at_min: bool,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collapse_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collapse_exponent: Option<f64>,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub mu_min: f64,
    pub mu_max: f64,
    pub steps: usize,
    pub jobs: usize,
    pub succeeded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub wall_time_seconds: f64,
}

/// Everything needed to reproduce a run. Only `metadata` varies between
/// identical invocations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub command_line: Vec<String>,
    pub model: String,
    #[serde(rename = "G")]
    pub gravity: f64,
    #[serde(rename = "N")]
    pub intervals: usize,
    pub mu: Option<f64>,
    pub tolerances: Tolerances,
    pub brho0: Option<f64>,
    pub boundary_residual: Option<f64>,
    pub iterations: Option<Iterations>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepRecord>,
    /// SHA-256 of each emitted file, keyed by file name.
    pub files: BTreeMap<String, String>,
    pub metadata: Metadata,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(path, text)
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Records the hash of each named file in `dir`.
    pub fn hash_files(&mut self, dir: &Path, names: &[String]) -> io::Result<()> {
        for name in names {
            self.files.insert(name.clone(), sha256_file(&dir.join(name))?);
        }
        Ok(())
    }
}
