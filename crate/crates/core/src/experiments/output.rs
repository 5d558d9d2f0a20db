//! Result rows, CSV/JSON writers and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::observables::{LinearFit, ScalingSeries};
use crate::Result;

pub const CSV_HEADER: &str = "experiment,d,L,seed,statistic,value,stderr,walltime_s";
pub const VERSION_TAG: &str = concat!(env!("CARGO_PKG_NAME"), "-", env!("CARGO_PKG_VERSION"));

/// Seed column: a disorder seed, or an aggregate over all seeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum SeedKey {
    Seed(u64),
    All,
}

impl std::fmt::Display for SeedKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedKey::Seed(s) => write!(f, "{s}"),
            SeedKey::All => f.write_str("all"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub d: usize,
    pub scale: usize,
    pub seed: SeedKey,
    pub statistic: String,
    pub value: f64,
    pub stderr: f64,
    pub walltime_s: f64,
}

impl ResultRow {
    pub fn new(experiment: &str, d: usize, scale: usize, seed: SeedKey, statistic: impl Into<String>, value: f64) -> Self {
        Self {
            experiment: experiment.to_string(),
            d,
            scale,
            seed,
            statistic: statistic.into(),
            value,
            stderr: 0.0,
            walltime_s: 0.0,
        }
    }

    pub fn with_stderr(mut self, stderr: f64) -> Self {
        self.stderr = stderr;
        self
    }

    fn sort_key(&self) -> (&str, usize, usize, &str, SeedKey) {
        (&self.experiment, self.d, self.scale, &self.statistic, self.seed)
    }
}

/// Sorts rows into their canonical order, independent of how they were produced.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

pub fn render_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:e},{:e},{}",
            r.experiment, r.d, r.scale, r.seed, r.statistic, r.value, r.stderr, r.walltime_s
        );
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesEntry {
    #[serde(flatten)]
    pub series: ScalingSeries,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_fit: Option<LinearFit>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub config: String,
    pub seed_offset: u64,
    pub seeds: Vec<u64>,
    pub rows: usize,
}

impl Manifest {
    pub fn new(command: &str, config_text: &str, seed_offset: u64, seeds: Vec<u64>, rows: usize) -> Self {
        Self {
            version: VERSION_TAG,
            command: command.to_string(),
            config_sha256: sha256_hex(config_text),
            config: config_text.to_string(),
            seed_offset,
            seeds,
            rows,
        }
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything one run writes.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub series: BTreeMap<String, SeriesEntry>,
    /// Extra JSON document (the validation report).
    pub report: Option<serde_json::Value>,
}

impl RunOutput {
    pub fn new(mut rows: Vec<ResultRow>) -> Self {
        sort_rows(&mut rows);
        Self { rows, series: BTreeMap::new(), report: None }
    }

    /// Writes `results.csv`, `manifest.json` and, when present, `series.json` and `report.json`.
    pub fn write(&self, dir: &Path, manifest: &Manifest) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), render_csv(&self.rows))?;
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(manifest)? + "\n")?;
        if !self.series.is_empty() {
            std::fs::write(dir.join("series.json"), serde_json::to_string_pretty(&self.series)? + "\n")?;
        }
        if let Some(report) = &self.report {
            std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_sort_canonically_and_render() {
        let mut rows = vec![
            ResultRow::new("x", 2, 8, SeedKey::All, "s", 0.5),
            ResultRow::new("x", 2, 4, SeedKey::Seed(3), "s", 1.0),
            ResultRow::new("x", 2, 4, SeedKey::Seed(1), "s", 1.25).with_stderr(0.1),
        ];
        sort_rows(&mut rows);
        let csv = render_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "x,2,4,1,s,1.25e0,1e-1,0");
        assert_eq!(lines[3], "x,2,8,all,s,5e-1,0e0,0");
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
