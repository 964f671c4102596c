//! Records, aggregates and persistence.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// One trial (or one grid row for table-like kinds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// Free-form tag, e.g. the process of a martingale row.
    pub label: String,
    pub metrics: BTreeMap<String, f64>,
}

impl TrialRecord {
    pub fn new(trial: usize, seed: u64) -> TrialRecord {
        TrialRecord { trial, seed, label: String::new(), metrics: BTreeMap::new() }
    }

    pub fn set(&mut self, key: &str, value: impl Into<f64>) -> &mut Self {
        self.metrics.insert(key.to_string(), value.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }
}

/// Residual degree histogram entry after one round of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub trial: usize,
    pub round: usize,
    pub degree: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (0 for a single record).
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

pub fn aggregate(values: &[f64]) -> Aggregate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    Aggregate {
        count: n,
        mean,
        stddev: var.sqrt(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Mean, spread and range of every metric over the records.
pub fn aggregates(records: &[TrialRecord]) -> BTreeMap<String, Aggregate> {
    let mut cols: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records {
        for (k, &v) in &r.metrics {
            cols.entry(k).or_default().push(v);
        }
    }
    cols.into_iter().map(|(k, v)| (k.to_string(), aggregate(&v))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cmp {
    AtLeast,
    AtMost,
}

impl Cmp {
    fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Cmp::AtLeast => value >= threshold,
            Cmp::AtMost => value <= threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scope")]
pub enum Scope {
    /// At least `min_fraction` of records satisfy the comparison.
    PerTrial { min_fraction: f64 },
    /// The mean over records satisfies the comparison.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub metric: String,
    pub cmp: Cmp,
    pub threshold: f64,
    #[serde(flatten)]
    pub scope: Scope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: Check,
    /// Fraction of passing records, or the mean.
    pub observed: f64,
    pub passed: bool,
}

impl Check {
    pub fn evaluate(&self, records: &[TrialRecord]) -> CheckResult {
        let vals: Vec<f64> = records.iter().filter_map(|r| r.get(&self.metric)).collect();
        let (observed, passed) = match self.scope {
            Scope::PerTrial { min_fraction } => {
                let ok = vals.iter().filter(|&&v| self.cmp.holds(v, self.threshold)).count();
                let frac = if vals.is_empty() { 0.0 } else { ok as f64 / vals.len() as f64 };
                (frac, !vals.is_empty() && frac >= min_fraction)
            }
            Scope::Mean => {
                let mean = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
                (mean, !vals.is_empty() && self.cmp.holds(mean, self.threshold))
            }
        };
        CheckResult { check: self.clone(), observed, passed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub library: String,
    pub version: String,
    /// Components that stand in for subroutines the algorithms treat as
    /// black boxes.
    pub substitutions: Vec<String>,
}

impl Provenance {
    pub fn current() -> Provenance {
        Provenance {
            library: "regmatch".into(),
            version: regmatch::VERSION.into(),
            substitutions: vec![
                "fractional hypergraph matching: water-filling on a common rising weight; total >= nu/(f + 1/2)".into(),
                "node-averaged fallback: Luby iterations on all live edges once a node has no live bichromatic edge".into(),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    #[serde(skip)]
    pub rounds: Vec<RoundRow>,
    pub aggregates: BTreeMap<String, Aggregate>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig, records: Vec<TrialRecord>, checks: &[Check], notes: Vec<String>) -> Self {
        let checks: Vec<CheckResult> = checks.iter().map(|c| c.evaluate(&records)).collect();
        ExperimentReport {
            aggregates: aggregates(&records),
            passed: checks.iter().all(|c| c.passed),
            checks,
            config,
            records,
            rounds: Vec::new(),
            notes,
            provenance: Provenance::current(),
        }
    }

    /// CSV of the records: `trial,seed,label,<metrics...>`.
    pub fn write_trials_csv<W: Write>(&self, w: W) -> anyhow::Result<()> {
        let mut keys: Vec<&String> = Vec::new();
        for r in &self.records {
            for k in r.metrics.keys() {
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
        }
        keys.sort();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["trial", "seed", "label"];
        header.extend(keys.iter().map(|k| k.as_str()));
        out.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.trial.to_string(), r.seed.to_string(), r.label.clone()];
            row.extend(keys.iter().map(|k| r.metrics.get(*k).map(|v| v.to_string()).unwrap_or_default()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_rounds_csv<W: Write>(&self, w: W) -> anyhow::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rounds {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Write `trials.csv`, `report.json` and, when present, `rounds.csv`.
    pub fn persist(&self, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = vec![
            write_atomic(&dir.join("trials.csv"), |w| self.write_trials_csv(w))?,
            write_atomic(&dir.join("report.json"), |w| {
                serde_json::to_writer_pretty(&mut *w, self)?;
                writeln!(w)?;
                Ok(())
            })?,
        ];
        if !self.rounds.is_empty() {
            written.push(write_atomic(&dir.join("rounds.csv"), |w| self.write_rounds_csv(w))?);
        }
        Ok(written)
    }
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut std::io::BufWriter<&mut std::fs::File>) -> anyhow::Result<()>,
) -> anyhow::Result<PathBuf> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(path.to_path_buf())
}
