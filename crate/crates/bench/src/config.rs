//! Experiment configuration.
//!
//! The text format is one `key = value` pair per line; `#` starts a comment.
//! Values that parse as JSON (numbers, booleans, arrays) are taken as such,
//! anything else is a string. A file whose first non-blank character is `{`
//! is read as a JSON object with the same keys.
//!
//! ```text
//! kind = fast
//! graph = bipartite
//! n = 10000        # nodes per side
//! degree = 256
//! eps = 0.05
//! trials = 50
//! seed = 7
//! ```

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use regmatch::lowerbound::{AdversaryAlgo, Family};
use regmatch::martingale::{Process, Tail};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Generate,
    Validate,
    /// One round of the distributed rule.
    LubyOneRound,
    /// `rounds` rounds with removal.
    LubyMulti,
    /// Degree histograms of the residual graph after each round.
    Preservation,
    /// Distance between the distributed and sequential matching laws.
    Tv,
    Warmup,
    Fast,
    Schedule,
    NodeAvg,
    Lowerbound,
    Martingale,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Generate => "generate",
            Kind::Validate => "validate",
            Kind::LubyOneRound => "luby_one_round",
            Kind::LubyMulti => "luby_multi",
            Kind::Preservation => "preservation",
            Kind::Tv => "tv",
            Kind::Warmup => "warmup",
            Kind::Fast => "fast",
            Kind::Schedule => "schedule",
            Kind::NodeAvg => "node_avg",
            Kind::Lowerbound => "lowerbound",
            Kind::Martingale => "martingale",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    /// Random `degree`-regular bipartite graph with `n` nodes per side.
    Bipartite,
    /// Random `degree`-regular graph on `n` nodes.
    General,
    /// Edge list read from `file`.
    File,
    Path,
    Cycle,
    /// `K_{1,n}`.
    Star,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    /// The documented grid of processes and tails.
    Grid,
    IidBernoulli,
    Zero,
    Alternating,
    Switching,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,

    pub graph: GraphKind,
    pub n: usize,
    pub degree: usize,
    pub file: Option<PathBuf>,

    pub eps: Option<f64>,
    pub rounds: Option<usize>,
    pub c_prime: u32,
    /// Use the full sampled pipeline at `eps/8` instead of running the
    /// augmenting-path matcher at `eps` directly.
    pub full: bool,
    pub hyperedge_cap: Option<usize>,
    pub phase_limit: Option<u64>,
    /// Override of the augmenting path length (in edges).
    pub path_edges: Option<usize>,
    /// Relative half-width of the degree band for `preservation`.
    pub band: f64,
    /// Samples per distribution for `tv`.
    pub samples: usize,

    pub family: Family,
    pub r: usize,
    pub k: usize,
    pub delta: usize,
    pub algo: AdversaryAlgo,
    /// Rounds (or phases) before truncation; defaults to `r`.
    pub budget: Option<usize>,

    pub tail: Tail,
    pub process: ProcessKind,
    pub p: f64,
    pub low: f64,
    pub high: f64,
    pub t: usize,
    pub lambdas: Option<Vec<f64>>,

    /// Overrides the default threshold of the kind's check.
    pub threshold: Option<f64>,
    /// Fraction of trials that must pass a per-trial check.
    pub min_pass_fraction: Option<f64>,

    pub trials: usize,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: Kind::Validate,
            graph: GraphKind::Bipartite,
            n: 1000,
            degree: 4,
            file: None,
            eps: None,
            rounds: None,
            c_prime: regmatch::luby::DEFAULT_C_PRIME,
            full: false,
            hyperedge_cap: None,
            phase_limit: None,
            path_edges: None,
            band: 0.15,
            samples: 100_000,
            family: Family::Cycle,
            r: 3,
            k: 40,
            delta: 4,
            algo: AdversaryAlgo::LubyMulti,
            budget: None,
            tail: Tail::Upper,
            process: ProcessKind::Grid,
            p: 1.0 / 6.0,
            low: 0.1,
            high: 0.3,
            t: 1000,
            lambdas: None,
            threshold: None,
            min_pass_fraction: None,
            trials: 1,
            seed: None,
            out: None,
            workers: 0,
        }
    }
}

/// Parse a value the way the text format does.
pub fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Parse the `key = value` format into a JSON object.
pub fn parse_key_values(text: &str) -> anyhow::Result<Map<String, Value>> {
    let mut map = Map::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
        let key = key.trim();
        if key.is_empty() {
            bail!("line {}: empty key", i + 1);
        }
        if map.insert(key.to_string(), parse_value(value)).is_some() {
            bail!("line {}: duplicate key `{key}`", i + 1);
        }
    }
    Ok(map)
}

/// Parse either encoding.
pub fn parse_config_text(text: &str) -> anyhow::Result<Map<String, Value>> {
    if text.trim_start().starts_with('{') {
        match serde_json::from_str(text).context("config JSON")? {
            Value::Object(m) => Ok(m),
            _ => unreachable!(),
        }
    } else {
        parse_key_values(text)
    }
}

pub fn load_config_map(path: &Path) -> anyhow::Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config_text(&text).with_context(|| format!("parsing config {}", path.display()))
}

impl ExperimentConfig {
    /// Build from a key map; type errors name the offending key.
    pub fn from_map(map: Map<String, Value>) -> anyhow::Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(Value::Object(map)).map_err(|e| {
            let path = e.path().to_string();
            anyhow!("config field `{path}`: {}", e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> anyhow::Result<ExperimentConfig> {
        ExperimentConfig::from_map(parse_config_text(text)?)
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated configs carry a seed")
    }

    pub fn eps_or(&self, default: f64) -> f64 {
        self.eps.unwrap_or(default)
    }

    /// Range checks, reported by field name.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.seed.is_none() {
            bail!("config field `seed`: required");
        }
        if self.trials == 0 {
            bail!("config field `trials`: must be positive");
        }
        if let Some(eps) = self.eps {
            let max = if self.kind == Kind::Warmup { 0.5 } else { 1.0 };
            if !(eps > 0.0 && eps < max) {
                bail!("config field `eps`: {eps} outside (0, {max})");
            }
        }
        if !(self.band > 0.0 && self.band < 1.0) {
            bail!("config field `band`: {} outside (0, 1)", self.band);
        }
        if let Some(f) = self.min_pass_fraction {
            if !(0.0..=1.0).contains(&f) {
                bail!("config field `min_pass_fraction`: {f} outside [0, 1]");
            }
        }
        for (name, v) in [("p", self.p), ("low", self.low), ("high", self.high)] {
            if !(0.0..=1.0).contains(&v) {
                bail!("config field `{name}`: {v} outside [0, 1]");
            }
        }
        if self.low > self.high {
            bail!("config field `low`: exceeds `high`");
        }
        if self.graph == GraphKind::File && self.file.is_none() && self.kind != Kind::Lowerbound {
            bail!("config field `file`: required when graph = file");
        }
        if self.kind == Kind::Martingale && self.t == 0 {
            bail!("config field `t`: must be positive");
        }
        if self.kind == Kind::Tv && self.samples == 0 {
            bail!("config field `samples`: must be positive");
        }
        Ok(())
    }

    /// The process of a single-process martingale run.
    pub fn single_process(&self) -> Option<Process> {
        Some(match self.process {
            ProcessKind::Grid => return None,
            ProcessKind::IidBernoulli => Process::IidBernoulli { p: self.p },
            ProcessKind::Zero => Process::Zero,
            ProcessKind::Alternating => Process::Alternating { p: self.p },
            ProcessKind::Switching => Process::Switching { low: self.low, high: self.high },
        })
    }
}
