use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::bail;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use regmatch_bench::config::{load_config_map, parse_value};
use regmatch_bench::{run_experiment, ExperimentConfig, Kind};

#[derive(Parser)]
#[command(name = "regmatch", version, about = "Matching experiments on regular graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Config file (`key = value` lines or a JSON object).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory for trials.csv, report.json and friends.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override any config key, e.g. `--set degree=16`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate graphs and write them as edge lists.
    Generate,
    /// Degree and bipartiteness report of an edge list.
    Validate {
        /// Edge list; same as `--set graph=file --set file=PATH`.
        file: Option<PathBuf>,
    },
    Luby {
        #[arg(long, value_enum)]
        mode: Option<LubyMode>,
    },
    /// Augmenting-path matcher.
    Warmup,
    Fast {
        #[arg(long, value_enum)]
        mode: Option<FastMode>,
    },
    /// Maximal matching with node-averaged finish times.
    NodeAvg,
    /// Build a gadget instance and run a truncated algorithm on it.
    Lowerbound,
    /// Monte Carlo check of the shifted martingale tail bounds.
    Martingale,
}

#[derive(Clone, Copy, ValueEnum)]
enum LubyMode {
    OneRound,
    Multi,
    Preservation,
    Tv,
}

#[derive(Clone, Copy, ValueEnum)]
enum FastMode {
    Match,
    Schedule,
}

impl Command {
    /// Kinds the subcommand may run, default first.
    fn kinds(&self) -> Vec<Kind> {
        match self {
            Command::Generate => vec![Kind::Generate],
            Command::Validate { .. } => vec![Kind::Validate],
            Command::Luby { mode } => match mode {
                Some(LubyMode::OneRound) => vec![Kind::LubyOneRound],
                Some(LubyMode::Multi) => vec![Kind::LubyMulti],
                Some(LubyMode::Preservation) => vec![Kind::Preservation],
                Some(LubyMode::Tv) => vec![Kind::Tv],
                None => vec![Kind::LubyOneRound, Kind::LubyMulti, Kind::Preservation, Kind::Tv],
            },
            Command::Warmup => vec![Kind::Warmup],
            Command::Fast { mode } => match mode {
                Some(FastMode::Match) => vec![Kind::Fast],
                Some(FastMode::Schedule) => vec![Kind::Schedule],
                None => vec![Kind::Fast, Kind::Schedule],
            },
            Command::NodeAvg => vec![Kind::NodeAvg],
            Command::Lowerbound => vec![Kind::Lowerbound],
            Command::Martingale => vec![Kind::Martingale],
        }
    }
}

fn build_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut map = match &cli.common.config {
        Some(p) => load_config_map(p)?,
        None => serde_json::Map::new(),
    };
    for kv in &cli.common.set {
        let Some((k, v)) = kv.split_once('=') else { bail!("--set expects KEY=VALUE, got {kv:?}") };
        map.insert(k.trim().to_string(), parse_value(v));
    }
    let c = &cli.common;
    if let Some(s) = c.seed {
        map.insert("seed".into(), s.into());
    }
    if let Some(t) = c.trials {
        map.insert("trials".into(), t.into());
    }
    if let Some(o) = &c.out {
        map.insert("out".into(), Value::String(o.display().to_string()));
    }
    if let Some(w) = c.workers {
        map.insert("workers".into(), w.into());
    }
    if let Command::Validate { file: Some(f) } = &cli.command {
        map.insert("graph".into(), "file".into());
        map.insert("file".into(), Value::String(f.display().to_string()));
    }
    let allowed = cli.command.kinds();
    let kind = match map.get("kind") {
        Some(k) => {
            let k: Kind = serde_json::from_value(k.clone()).map_err(|e| anyhow::anyhow!("config field `kind`: {e}"))?;
            if !allowed.contains(&k) {
                bail!("config field `kind`: {} does not belong to this subcommand", k.name());
            }
            k
        }
        None => allowed[0],
    };
    map.insert("kind".into(), serde_json::to_value(kind)?);
    ExperimentConfig::from_map(map)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(&cli).and_then(|cfg| run_experiment(&cfg));
    match result {
        Ok(report) => {
            for c in &report.checks {
                println!(
                    "{} {} {:?} {} (observed {:.6})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.check.metric,
                    c.check.cmp,
                    c.check.threshold,
                    c.observed
                );
            }
            for n in &report.notes {
                println!("note: {n}");
            }
            if report.config.out.is_none() {
                println!("{}", serde_json::to_string_pretty(&report.aggregates).expect("aggregates serialize"));
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
