//! Dispatch from a config to the library drivers.

use std::fs::File;
use std::io::BufReader;

use anyhow::{bail, Context};
use rayon::prelude::*;

use regmatch::fast::{approx_match_fast, maximal_match_node_avg, param_schedules};
use regmatch::graph::{gen_regular_bipartite, gen_regular_general, read_edge_list, require_regular, validate, write_edge_list};
use regmatch::lowerbound::{
    adversary_single_trial, build_cycle_instance, build_even_degree_instance, build_general_degree_instance, Family,
    LowerBoundInstance,
};
use regmatch::luby::{luby_round_distributed, multi_round_luby_with, tv_distance_estimate};
use regmatch::martingale::{default_grid, mc_martingale_check, Process, Tail};
use regmatch::oracle::{max_matching_bipartite, max_matching_exact_small};
use regmatch::rng::{derive_seed, stream};
use regmatch::warmup::{warmup_full_with, warmup_pipeline, WarmupParams};
use regmatch::Graph;

use crate::config::{ExperimentConfig, GraphKind, Kind};
use crate::report::{Check, Cmp, ExperimentReport, RoundRow, Scope, TrialRecord};

/// Seed of trial `t`.
pub fn trial_seed(master: u64, t: usize) -> u64 {
    derive_seed(master, stream::TRIAL, t as u64)
}

/// The graph described by the config; generators use `seed`.
pub fn build_graph(cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Graph> {
    let n = cfg.n;
    let g = match cfg.graph {
        GraphKind::Bipartite => gen_regular_bipartite(n, cfg.degree, seed)?,
        GraphKind::General => gen_regular_general(n, cfg.degree, seed)?,
        GraphKind::File => {
            let path = cfg.file.as_ref().context("config field `file`: required when graph = file")?;
            let f = File::open(path).with_context(|| format!("config field `file`: opening {}", path.display()))?;
            read_edge_list(BufReader::new(f)).with_context(|| format!("config field `file`: {}", path.display()))?
        }
        GraphKind::Path => Graph::from_edges(n, &(1..n).map(|i| (i - 1, i)).collect::<Vec<_>>(), None)?,
        GraphKind::Cycle => {
            if n < 3 {
                bail!("config field `n`: a cycle needs at least 3 nodes");
            }
            Graph::from_edges(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>(), None)?
        }
        GraphKind::Star => Graph::from_edges(n + 1, &(1..=n).map(|i| (0, i)).collect::<Vec<_>>(), None)?,
        GraphKind::Complete => {
            let e: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
            Graph::from_edges(n, &e, None)?
        }
    };
    Ok(g)
}

fn trial_graph(cfg: &ExperimentConfig, ts: u64) -> anyhow::Result<Graph> {
    build_graph(cfg, derive_seed(ts, stream::GENERATOR, 0))
}

fn per_trial(metric: &str, cmp: Cmp, threshold: f64, min_fraction: f64) -> Check {
    Check { metric: metric.into(), cmp, threshold, scope: Scope::PerTrial { min_fraction } }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Maximum matching size when an exact oracle applies.
fn optimum(g: &Graph) -> anyhow::Result<Option<usize>> {
    if g.two_coloring().is_some() {
        Ok(Some(max_matching_bipartite(g)?.matching.size()))
    } else if g.node_count() <= 64 {
        Ok(Some(max_matching_exact_small(g)?))
    } else {
        Ok(None)
    }
}

struct Outcome {
    records: Vec<TrialRecord>,
    rounds: Vec<RoundRow>,
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl Outcome {
    fn new(records: Vec<TrialRecord>, checks: Vec<Check>) -> Outcome {
        Outcome { records, rounds: Vec::new(), checks, notes: Vec::new() }
    }
}

/// Run every trial in parallel; results come back in trial order.
fn trials<T: Send>(
    cfg: &ExperimentConfig,
    f: impl Fn(usize, u64) -> anyhow::Result<T> + Sync,
) -> anyhow::Result<Vec<T>> {
    let seed = cfg.seed();
    (0..cfg.trials).into_par_iter().map(|t| f(t, trial_seed(seed, t))).collect()
}

/// Run the experiment, write its outputs when `out` is set, and return the
/// report. Its `passed` flag is the conjunction of the kind's checks.
pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if cfg.workers > 0 {
        builder = builder.num_threads(cfg.workers);
    }
    let pool = builder.build().context("starting worker pool")?;
    let out = pool.install(|| dispatch(cfg))?;
    let mut report = ExperimentReport::new(cfg.clone(), out.records, &out.checks, out.notes);
    report.rounds = out.rounds;
    if let Some(dir) = &cfg.out {
        report.persist(dir)?;
    }
    Ok(report)
}

fn dispatch(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    match cfg.kind {
        Kind::Generate | Kind::Validate => run_structure(cfg),
        Kind::LubyOneRound => run_luby_one_round(cfg),
        Kind::LubyMulti => run_luby_multi(cfg),
        Kind::Preservation => run_preservation(cfg),
        Kind::Tv => run_tv(cfg),
        Kind::Warmup => run_warmup(cfg),
        Kind::Fast => run_fast(cfg),
        Kind::Schedule => run_schedule(cfg),
        Kind::NodeAvg => run_node_avg(cfg),
        Kind::Lowerbound => run_lowerbound(cfg),
        Kind::Martingale => run_martingale(cfg),
    }
}

fn run_structure(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let records = trials(cfg, |t, ts| {
        let g = trial_graph(cfg, ts)?;
        if cfg.kind == Kind::Generate {
            if let Some(dir) = &cfg.out {
                std::fs::create_dir_all(dir)?;
                crate::report::write_atomic(&dir.join(format!("graph_{t}.edges")), |w| Ok(write_edge_list(&g, w)?))?;
            }
        }
        let d = validate(&g);
        let mut r = TrialRecord::new(t, ts);
        r.set("nodes", d.node_count as f64)
            .set("edges", d.edge_count as f64)
            .set("min_degree", d.min_degree as f64)
            .set("max_degree", d.max_degree as f64)
            .set("is_regular", flag(d.is_regular))
            .set("is_bipartite", flag(d.is_bipartite))
            .set("degree", d.regular_degree.map_or(-1.0, |x| x as f64));
        Ok(r)
    })?;
    Ok(Outcome::new(records, vec![per_trial("is_regular", Cmp::AtLeast, 1.0, 1.0)]))
}

fn run_luby_one_round(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let records = trials(cfg, |t, ts| {
        let g = trial_graph(cfg, ts)?;
        let m = luby_round_distributed(&g, cfg.c_prime, derive_seed(ts, stream::ALGORITHM, 0));
        let mut r = TrialRecord::new(t, ts);
        r.set("size", m.size() as f64)
            .set("matched_nodes", m.matched_nodes() as f64)
            .set("matched_fraction", m.matched_nodes() as f64 / g.node_count().max(1) as f64);
        if g.edge_count() <= 64 {
            for (e, &(a, b)) in g.edges().iter().enumerate() {
                r.set(&format!("edge_{e:02}"), flag(m.partner(a) == Some(b)));
            }
        }
        Ok(r)
    })?;
    let threshold = cfg.threshold.unwrap_or(1.0 / 288.0);
    Ok(Outcome::new(
        records,
        vec![per_trial("matched_fraction", Cmp::AtLeast, threshold, cfg.min_pass_fraction.unwrap_or(1.0))],
    ))
}

fn run_luby_multi(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let rounds = cfg.rounds.unwrap_or(3);
    let records = trials(cfg, |t, ts| {
        let g = trial_graph(cfg, ts)?;
        let (m, snaps) = multi_round_luby_with(&g, rounds, derive_seed(ts, stream::ALGORITHM, 0), None, cfg.c_prime);
        let last = snaps.last();
        let mut r = TrialRecord::new(t, ts);
        r.set("size", m.size() as f64)
            .set("unmatched_fraction", 1.0 - m.matched_nodes() as f64 / g.node_count().max(1) as f64)
            .set("residual_nodes", last.map_or(g.node_count(), |s| s.residual_node_count) as f64)
            .set("residual_edges", last.map_or(g.edge_count(), |s| s.residual_edge_count) as f64);
        Ok(r)
    })?;
    Ok(Outcome::new(records, Vec::new()))
}

fn run_preservation(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let rounds = cfg.rounds.unwrap_or(1);
    let per = trials(cfg, |t, ts| {
        let g = trial_graph(cfg, ts)?;
        let delta = require_regular(&g)? as f64;
        let (_, snaps) = multi_round_luby_with(&g, rounds, derive_seed(ts, stream::ALGORITHM, 0), None, cfg.c_prime);
        let mut r = TrialRecord::new(t, ts);
        let mut rows = Vec::new();
        let mut in_band = 1.0;
        for s in &snaps {
            let target = delta / 2f64.powi(s.round_index as i32);
            let (lo, hi) = (target * (1.0 - cfg.band), target * (1.0 + cfg.band));
            let inside: usize =
                s.degree_histogram.iter().filter(|(&d, _)| (lo..=hi).contains(&(d as f64))).map(|(_, &c)| c).sum();
            in_band = if s.residual_node_count == 0 { 1.0 } else { inside as f64 / s.residual_node_count as f64 };
            r.set(&format!("in_band_r{}", s.round_index), in_band)
                .set(&format!("mean_degree_r{}", s.round_index), s.mean_degree)
                .set(&format!("survivors_r{}", s.round_index), s.residual_node_count as f64);
            rows.extend(s.degree_histogram.iter().map(|(&degree, &count)| RoundRow {
                trial: t,
                round: s.round_index,
                degree,
                count,
            }));
        }
        r.set("in_band", in_band);
        Ok((r, rows))
    })?;
    let (records, rows): (Vec<_>, Vec<_>) = per.into_iter().unzip();
    let threshold = cfg.threshold.unwrap_or(0.95);
    let mut out = Outcome::new(
        records,
        vec![per_trial("in_band", Cmp::AtLeast, threshold, cfg.min_pass_fraction.unwrap_or(1.0))],
    );
    out.rounds = rows.into_iter().flatten().collect();
    Ok(out)
}

fn run_tv(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let records = trials(cfg, |t, ts| {
        let g = trial_graph(cfg, ts)?;
        let mut r = TrialRecord::new(t, ts);
        r.set("tv", tv_distance_estimate(&g, cfg.samples, cfg.c_prime, derive_seed(ts, stream::ALGORITHM, 0)));
        Ok(r)
    })?;
    let threshold = cfg.threshold.unwrap_or(0.02);
    Ok(Outcome::new(records, vec![per_trial("tv", Cmp::AtMost, threshold, cfg.min_pass_fraction.unwrap_or(1.0))]))
}

fn run_warmup(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let eps = cfg.eps_or(0.3);
    let adjust = |p: &mut WarmupParams| {
        if let Some(c) = cfg.hyperedge_cap {
            p.hyperedge_cap = c;
        }
        p.phase_limit = cfg.phase_limit.or(p.phase_limit);
        p.max_path_edges = cfg.path_edges.or(p.max_path_edges);
    };
    let records = trials(cfg, |t, ts| {
        let g = trial_graph(cfg, ts)?;
        let seed = derive_seed(ts, stream::ALGORITHM, 0);
        let out = if cfg.full {
            warmup_full_with(&g, eps, seed, adjust)?
        } else {
            let mut p = WarmupParams::from_eps(eps)?;
            adjust(&mut p);
            warmup_pipeline(&g, &p, seed)?
        };
        out.matching.check_in(&g)?;
        let s = &out.stats;
        let mut r = TrialRecord::new(t, ts);
        r.set("size", out.matching.size() as f64)
            .set("path_edges", s.params.path_edges() as f64)
            .set("phases_run", s.phases_run as f64)
            .set("active_phases", s.active_phases as f64)
            .set("paths_augmented", s.paths_augmented as f64)
            .set("max_hyperedges", s.max_hyperedges as f64)
            .set("cap_triggered", flag(s.cap_triggered))
            .set("exhausted", flag(s.exhausted))
            .set("sampled", flag(out.sampled));
        if let Some(opt) = optimum(&g)? {
            let target = opt as f64 - eps * g.node_count() as f64;
            r.set("opt", opt as f64).set("slack", out.matching.size() as f64 - target);
        }
        Ok(r)
    })?;
    let all = cfg.min_pass_fraction.unwrap_or(1.0);
    Ok(Outcome::new(
        records,
        vec![per_trial("slack", Cmp::AtLeast, 0.0, all), per_trial("cap_triggered", Cmp::AtMost, 0.0, 1.0)],
    ))
}

fn run_fast(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let eps = cfg.eps_or(0.05);
    let records = trials(cfg, |t, ts| {
        let g = trial_graph(cfg, ts)?;
        let out = approx_match_fast(&g, eps, derive_seed(ts, stream::ALGORITHM, 0))?;
        let mut r = TrialRecord::new(t, ts);
        r.set("size", out.matching.size() as f64)
            .set("rounds", out.rounds as f64)
            .set("bichromatic_edges", out.bichromatic_edges as f64)
            .set("unmatched_fraction", out.unmatched_fraction);
        Ok(r)
    })?;
    let threshold = cfg.threshold.unwrap_or(eps);
    let mut out = Outcome::new(
        records,
        vec![per_trial("unmatched_fraction", Cmp::AtMost, threshold, cfg.min_pass_fraction.unwrap_or(0.9))],
    );
    out.notes.push(regime_note(cfg.degree as u64, eps));
    Ok(out)
}

fn regime_note(delta: u64, eps: f64) -> String {
    match param_schedules(delta, eps, false) {
        Ok(s) if s.in_regime => format!("Δ = {delta}, ε = {eps}: inside the asymptotic regime"),
        _ => format!("Δ = {delta}, ε = {eps}: out of regime (needs Δ > (1/ε)^1e5); empirical substitute"),
    }
}

fn run_schedule(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let eps = cfg.eps_or(0.05);
    let table = param_schedules(cfg.delta as u64, eps, false)?;
    let seed = cfg.seed();
    let records = table
        .rows
        .iter()
        .map(|row| {
            let mut r = TrialRecord::new(row.i, seed);
            r.set("alpha", row.alpha)
                .set("delta_fail", row.delta_fail)
                .set("degree", *row.degree.numer() as f64 / *row.degree.denom() as f64);
            r
        })
        .collect();
    let fail_bound = (-(cfg.delta as f64).powf(1.0 / 300.0)).exp();
    let mut out = Outcome::new(
        records,
        vec![per_trial("alpha", Cmp::AtMost, 0.1, 1.0), per_trial("delta_fail", Cmp::AtMost, fail_bound, 1.0)],
    );
    out.notes.push(format!(
        "horizon {}, alpha_ok {}, delta_ok {}, in_regime {}",
        table.horizon, table.alpha_ok, table.delta_ok, table.in_regime
    ));
    Ok(out)
}

fn run_node_avg(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let records = trials(cfg, |t, ts| {
        let g = trial_graph(cfg, ts)?;
        let out = maximal_match_node_avg(&g, derive_seed(ts, stream::ALGORITHM, 0))?;
        let avg = *out.average.numer() as f64 / *out.average.denom() as f64;
        let mut r = TrialRecord::new(t, ts);
        r.set("average_finish", avg)
            .set("max_finish", out.trace.finish_round.iter().flatten().copied().max().unwrap_or(0) as f64)
            .set("size", out.matching.size() as f64)
            .set("maximal", flag(out.matching.is_maximal_in(&g)))
            .set("max_message_bits", out.trace.max_message_bits)
            .set("phase_one_iterations", out.phase_one_iterations as f64);
        Ok(r)
    })?;
    Ok(Outcome::new(records, vec![per_trial("maximal", Cmp::AtLeast, 1.0, 1.0)]))
}

/// The instance described by `family`, `delta`, `r`, `k`.
pub fn build_instance(cfg: &ExperimentConfig) -> anyhow::Result<LowerBoundInstance> {
    let seed = derive_seed(cfg.seed(), stream::ORIENTATION, 0);
    Ok(match cfg.family {
        Family::Cycle => build_cycle_instance(cfg.r, cfg.k, seed)?,
        Family::EvenDegree => build_even_degree_instance(cfg.delta, cfg.r, cfg.k, seed)?,
        Family::GeneralDegree => build_general_degree_instance(cfg.delta, cfg.r, cfg.k, seed)?,
    })
}

fn run_lowerbound(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let inst = build_instance(cfg)?;
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir)?;
        crate::report::write_atomic(&dir.join("instance.json"), |w| Ok(inst.write_sidecar(w)?))?;
        crate::report::write_atomic(&dir.join("instance.edges"), |w| Ok(write_edge_list(&inst.graph, w)?))?;
    }
    let budget = cfg.budget.unwrap_or(cfg.r);
    let records = trials(cfg, |t, ts| {
        let rec = adversary_single_trial(&inst.meta, cfg.algo, budget, t, ts)?;
        let mut r = TrialRecord::new(t, ts);
        r.set("failure_rate", rec.failure_rate())
            .set("size", rec.matching_size as f64)
            .set("unmatched", rec.unmatched as f64);
        if rec.ratio.is_finite() {
            r.set("ratio", rec.ratio);
        }
        Ok(r)
    })?;
    let threshold = cfg.threshold.unwrap_or(0.2);
    let mut out = Outcome::new(
        records,
        vec![Check { metric: "failure_rate".into(), cmp: Cmp::AtLeast, threshold, scope: Scope::Mean }],
    );
    out.notes.push(format!(
        "{} nodes, {} failure regions, budget {budget}",
        inst.graph.node_count(),
        inst.meta.failure_regions.len()
    ));
    Ok(out)
}

/// The documented process grid: `(tail, process)` pairs run at `t` steps.
pub fn martingale_grid() -> Vec<(Tail, Process)> {
    let sixth = Process::IidBernoulli { p: 1.0 / 6.0 };
    let half = Process::IidBernoulli { p: 0.5 };
    let switching = Process::Switching { low: 0.1, high: 0.3 };
    vec![
        (Tail::Upper, sixth),
        (Tail::Lower, sixth),
        (Tail::Upper, half),
        (Tail::Lower, half),
        (Tail::Upper, Process::Zero),
        (Tail::Upper, Process::Alternating { p: 1.0 / 6.0 }),
        (Tail::Upper, switching),
        (Tail::Lower, switching),
    ]
}

fn process_label(tail: Tail, p: &Process) -> String {
    let tail = match tail {
        Tail::Upper => "upper",
        Tail::Lower => "lower",
    };
    let p = match *p {
        Process::IidBernoulli { p } => format!("iid_bernoulli(p={p})"),
        Process::Zero => "zero".into(),
        Process::Alternating { p } => format!("alternating(p={p})"),
        Process::Switching { low, high } => format!("switching(low={low},high={high})"),
    };
    format!("{tail}/{p}")
}

fn run_martingale(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let grid = match cfg.single_process() {
        Some(p) => vec![(cfg.tail, p)],
        None => martingale_grid(),
    };
    let seed = cfg.seed();
    let reports = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(tail, process))| {
            let lambdas = cfg.lambdas.clone().unwrap_or_else(|| default_grid(tail, &process, cfg.t));
            let s = trial_seed(seed, i);
            Ok((s, mc_martingale_check(tail, process, cfg.t, &lambdas, cfg.trials, s)?))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut records = Vec::new();
    for (s, rep) in reports {
        for row in &rep.rows {
            let mut r = TrialRecord::new(records.len(), s);
            r.label = process_label(rep.tail, &rep.process);
            r.set("lambda", row.lambda)
                .set("empirical", row.empirical)
                .set("std_err", row.std_err)
                .set("bound", row.bound)
                .set("violated", flag(row.violated));
            records.push(r);
        }
    }
    let mut out = Outcome::new(records, vec![per_trial("violated", Cmp::AtMost, 0.0, 1.0)]);
    out.notes.push(format!("{} samples of S_t per row, t = {}", cfg.trials, cfg.t));
    Ok(out)
}
