//! The poly(1/ε) matcher: a degree-reducing sampling stage followed by
//! repeated augmentation along short augmenting paths.
//!
//! Each phase collects every augmenting path with at most `k` edges as a
//! hyperedge, computes a fractional hypergraph matching, and rounds it: every
//! node draws one incident path (or nothing) with probability `τ·x(P)`, and a
//! path survives when some node drew it and no node drew a different path that
//! overlaps it. The surviving paths are vertex-disjoint and are flipped into the
//! matching.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{require_regular, Graph, NodeId};
use crate::matching::Matching;
use crate::rng::{self, derive_seed, stream};

/// Hyperedges are node sequences in path order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypergraph {
    pub node_count: usize,
    pub hyperedges: Vec<Vec<NodeId>>,
    pub f_bound: usize,
}

impl Hypergraph {
    pub fn new(node_count: usize, hyperedges: Vec<Vec<NodeId>>, f_bound: usize) -> Result<Hypergraph> {
        for (i, h) in hyperedges.iter().enumerate() {
            let mut s = h.clone();
            s.sort_unstable();
            s.dedup();
            if h.len() < 2 || s.len() != h.len() || h.len() > f_bound || h.iter().any(|&v| v >= node_count) {
                return Err(Error::InvalidGraph(format!("hyperedge {i} is malformed: {h:?}")));
            }
        }
        Ok(Hypergraph { node_count, hyperedges, f_bound })
    }

    pub fn len(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyperedges.is_empty()
    }

    /// For every node, the ids of hyperedges containing it.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.node_count];
        for (i, h) in self.hyperedges.iter().enumerate() {
            for &v in h {
                inc[v].push(i);
            }
        }
        inc
    }
}

/// Weight per hyperedge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalMatching {
    pub weights: Vec<f64>,
}

impl FractionalMatching {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Largest per-node load.
    pub fn max_load(&self, h: &Hypergraph) -> f64 {
        let mut load = vec![0.0; h.node_count];
        for (i, p) in h.hyperedges.iter().enumerate() {
            for &v in p {
                load[v] += self.weights[i];
            }
        }
        load.into_iter().fold(0.0, f64::max)
    }
}

/// Algorithm parameters derived from ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmupParams {
    pub eps: f64,
    /// `4/ε + 1` before rounding.
    pub k_exact: f64,
    /// Maximum augmenting path length in edges: `k_exact` rounded up to an odd
    /// integer, at least 3.
    pub k: usize,
    /// Phase count `⌈10^4/ε^4 + 1⌉`.
    pub phases: u64,
    /// `1/(4k²)` with the rounded `k`.
    pub tau: f64,
    /// Slack of the fractional matching guarantee.
    pub eps_fm: f64,
    /// Abort when a phase would hold more hyperedges than this.
    pub hyperedge_cap: usize,
    /// Optional override of `phases`.
    pub phase_limit: Option<u64>,
    /// Optional override of `k` (kept odd).
    pub max_path_edges: Option<usize>,
}

impl WarmupParams {
    pub fn from_eps(eps: f64) -> Result<WarmupParams> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::Range(format!("eps = {eps} must lie in (0, 1/2)")));
        }
        let k_exact = 4.0 / eps + 1.0;
        let mut k = (k_exact - 1e-9).ceil() as usize;
        if k % 2 == 0 {
            k += 1;
        }
        let k = k.max(3);
        let phases = (1e4 / eps.powi(4) + 1.0 - 1e-9).ceil() as u64;
        Ok(WarmupParams {
            eps,
            k_exact,
            k,
            phases,
            tau: 1.0 / (4.0 * (k * k) as f64),
            eps_fm: 0.5,
            hyperedge_cap: 10_000_000,
            phase_limit: None,
            max_path_edges: None,
        })
    }

    /// Path length actually used.
    pub fn path_edges(&self) -> usize {
        match self.max_path_edges {
            Some(k) => (k | 1).max(1),
            None => self.k,
        }
    }

    pub fn tau_used(&self) -> f64 {
        let k = self.path_edges();
        1.0 / (4.0 * (k * k) as f64)
    }

    pub fn phases_used(&self) -> u64 {
        self.phase_limit.unwrap_or(self.phases)
    }
}

/// Result of the sampling stage. Nodes dropped by the degree filter stay in
/// the id space as isolated nodes, so matchings transfer to the input graph.
#[derive(Debug, Clone)]
pub struct SampledGraph {
    pub graph: Graph,
    pub d: usize,
    pub sampled: bool,
    pub dropped_nodes: usize,
}

/// Edge sampling probability `p' = 3000/(Δε⁴)`, or `None` when
/// `Δ ≤ 6000/ε⁴` and the graph is kept whole.
pub fn sampling_probability(delta: usize, eps: f64) -> Option<f64> {
    if delta as f64 <= 6000.0 / eps.powi(4) {
        None
    } else {
        Some(3000.0 / (delta as f64 * eps.powi(4)))
    }
}

/// Keep the graph if `Δ ≤ 6000/ε⁴`; otherwise keep each edge with probability
/// `p'` and then drop every node whose sampled degree exceeds `2p'Δ`.
pub fn sampling_stage(g: &Graph, eps: f64, seed: u64) -> Result<SampledGraph> {
    let delta = require_regular(g)?;
    if delta == 0 {
        return Err(Error::Domain("sampling stage needs Δ ≥ 1".into()));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Range(format!("eps = {eps} must lie in (0, 1/2]")));
    }
    match sampling_probability(delta, eps) {
        None => Ok(SampledGraph { graph: g.clone(), d: delta, sampled: false, dropped_nodes: 0 }),
        Some(p) => Ok(sample_and_filter(g, p, 2.0 * p * delta as f64, seed)),
    }
}

/// Keep each edge with probability `p`, then remove all edges at nodes whose
/// sampled degree exceeds `cap`.
pub fn sample_and_filter(g: &Graph, p: f64, cap: f64, seed: u64) -> SampledGraph {
    let keep: Vec<usize> =
        (0..g.edge_count()).filter(|&e| rng::keyed(seed, stream::SAMPLING, e as u64).gen::<f64>() < p).collect();
    let g1 = g.edge_subgraph(keep);
    let ok: Vec<bool> = (0..g1.node_count()).map(|v| g1.degree(v) as f64 <= cap).collect();
    let dropped_nodes = ok.iter().filter(|&&b| !b).count();
    let kept: Vec<usize> = (0..g1.edge_count())
        .filter(|&e| {
            let (a, b) = g1.edge(e);
            ok[a] && ok[b]
        })
        .collect();
    SampledGraph { graph: g1.edge_subgraph(kept), d: cap.floor() as usize, sampled: true, dropped_nodes }
}

/// All augmenting paths with at most `k` edges, each listed once (from its
/// smaller endpoint).
pub fn enumerate_augmenting_paths(g: &Graph, m: &Matching, k: usize) -> Hypergraph {
    enumerate_augmenting_paths_capped(g, m, k, usize::MAX).expect("uncapped enumeration")
}

/// As [`enumerate_augmenting_paths`], returning `None` once more than `cap`
/// paths have been found.
pub fn enumerate_augmenting_paths_capped(g: &Graph, m: &Matching, k: usize, cap: usize) -> Option<Hypergraph> {
    let n = g.node_count();
    let mut on_path = vec![false; n];
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(k + 1);
    for s in 0..n {
        if m.is_matched(s) || g.degree(s) == 0 {
            continue;
        }
        path.clear();
        path.push(s);
        on_path[s] = true;
        if !extend(g, m, k, &mut path, &mut on_path, &mut out, cap) {
            return None;
        }
        on_path[s] = false;
    }
    Some(Hypergraph { node_count: n, hyperedges: out, f_bound: k + 1 })
}

/// `path` ends at a node that must now leave along a non-matching edge.
fn extend(
    g: &Graph,
    m: &Matching,
    k: usize,
    path: &mut Vec<NodeId>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<NodeId>>,
    cap: usize,
) -> bool {
    let x = *path.last().unwrap();
    let edges = path.len() - 1;
    if edges + 1 > k {
        return true;
    }
    for &w in g.neighbors(x) {
        if on_path[w] || m.partner(x) == Some(w) {
            continue;
        }
        match m.partner(w) {
            None => {
                if path[0] < w {
                    let mut p = path.clone();
                    p.push(w);
                    out.push(p);
                    if out.len() > cap {
                        return false;
                    }
                }
            }
            Some(y) => {
                if on_path[y] || edges + 3 > k {
                    continue;
                }
                path.push(w);
                path.push(y);
                on_path[w] = true;
                on_path[y] = true;
                let ok = extend(g, m, k, path, on_path, out, cap);
                on_path[w] = false;
                on_path[y] = false;
                path.truncate(path.len() - 2);
                if !ok {
                    return false;
                }
            }
        }
    }
    true
}

/// Water-filling fractional matching.
///
/// All unfrozen hyperedges share one weight that rises continuously. When a
/// node's load reaches `f/(f + eps_fm)` it saturates and its unfrozen
/// hyperedges freeze at the current weight. At the end every hyperedge has a
/// saturated node, so an integral matching of size ν has ν distinct saturated
/// nodes and the total weight is at least `ν/(f + eps_fm)`.
pub fn fractional_hypergraph_matching(h: &Hypergraph, eps_fm: f64) -> FractionalMatching {
    let f = h.f_bound.max(1) as f64;
    let target = f / (f + eps_fm);
    let inc = h.incidence();
    let mut live = inc.iter().map(Vec::len).collect::<Vec<_>>();
    let mut frozen_load = vec![0.0f64; h.node_count];
    let mut weight = vec![f64::NAN; h.len()];
    let mut version = vec![0u32; h.node_count];
    let mut heap = BinaryHeap::new();
    let level_of = |v: usize, live: &[usize], frozen: &[f64]| (target - frozen[v]).max(0.0) / live[v] as f64;
    for v in 0..h.node_count {
        if live[v] > 0 {
            heap.push(Reverse((OrderedFloat(level_of(v, &live, &frozen_load)), v, 0u32)));
        }
    }
    let mut level = 0.0f64;
    while let Some(Reverse((OrderedFloat(w), v, ver))) = heap.pop() {
        if ver != version[v] || live[v] == 0 {
            continue;
        }
        level = level.max(w);
        for &e in &inc[v] {
            if !weight[e].is_nan() {
                continue;
            }
            weight[e] = level;
            for &x in &h.hyperedges[e] {
                live[x] -= 1;
                frozen_load[x] += level;
                version[x] += 1;
                if live[x] > 0 && x != v {
                    heap.push(Reverse((OrderedFloat(level_of(x, &live, &frozen_load)), x, version[x])));
                }
            }
        }
    }
    FractionalMatching { weights: weight.into_iter().map(|w| if w.is_nan() { 0.0 } else { w }).collect() }
}

/// Per-node draw table: incident hyperedges with cumulative `τ·x` mass.
struct DrawTable {
    nodes: Vec<NodeId>,
    /// `(hyperedge, cumulative mass)` per listed node.
    choices: Vec<Vec<(usize, f64)>>,
}

impl DrawTable {
    fn new(h: &Hypergraph, x: &FractionalMatching, tau: f64) -> Result<DrawTable> {
        let inc = h.incidence();
        let mut nodes = Vec::new();
        let mut choices = Vec::new();
        for (v, list) in inc.iter().enumerate() {
            let mut cum = 0.0;
            let mut row = Vec::new();
            for &e in list {
                let p = tau * x.weights[e];
                if p > 0.0 {
                    cum += p;
                    row.push((e, cum));
                }
            }
            if cum > 1.0 + 1e-9 {
                return Err(Error::ProbabilityOverflow { node: v, total: cum });
            }
            if !row.is_empty() {
                nodes.push(v);
                choices.push(row);
            }
        }
        Ok(DrawTable { nodes, choices })
    }

    fn mass(&self, i: usize) -> f64 {
        self.choices[i].last().map_or(0.0, |c| c.1).min(1.0)
    }

    /// Draw for listed node `i` given uniform `u`; `None` is the empty choice.
    fn pick(&self, i: usize, u: f64) -> Option<usize> {
        let row = &self.choices[i];
        let j = row.partition_point(|&(_, c)| c <= u);
        row.get(j).map(|&(e, _)| e)
    }
}

/// Keep the drawn hyperedges that no other drawn hyperedge overlaps.
fn resolve(h: &Hypergraph, drawn: &[usize]) -> Vec<usize> {
    let mut owner: Vec<Option<usize>> = vec![None; h.node_count];
    let mut clash = vec![false; h.node_count];
    let mut ds = drawn.to_vec();
    ds.sort_unstable();
    ds.dedup();
    for &e in &ds {
        for &v in &h.hyperedges[e] {
            match owner[v] {
                None => owner[v] = Some(e),
                Some(o) if o != e => clash[v] = true,
                _ => {}
            }
        }
    }
    ds.into_iter().filter(|&e| h.hyperedges[e].iter().all(|&v| !clash[v])).collect()
}

/// Independent draws at every node, then conflict resolution. Returns the
/// kept hyperedge ids in increasing order.
pub fn round_fractional(h: &Hypergraph, x: &FractionalMatching, tau: f64, seed: u64) -> Result<Vec<usize>> {
    let table = DrawTable::new(h, x, tau)?;
    let drawn: Vec<usize> = table
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| table.pick(i, rng::keyed(seed, stream::NODE, v as u64).gen::<f64>()))
        .collect();
    Ok(resolve(h, &drawn))
}

/// Exact sampler for a run of rounding phases on a fixed hypergraph: skips the
/// phases in which every node draws nothing (they change nothing) and samples
/// the next phase conditioned on some node drawing.
struct PhaseSampler {
    table: DrawTable,
    /// `ln P[all nodes draw nothing]`.
    ln_idle: f64,
    /// `P[first drawing node is listed node i]`, cumulative, unnormalized.
    first_cum: Vec<f64>,
}

impl PhaseSampler {
    fn new(table: DrawTable) -> PhaseSampler {
        let mut ln_idle = 0.0f64;
        let mut first_cum = Vec::with_capacity(table.nodes.len());
        let mut acc = 0.0;
        for i in 0..table.nodes.len() {
            let a = table.mass(i);
            acc += ln_idle.exp() * a;
            first_cum.push(acc);
            ln_idle += (-a).ln_1p();
        }
        PhaseSampler { table, ln_idle, first_cum }
    }

    fn active(&self) -> bool {
        self.ln_idle < 0.0
    }

    /// Number of idle phases before the next active one.
    fn idle_run(&self, rng: &mut impl Rng) -> u64 {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let g = (u.ln() / self.ln_idle).floor();
        if g.is_finite() && g < 1e18 {
            g as u64
        } else {
            u64::MAX
        }
    }

    /// Draws of one phase conditioned on at least one node drawing.
    fn active_phase(&self, h: &Hypergraph, rng: &mut impl Rng) -> Vec<usize> {
        let total = *self.first_cum.last().unwrap();
        let u = rng.gen::<f64>() * total;
        let first = self.first_cum.partition_point(|&c| c <= u).min(self.first_cum.len() - 1);
        let mut drawn = Vec::new();
        let m = self.table.mass(first);
        if let Some(e) = self.table.pick(first, rng.gen::<f64>() * m) {
            drawn.push(e);
        }
        for i in first + 1..self.table.nodes.len() {
            if let Some(e) = self.table.pick(i, rng.gen::<f64>()) {
                drawn.push(e);
            }
        }
        resolve(h, &drawn)
    }
}

/// Flip vertex-disjoint augmenting paths into `m`; new edges get `round`.
pub fn augment(g: &Graph, m: &Matching, paths: &[Vec<NodeId>], round: usize) -> Result<Matching> {
    let mut used = vec![false; g.node_count()];
    for p in paths {
        if p.len() < 2 || p.len() % 2 == 1 {
            return Err(Error::NotAugmenting(format!("{p:?} has an even number of edges")));
        }
        if m.is_matched(p[0]) || m.is_matched(*p.last().unwrap()) {
            return Err(Error::NotAugmenting(format!("{p:?} has a matched endpoint")));
        }
        for (i, w) in p.windows(2).enumerate() {
            if !g.has_edge(w[0], w[1]) {
                return Err(Error::NotAugmenting(format!("({}, {}) is not an edge", w[0], w[1])));
            }
            let in_m = m.partner(w[0]) == Some(w[1]);
            if in_m != (i % 2 == 1) {
                return Err(Error::NotAugmenting(format!("{p:?} does not alternate")));
            }
        }
        for &v in p {
            if used[v] {
                return Err(Error::NotAugmenting(format!("paths overlap at node {v}")));
            }
            used[v] = true;
        }
    }
    let mut out = m.clone();
    for p in paths {
        for w in p.windows(2).skip(1).step_by(2) {
            out.remove(w[0], w[1]);
        }
        for w in p.windows(2).step_by(2) {
            out.insert(w[0], w[1], round)?;
        }
    }
    Ok(out)
}

/// Per-run bookkeeping of [`constant_match`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantMatchStats {
    pub params: WarmupParams,
    /// Logical phases accounted for (idle phases included).
    pub phases_run: u64,
    /// Phases in which at least one node drew a path.
    pub active_phases: u64,
    pub paths_augmented: usize,
    pub max_hyperedges: usize,
    /// The hyperedge cap was exceeded and the run stopped there.
    pub cap_triggered: bool,
    /// No augmenting path of length at most `k` was left; later phases are no-ops.
    pub exhausted: bool,
    /// `(phase, matching size)` after every phase that changed the matching.
    pub size_history: Vec<(u64, usize)>,
}

/// Phases of enumerate, fractional matching, rounding and augmentation.
pub fn constant_match(g: &Graph, eps: f64, seed: u64) -> Result<(Matching, ConstantMatchStats)> {
    constant_match_with(g, &WarmupParams::from_eps(eps)?, seed)
}

pub fn constant_match_with(g: &Graph, params: &WarmupParams, seed: u64) -> Result<(Matching, ConstantMatchStats)> {
    let k = params.path_edges();
    let tau = params.tau_used();
    let limit = params.phases_used();
    let mut m = Matching::new(g.node_count());
    let mut stats = ConstantMatchStats {
        params: params.clone(),
        phases_run: 0,
        active_phases: 0,
        paths_augmented: 0,
        max_hyperedges: 0,
        cap_triggered: false,
        exhausted: false,
        size_history: Vec::new(),
    };
    let mut phase: u64 = 0;
    let mut draw_index: u64 = 0;
    'outer: while phase < limit {
        let Some(h) = enumerate_augmenting_paths_capped(g, &m, k, params.hyperedge_cap) else {
            stats.cap_triggered = true;
            break;
        };
        stats.max_hyperedges = stats.max_hyperedges.max(h.len());
        if h.is_empty() {
            stats.exhausted = true;
            break;
        }
        let x = fractional_hypergraph_matching(&h, params.eps_fm);
        let sampler = PhaseSampler::new(DrawTable::new(&h, &x, tau)?);
        if !sampler.active() {
            break;
        }
        loop {
            let mut rng = rng::bulk(derive_seed(seed, stream::PHASE, draw_index), stream::PHASE, 0);
            draw_index += 1;
            let idle = sampler.idle_run(&mut rng);
            phase = phase.saturating_add(idle);
            if phase >= limit {
                break 'outer;
            }
            phase += 1;
            stats.active_phases += 1;
            let kept = sampler.active_phase(&h, &mut rng);
            if !kept.is_empty() {
                let paths: Vec<Vec<NodeId>> = kept.iter().map(|&e| h.hyperedges[e].clone()).collect();
                m = augment(g, &m, &paths, phase as usize)?;
                stats.paths_augmented += paths.len();
                stats.size_history.push((phase, m.size()));
                continue 'outer;
            }
        }
    }
    stats.phases_run = phase.min(limit);
    if stats.exhausted || stats.cap_triggered {
        stats.phases_run = phase;
    }
    Ok((m, stats))
}

#[derive(Debug, Clone)]
pub struct WarmupOutcome {
    pub matching: Matching,
    pub sampled: bool,
    pub d: usize,
    pub stats: ConstantMatchStats,
}

/// Sampling stage then [`constant_match_with`], both at accuracy `params.eps`.
pub fn warmup_pipeline(g: &Graph, params: &WarmupParams, seed: u64) -> Result<WarmupOutcome> {
    let s = sampling_stage(g, params.eps, derive_seed(seed, stream::SAMPLING, 0))?;
    let (m, stats) = constant_match_with(&s.graph, params, derive_seed(seed, stream::PHASE, 0))?;
    let mut out = Matching::new(g.node_count());
    for &(a, b) in m.edges() {
        out.insert(a, b, m.match_round(a).unwrap_or(0))?;
    }
    Ok(WarmupOutcome { matching: out, sampled: s.sampled, d: s.d, stats })
}

/// End-to-end matcher for target accuracy `eps`: runs the pipeline at `eps/8`.
pub fn warmup_full(g: &Graph, eps: f64, seed: u64) -> Result<WarmupOutcome> {
    warmup_full_with(g, eps, seed, |_| {})
}

/// As [`warmup_full`], letting the caller adjust the derived parameters
/// (path-length or phase overrides) before the run.
pub fn warmup_full_with(g: &Graph, eps: f64, seed: u64, adjust: impl FnOnce(&mut WarmupParams)) -> Result<WarmupOutcome> {
    let mut p = WarmupParams::from_eps(eps / 8.0)?;
    adjust(&mut p);
    warmup_pipeline(g, &p, seed)
}
