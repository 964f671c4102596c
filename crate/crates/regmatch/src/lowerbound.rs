//! Randomized gadget instances on which any `r`-round algorithm leaves
//! unmatched nodes with constant probability per gadget pair.
//!
//! Node ids are a fixed function of the gadget layout; only the wiring between
//! gadgets and their anchors depends on the sampled orientations. An innermost
//! node's `r`-ball therefore has the same ids and ports in every orientation.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{validate, Graph, NodeId, Side};
use crate::luby::{color_code_bipartize, multi_round_luby};
use crate::matching::Matching;
use crate::rng::{self, derive_seed, stream};
use crate::warmup::{warmup_pipeline, WarmupParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Cycle,
    EvenDegree,
    GeneralDegree,
}

/// How one gadget was inserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Forwards,
    Backwards,
    /// `blue[s]` is the blue edge block used for the `s`-th blue base edge of
    /// the innermost node, likewise for red.
    Permuted { blue: [u8; 3], red: [u8; 2] },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LbParams {
    pub delta: usize,
    /// Gadget radius `r` (families 1 and 2) or edge gadget length `ρ` (family 3).
    pub r: usize,
    pub k: usize,
    pub x: usize,
    pub y: usize,
}

/// Everything about an instance except the graph itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub family: Family,
    pub params: LbParams,
    pub node_count: usize,
    pub orientations: Vec<Orientation>,
    /// One representative node per gadget.
    pub innermost_nodes: Vec<NodeId>,
    pub anchor_nodes: Vec<NodeId>,
    /// Nodes of each gadget pair (families 1 and 2) or gadget group (family 3);
    /// an unmatched node in a region counts as a failure of that region.
    pub failure_regions: Vec<Vec<NodeId>>,
}

#[derive(Debug, Clone)]
pub struct LowerBoundInstance {
    pub graph: Graph,
    pub meta: InstanceMetadata,
}

impl LowerBoundInstance {
    /// Expected node count from the family formula.
    pub fn formula_node_count(&self) -> usize {
        formula_node_count(self.meta.family, &self.meta.params)
    }

    /// Write the JSON sidecar.
    pub fn write_sidecar<W: Write>(&self, w: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(w, &self.meta)
    }
}

pub fn formula_node_count(family: Family, p: &LbParams) -> usize {
    match family {
        Family::Cycle => p.k * (2 * p.r + 2),
        Family::EvenDegree => p.k * (2 * p.r + 2) * (2 * p.delta + 1),
        Family::GeneralDegree => 4 * p.k + 10 * p.k * p.delta * p.r,
    }
}

/// Write `Δ = 3x + 2y`: `x = 0` for even `Δ`, `x = 1` for odd.
pub fn decompose_degree(delta: usize) -> Result<(usize, usize)> {
    if delta < 2 {
        return Err(Error::Domain(format!("Δ = {delta} must be at least 2")));
    }
    Ok(if delta % 2 == 0 { (0, delta / 2) } else { (1, (delta - 3) / 2) })
}

fn random_flips(k: usize, seed: u64) -> Vec<Orientation> {
    let mut rng = rng::bulk(seed, stream::ORIENTATION, 0);
    (0..k).map(|_| if rng.gen::<bool>() { Orientation::Forwards } else { Orientation::Backwards }).collect()
}

fn check_cycle_params(r: usize, k: usize) -> Result<()> {
    if r < 1 {
        return Err(Error::Range("gadget radius r must be at least 1".into()));
    }
    if k < 2 || k % 2 == 1 {
        return Err(Error::Parity(format!("gadget count k = {k} must be even and at least 2")));
    }
    Ok(())
}

/// Cycle skeleton shared by families 1 and 2.
struct CycleLayout {
    r: usize,
    k: usize,
    /// Cycle edges between skeleton positions.
    edges: Vec<(usize, usize)>,
    /// Skeleton nodes of each gadget pair region.
    regions: Vec<Vec<usize>>,
}

impl CycleLayout {
    fn gadget_node(&self, i: usize, j: usize) -> usize {
        i * (2 * self.r + 2) + j
    }

    /// Anchor between gadget `i` and gadget `i + 1`.
    fn anchor(&self, i: usize) -> usize {
        i * (2 * self.r + 2) + 2 * self.r + 1
    }

    fn new(r: usize, k: usize, orient: &[Orientation]) -> CycleLayout {
        let mut l = CycleLayout { r, k, edges: Vec::new(), regions: Vec::new() };
        for i in 0..k {
            for j in 0..2 * r {
                l.edges.push((l.gadget_node(i, j), l.gadget_node(i, j + 1)));
            }
            let prev = l.anchor((i + k - 1) % k);
            let next = l.anchor(i);
            let (first, last) = (l.gadget_node(i, 0), l.gadget_node(i, 2 * r));
            match orient[i] {
                Orientation::Forwards => l.edges.extend([(prev, first), (last, next)]),
                _ => l.edges.extend([(prev, last), (first, next)]),
            }
        }
        for p in 0..k / 2 {
            let (a, b) = (2 * p, 2 * p + 1);
            let mut reg = Vec::with_capacity(2 * r + 3);
            // Half of gadget `a` facing the shared anchor, then the anchor,
            // then the half of gadget `b` facing it.
            match orient[a] {
                Orientation::Forwards => reg.extend((r..=2 * r).map(|j| l.gadget_node(a, j))),
                _ => reg.extend((0..=r).map(|j| l.gadget_node(a, j))),
            }
            reg.push(l.anchor(a));
            match orient[b] {
                Orientation::Forwards => reg.extend((0..=r).map(|j| l.gadget_node(b, j))),
                _ => reg.extend((r..=2 * r).map(|j| l.gadget_node(b, j))),
            }
            l.regions.push(reg);
        }
        l
    }

    fn len(&self) -> usize {
        self.k * (2 * self.r + 2)
    }

    fn innermost(&self) -> Vec<usize> {
        (0..self.k).map(|i| self.gadget_node(i, self.r)).collect()
    }

    fn anchors(&self) -> Vec<usize> {
        (0..self.k).map(|i| self.anchor(i)).collect()
    }
}

/// `k` path gadgets of `2r + 1` nodes joined into one cycle through `k`
/// anchors, each gadget inserted forwards or backwards by a fair coin.
pub fn build_cycle_instance(r: usize, k: usize, seed: u64) -> Result<LowerBoundInstance> {
    check_cycle_params(r, k)?;
    build_cycle_instance_with(r, k, &random_flips(k, seed))
}

pub fn build_cycle_instance_with(r: usize, k: usize, orient: &[Orientation]) -> Result<LowerBoundInstance> {
    check_cycle_params(r, k)?;
    check_flip_list(orient, k)?;
    let l = CycleLayout::new(r, k, orient);
    let n = l.len();
    let sides = (0..n).map(|v| if v % 2 == 0 { Side::L } else { Side::R }).collect();
    // Ids alternate parity along the cycle in every orientation.
    let graph = Graph::from_edges(n, &l.edges, Some(sides))?;
    let meta = InstanceMetadata {
        family: Family::Cycle,
        params: LbParams { delta: 2, r, k, x: 0, y: 1 },
        node_count: n,
        orientations: orient.to_vec(),
        innermost_nodes: l.innermost(),
        anchor_nodes: l.anchors(),
        failure_regions: l.regions.clone(),
    };
    finish(graph, meta)
}

fn check_flip_list(orient: &[Orientation], k: usize) -> Result<()> {
    if orient.len() != k || orient.iter().any(|o| matches!(o, Orientation::Permuted { .. })) {
        return Err(Error::ConstructionFailure(format!("need {k} forwards/backwards orientations")));
    }
    Ok(())
}

fn finish(graph: Graph, meta: InstanceMetadata) -> Result<LowerBoundInstance> {
    let inst = LowerBoundInstance { graph, meta };
    let rep = validate(&inst.graph);
    let expected = inst.formula_node_count();
    if !rep.is_regular || rep.regular_degree != Some(inst.meta.params.delta) || !rep.is_bipartite || rep.node_count != expected {
        return Err(Error::ConstructionFailure(format!(
            "{:?} instance failed validation: n = {} (expected {expected}), regular = {:?}, bipartite = {}",
            inst.meta.family, rep.node_count, rep.regular_degree, rep.is_bipartite
        )));
    }
    Ok(inst)
}

/// The cycle construction with every node replaced by a node gadget
/// `ℓ_1..ℓ_Δ, r_1..r_{Δ+1}` (`ℓ_{j'}` joined to `r_j` unless `j' ∈ {2j-1, 2j}`),
/// and every cycle edge `{c, c'}` replaced by `r^c_j - r^{c'}_j` for `j ≤ Δ/2`.
pub fn build_even_degree_instance(delta: usize, r: usize, k: usize, seed: u64) -> Result<LowerBoundInstance> {
    check_cycle_params(r, k)?;
    build_even_degree_instance_with(delta, r, k, &random_flips(k, seed))
}

pub fn build_even_degree_instance_with(
    delta: usize,
    r: usize,
    k: usize,
    orient: &[Orientation],
) -> Result<LowerBoundInstance> {
    if delta < 2 || delta % 2 == 1 {
        return Err(Error::Parity(format!("Δ = {delta} must be even and at least 2")));
    }
    check_cycle_params(r, k)?;
    check_flip_list(orient, k)?;
    let l = CycleLayout::new(r, k, orient);
    let block = 2 * delta + 1;
    let ell = |c: usize, j: usize| c * block + (j - 1);
    let rr = |c: usize, j: usize| c * block + delta + (j - 1);
    let n = l.len() * block;
    let mut edges = Vec::with_capacity(n * delta / 2);
    let mut sides = vec![Side::L; n];
    for c in 0..l.len() {
        // Skeleton position parity equals id parity, so this is a 2-coloring.
        let r_side = if c % 2 == 0 { Side::R } else { Side::L };
        for jp in 1..=delta {
            sides[ell(c, jp)] = r_side.flip();
            for j in 1..=delta + 1 {
                if jp != 2 * j - 1 && jp != 2 * j {
                    edges.push((ell(c, jp), rr(c, j)));
                }
            }
        }
        for j in 1..=delta + 1 {
            sides[rr(c, j)] = r_side;
        }
    }
    for &(a, b) in &l.edges {
        for j in 1..=delta / 2 {
            edges.push((rr(a, j), rr(b, j)));
        }
    }
    let graph = Graph::from_edges(n, &edges, Some(sides))?;
    let expand = |v: usize| (0..block).map(move |t| v * block + t);
    let meta = InstanceMetadata {
        family: Family::EvenDegree,
        params: LbParams { delta, r, k, x: 0, y: delta / 2 },
        node_count: n,
        orientations: orient.to_vec(),
        innermost_nodes: l.innermost().into_iter().map(|c| ell(c, 1)).collect(),
        anchor_nodes: l.anchors().into_iter().map(|c| ell(c, 1)).collect(),
        failure_regions: l.regions.iter().map(|reg| reg.iter().flat_map(|&c| expand(c)).collect()).collect(),
    };
    finish(graph, meta)
}

const BLUE: [(usize, usize); 6] = [(1, 1), (2, 1), (2, 2), (3, 3), (4, 3), (4, 4)];
const RED: [(usize, usize); 4] = [(1, 2), (2, 3), (3, 4), (4, 1)];

fn random_permutations(gadgets: usize, seed: u64) -> Vec<Orientation> {
    let mut rng = rng::bulk(seed, stream::ORIENTATION, 0);
    (0..gadgets)
        .map(|_| {
            let mut blue = [0u8, 1, 2];
            let mut red = [0u8, 1];
            blue.shuffle(&mut rng);
            red.shuffle(&mut rng);
            Orientation::Permuted { blue, red }
        })
        .collect()
}

fn check_general_params(delta: usize, rho: usize, k: usize) -> Result<()> {
    decompose_degree(delta)?;
    if rho < 2 || rho % 2 == 1 {
        return Err(Error::Parity(format!("edge gadget length ρ = {rho} must be even and at least 2")));
    }
    if k < 4 || k % 4 != 0 {
        return Err(Error::Parity(format!("layer count k = {k} must be a positive multiple of 4")));
    }
    Ok(())
}

/// Layered degree-5 base graph on `4k` nodes whose blue edges become edge
/// gadgets of induced degree `x` and red edges of induced degree `y`. Each
/// even-layer node with its five incident edge gadgets forms one gadget; the
/// three blue and the two red edge gadgets are attached in a random order.
pub fn build_general_degree_instance(delta: usize, rho: usize, k: usize, seed: u64) -> Result<LowerBoundInstance> {
    check_general_params(delta, rho, k)?;
    build_general_degree_instance_with(delta, rho, k, &random_permutations(2 * k, seed))
}

/// `orient[g]` is the insertion of the gadget around `v^{2g+2, j}` for
/// `j = g mod 4 + 1`, i.e. gadgets are listed layer by layer.
pub fn build_general_degree_instance_with(
    delta: usize,
    rho: usize,
    k: usize,
    orient: &[Orientation],
) -> Result<LowerBoundInstance> {
    check_general_params(delta, rho, k)?;
    let (x, y) = decompose_degree(delta)?;
    let gadgets = 2 * k;
    if orient.len() != gadgets || orient.iter().any(|o| !matches!(o, Orientation::Permuted { .. })) {
        return Err(Error::ConstructionFailure(format!("need {gadgets} permutation orientations")));
    }
    // Base node v^{i,j}, 1-based layer and column.
    let base = |i: usize, j: usize| (i - 1) * 4 + (j - 1);
    let block_len = delta * rho;
    let blocks_start = 4 * k;
    // Gadget g owns blocks 5g..5g+5: three blue then two red.
    let gadget_of = |i: usize, j: usize| ((i / 2) - 1) * 4 + (j - 1);
    let n = 4 * k + 10 * k * block_len;
    let mut edges = Vec::with_capacity(n * delta / 2);
    let mut sides = vec![Side::L; n];
    for i in 1..=k {
        for j in 1..=4 {
            sides[base(i, j)] = if i % 2 == 0 { Side::L } else { Side::R };
        }
    }
    // Incident base edges of each gadget, in canonical order, per color.
    let mut blue_of: Vec<Vec<usize>> = vec![Vec::new(); gadgets];
    let mut red_of: Vec<Vec<usize>> = vec![Vec::new(); gadgets];
    let mut anchor_side = Vec::new();
    for i in 1..=k {
        let ip = i % k + 1;
        for (col, pairs) in [(0, &BLUE[..]), (1, &RED[..])] {
            for &(j, jp) in pairs {
                let (inner, outer) = if i % 2 == 0 { ((i, j), (ip, jp)) } else { ((ip, jp), (i, j)) };
                let g = gadget_of(inner.0, inner.1);
                let id = anchor_side.len();
                anchor_side.push((base(inner.0, inner.1), base(outer.0, outer.1), col));
                if col == 0 {
                    blue_of[g].push(id);
                } else {
                    red_of[g].push(id);
                }
            }
        }
    }
    for g in 0..gadgets {
        let Orientation::Permuted { blue, red } = orient[g] else { unreachable!() };
        let mut chosen = Vec::new();
        for (s, &e) in blue_of[g].iter().enumerate() {
            chosen.push((e, 5 * g + blue[s] as usize, x));
        }
        for (s, &e) in red_of[g].iter().enumerate() {
            chosen.push((e, 5 * g + 3 + red[s] as usize, y));
        }
        for (e, b, z) in chosen {
            let (u, v, _) = anchor_side[e];
            let w = |layer: usize, col: usize| blocks_start + b * block_len + (layer - 1) * delta + (col - 1);
            for layer in 1..=rho {
                let s = if layer % 2 == 1 { sides[u].flip() } else { sides[u] };
                for col in 1..=delta {
                    sides[w(layer, col)] = s;
                }
            }
            for layer in 1..rho {
                for a in 1..=delta {
                    if layer % 2 == 1 {
                        for c in 1..=delta {
                            if !(a == c && a <= z) {
                                edges.push((w(layer, a), w(layer + 1, c)));
                            }
                        }
                    } else if a <= z {
                        edges.push((w(layer, a), w(layer + 1, a)));
                    }
                }
            }
            for col in 1..=z {
                edges.push((u, w(1, col)));
                edges.push((v, w(rho, col)));
            }
        }
    }
    let graph = Graph::from_edges(n, &edges, Some(sides))?;
    let gadget_nodes = |g: usize| -> Vec<NodeId> {
        let inner = base(2 * (g / 4) + 2, g % 4 + 1);
        std::iter::once(inner)
            .chain((5 * g * block_len..5 * (g + 1) * block_len).map(|t| blocks_start + t))
            .collect()
    };
    let innermost_nodes: Vec<NodeId> = (0..gadgets).map(|g| base(2 * (g / 4) + 2, g % 4 + 1)).collect();
    let anchor_nodes: Vec<NodeId> = (1..=k).step_by(2).flat_map(|i| (1..=4).map(move |j| base(i, j))).collect();
    let mut failure_regions = Vec::new();
    for grp in 1..=k / 4 {
        let mut reg = vec![base(4 * grp - 1, 1)];
        for (i, j) in [(4 * grp - 2, 1), (4 * grp - 2, 2), (4 * grp - 2, 4), (4 * grp, 1), (4 * grp, 2)] {
            reg.extend(gadget_nodes(gadget_of(i, j)));
        }
        failure_regions.push(reg);
    }
    let meta = InstanceMetadata {
        family: Family::GeneralDegree,
        params: LbParams { delta, r: rho, k, x, y },
        node_count: n,
        orientations: orient.to_vec(),
        innermost_nodes,
        anchor_nodes,
        failure_regions,
    };
    finish(graph, meta)
}

/// Rebuild an instance of the same family and parameters with fresh
/// orientations.
pub fn rebuild(meta: &InstanceMetadata, seed: u64) -> Result<LowerBoundInstance> {
    let p = &meta.params;
    match meta.family {
        Family::Cycle => build_cycle_instance(p.r, p.k, seed),
        Family::EvenDegree => build_even_degree_instance(p.delta, p.r, p.k, seed),
        Family::GeneralDegree => build_general_degree_instance(p.delta, p.r, p.k, seed),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryAlgo {
    /// `budget` rounds of one-round Luby with removal.
    LubyMulti,
    /// Color coding, then `budget` Luby rounds.
    Fast,
    /// The augmenting-path matcher at ε = 0.3, cut off after `budget` phases.
    Warmup,
}

impl std::str::FromStr for AdversaryAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<AdversaryAlgo> {
        match s {
            "luby_multi" => Ok(AdversaryAlgo::LubyMulti),
            "fast" => Ok(AdversaryAlgo::Fast),
            "warmup" => Ok(AdversaryAlgo::Warmup),
            _ => Err(Error::Domain(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Run `algo` truncated after `budget` rounds or phases.
pub fn run_truncated(g: &Graph, algo: AdversaryAlgo, budget: usize, seed: u64) -> Result<Matching> {
    Ok(match algo {
        AdversaryAlgo::LubyMulti => multi_round_luby(g, budget, seed, None).0,
        AdversaryAlgo::Fast => {
            let h = color_code_bipartize(g, derive_seed(seed, stream::COLOR, 0));
            multi_round_luby(&h, budget, derive_seed(seed, stream::ROUND, 0), None).0
        }
        AdversaryAlgo::Warmup => {
            let mut p = WarmupParams::from_eps(0.3)?;
            p.phase_limit = Some(budget as u64);
            warmup_pipeline(g, &p, seed)?.matching
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryRecord {
    pub trial: usize,
    pub seed: u64,
    pub matching_size: usize,
    pub unmatched: usize,
    /// `(n/2)/|M|`; infinite for an empty matching.
    pub ratio: f64,
    pub region_failures: Vec<bool>,
}

impl AdversaryRecord {
    pub fn failure_rate(&self) -> f64 {
        if self.region_failures.is_empty() {
            return 0.0;
        }
        self.region_failures.iter().filter(|&&f| f).count() as f64 / self.region_failures.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub family: Family,
    pub params: LbParams,
    pub algo: AdversaryAlgo,
    pub round_budget: usize,
    pub records: Vec<AdversaryRecord>,
    pub mean_failure_rate: f64,
    pub ratio_above_one: f64,
}

/// One trial: fresh orientations and algorithm randomness from `trial_seed`.
pub fn adversary_single_trial(
    meta: &InstanceMetadata,
    algo: AdversaryAlgo,
    round_budget: usize,
    trial: usize,
    trial_seed: u64,
) -> Result<AdversaryRecord> {
    let inst = rebuild(meta, derive_seed(trial_seed, stream::ORIENTATION, 0))?;
    let m = run_truncated(&inst.graph, algo, round_budget, derive_seed(trial_seed, stream::ALGORITHM, 0))?;
    m.check_in(&inst.graph)?;
    let n = inst.graph.node_count();
    let opt = n / 2;
    let region_failures = inst.meta.failure_regions.iter().map(|reg| reg.iter().any(|&v| !m.is_matched(v))).collect();
    Ok(AdversaryRecord {
        trial,
        seed: trial_seed,
        matching_size: m.size(),
        unmatched: n - m.matched_nodes(),
        ratio: if m.size() == 0 { f64::INFINITY } else { opt as f64 / m.size() as f64 },
        region_failures,
    })
}

pub fn summarize(meta: &InstanceMetadata, algo: AdversaryAlgo, round_budget: usize, records: Vec<AdversaryRecord>) -> AdversaryReport {
    let t = records.len().max(1) as f64;
    AdversaryReport {
        family: meta.family,
        params: meta.params.clone(),
        algo,
        round_budget,
        mean_failure_rate: records.iter().map(AdversaryRecord::failure_rate).sum::<f64>() / t,
        ratio_above_one: records.iter().filter(|r| r.ratio > 1.0).count() as f64 / t,
        records,
    }
}

/// `trials` independent trials, each re-sampling the gadget orientations.
pub fn adversary_trial(
    inst: &LowerBoundInstance,
    algo: AdversaryAlgo,
    round_budget: usize,
    trials: usize,
    seed: u64,
) -> Result<AdversaryReport> {
    let records = (0..trials)
        .map(|t| adversary_single_trial(&inst.meta, algo, round_budget, t, derive_seed(seed, stream::TRIAL, t as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&inst.meta, algo, round_budget, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_counts() {
        assert_eq!(build_cycle_instance(1, 2, 0).unwrap().graph.node_count(), 8);
        assert_eq!(build_cycle_instance(1, 4, 0).unwrap().graph.node_count(), 16);
        let i = build_cycle_instance(3, 40, 5).unwrap();
        assert_eq!(i.graph.node_count(), 320);
        assert_eq!(i.meta.failure_regions.len(), 20);
        assert!(i.meta.failure_regions.iter().all(|r| r.len() == 9));
        assert!(matches!(build_cycle_instance(1, 3, 0), Err(Error::Parity(_))));
    }

    #[test]
    fn even_degree_counts() {
        assert_eq!(build_even_degree_instance(2, 1, 2, 0).unwrap().graph.node_count(), 40);
        assert_eq!(build_even_degree_instance(4, 1, 2, 0).unwrap().graph.node_count(), 72);
        assert_eq!(build_even_degree_instance(4, 2, 4, 1).unwrap().graph.node_count(), 216);
        assert!(build_even_degree_instance(3, 1, 2, 0).is_err());
    }

    #[test]
    fn general_degree_counts() {
        assert_eq!(build_general_degree_instance(3, 2, 4, 0).unwrap().graph.node_count(), 256);
        assert_eq!(build_general_degree_instance(5, 2, 4, 0).unwrap().graph.node_count(), 416);
        let i = build_general_degree_instance(2, 2, 4, 0).unwrap();
        assert_eq!(i.meta.params.x, 0);
        assert_eq!(i.meta.params.y, 1);
        assert_eq!(i.meta.failure_regions.len(), 1);
        assert!(build_general_degree_instance(3, 3, 4, 0).is_err());
        assert!(build_general_degree_instance(3, 2, 6, 0).is_err());
    }

    #[test]
    fn decompositions() {
        assert_eq!(decompose_degree(2).unwrap(), (0, 1));
        assert_eq!(decompose_degree(3).unwrap(), (1, 0));
        assert_eq!(decompose_degree(7).unwrap(), (1, 2));
        assert!(decompose_degree(1).is_err());
    }

    #[test]
    fn full_budget_leaves_few_failures() {
        let i = build_cycle_instance(1, 4, 0).unwrap();
        let rep = adversary_trial(&i, AdversaryAlgo::Warmup, 1_000_000, 5, 2).unwrap();
        assert!(rep.records.iter().all(|r| r.unmatched == 0));
    }
}
