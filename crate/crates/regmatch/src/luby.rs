//! One round of Luby's matching algorithm in its distributed form (random edge
//! ranks, local minima win) and its sequential form (random edge order, an
//! edge wins if no neighbor was drawn before it), plus the drivers built on
//! top of them.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{classify_alpha_regular, Graph, NodeId, Side};
use crate::matching::Matching;
use crate::rng::{self, derive_seed, stream};
use crate::sim::{Message, NodeProgram};

pub const DEFAULT_C_PRIME: u32 = 2;

/// Rank range `100 * m^(c'+2)`, saturating at `u128::MAX`.
pub fn rank_range(m: usize, c_prime: u32) -> u128 {
    let mut r: u128 = 100;
    for _ in 0..c_prime + 2 {
        r = match r.checked_mul(m.max(1) as u128) {
            Some(x) => x,
            None => return u128::MAX,
        };
    }
    r
}

/// Bits needed to send a value in `0..range`.
pub fn bits_for_range(range: u128) -> u32 {
    if range <= 1 {
        1
    } else {
        128 - (range - 1).leading_zeros()
    }
}

/// Edge ranks drawn uniformly from `1..=rank_range(m, c')`.
pub fn edge_ranks(g: &Graph, c_prime: u32, seed: u64) -> Vec<u128> {
    let r = rank_range(g.edge_count(), c_prime);
    (0..g.edge_count()).map(|e| rng::keyed(seed, stream::EDGE_RANK, e as u64).gen_range(1..=r)).collect()
}

/// Edges whose key is strictly below every adjacent edge's key.
pub fn local_minima<K: Ord + Copy>(g: &Graph, key: &[K]) -> Vec<usize> {
    let n = g.node_count();
    // Per node: smallest incident key and whether it is unique.
    let mut best: Vec<Option<(K, bool)>> = vec![None; n];
    for v in 0..n {
        for &e in g.incident_edges(v) {
            let k = key[e];
            best[v] = match best[v] {
                None => Some((k, true)),
                Some((b, _)) if k < b => Some((k, true)),
                Some((b, _)) if k == b => Some((b, false)),
                other => other,
            };
        }
    }
    let wins = |v: usize, k: K| matches!(best[v], Some((b, true)) if b == k);
    (0..g.edge_count())
        .filter(|&e| {
            let (a, b) = g.edge(e);
            wins(a, key[e]) && wins(b, key[e])
        })
        .collect()
}

/// One round of the distributed algorithm with ranks in `1..=100 m^(c'+2)`.
/// Tied ranks exclude both edges.
pub fn luby_round_distributed(g: &Graph, c_prime: u32, seed: u64) -> Matching {
    let ranks = edge_ranks(g, c_prime, seed);
    let mut m = Matching::new(g.node_count());
    for e in local_minima(g, &ranks) {
        let (a, b) = g.edge(e);
        m.insert(a, b, 1).expect("local minima are disjoint");
    }
    m
}

/// Uniformly random edge order.
pub fn edge_order(g: &Graph, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.edge_count()).collect();
    order.shuffle(&mut rng::bulk(seed, stream::EDGE_ORDER, 0));
    order
}

/// Sequential view: draw edges in random order; a drawn edge joins the
/// matching iff no adjacent edge was drawn earlier, matched or not.
pub fn luby_round_sequential(g: &Graph, seed: u64) -> Matching {
    seq_luby_over(g, &edge_order(g, seed))
}

/// The sequential rule applied to an explicit draw order.
pub fn seq_luby_over(g: &Graph, order: &[usize]) -> Matching {
    let mut touched = vec![false; g.node_count()];
    let mut m = Matching::new(g.node_count());
    for &e in order {
        let (a, b) = g.edge(e);
        if !touched[a] && !touched[b] {
            m.insert(a, b, 1).expect("untouched endpoints are free");
        }
        touched[a] = true;
        touched[b] = true;
    }
    m
}

/// Distance of every node from `u`, up to `max` (further nodes get `None`).
fn distances_from(g: &Graph, u: NodeId, max: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.node_count()];
    dist[u] = Some(0);
    for (i, layer) in g.distance_layers(u, max).into_iter().enumerate() {
        for v in layer {
            dist[v] = Some(i + 1);
        }
    }
    dist
}

/// The neighborhood of `u` as seen by the local sequential process.
#[derive(Debug, Clone)]
pub struct LocalView {
    /// `E_u`: edges between consecutive distance layers 0-1, 1-2 and 2-3.
    pub e_u: Vec<usize>,
    /// `A_u`: edges between layer 1 and layer 2.
    pub a_u: Vec<usize>,
    /// `|N²(u)|`.
    pub k: usize,
    dist: Vec<Option<usize>>,
}

impl LocalView {
    pub fn new(g: &Graph, u: NodeId) -> LocalView {
        let dist = distances_from(g, u, 3);
        let mut e_u = Vec::new();
        let mut a_u = Vec::new();
        for (e, &(a, b)) in g.edges().iter().enumerate() {
            let (Some(da), Some(db)) = (dist[a], dist[b]) else { continue };
            let (lo, hi) = (da.min(db), da.max(db));
            if hi == lo + 1 && hi <= 3 {
                e_u.push(e);
                if lo == 1 {
                    a_u.push(e);
                }
            }
        }
        let k = dist.iter().filter(|d| **d == Some(2)).count();
        LocalView { e_u, a_u, k, dist }
    }

    pub fn in_a_u(&self, a: NodeId, b: NodeId) -> bool {
        matches!((self.dist[a], self.dist[b]), (Some(1), Some(2)) | (Some(2), Some(1)))
    }
}

/// The local process around `u`: sequential Luby on `E_u`, keeping only the
/// matched edges of `A_u`.
pub fn seq_luby_local(g: &Graph, u: NodeId, seed: u64) -> Matching {
    let view = LocalView::new(g, u);
    let mut order = view.e_u.clone();
    order.shuffle(&mut rng::bulk(seed, stream::EDGE_ORDER, u as u64));
    seq_luby_local_over(g, &view, &order)
}

pub fn seq_luby_local_over(g: &Graph, view: &LocalView, order: &[usize]) -> Matching {
    let full = seq_luby_over(g, order);
    let mut m = Matching::new(g.node_count());
    for &(a, b) in full.edges() {
        if view.in_a_u(a, b) {
            m.insert(a, b, 1).expect("subset of a matching");
        }
    }
    m
}

/// Empirical total variation distance (half the L1 distance) between the
/// matching distributions of the distributed and sequential rounds.
pub fn tv_distance_estimate(g: &Graph, samples: usize, c_prime: u32, seed: u64) -> f64 {
    let mut hist: HashMap<Vec<(NodeId, NodeId)>, (u64, u64)> = HashMap::new();
    for i in 0..samples as u64 {
        let a = luby_round_distributed(g, c_prime, derive_seed(seed, 0, i));
        hist.entry(a.sorted_edges()).or_default().0 += 1;
        let b = luby_round_sequential(g, derive_seed(seed, 1, i));
        hist.entry(b.sorted_edges()).or_default().1 += 1;
    }
    let s = samples as f64;
    0.5 * hist.values().map(|&(x, y)| (x as f64 / s - y as f64 / s).abs()).sum::<f64>()
}

/// Keep the bichromatic edges under `colors`, labelling color `false` as `L`.
pub fn bipartize_with_colors(g: &Graph, colors: &[bool]) -> Graph {
    let keep = (0..g.edge_count()).filter(|&e| {
        let (a, b) = g.edge(e);
        colors[a] != colors[b]
    });
    let sides: Vec<Side> = colors.iter().map(|&c| if c { Side::R } else { Side::L }).collect();
    Graph::from_edges(g.node_count(), &keep.map(|e| g.edge(e)).collect::<Vec<_>>(), Some(sides))
        .expect("bichromatic edges cross the coloring")
}

/// Independent fair colors per node.
pub fn random_colors(n: usize, seed: u64) -> Vec<bool> {
    (0..n).map(|v| rng::keyed(seed, stream::COLOR, v as u64).gen()).collect()
}

/// Each node picks a fair color; monochromatic edges are dropped.
pub fn color_code_bipartize(g: &Graph, seed: u64) -> Graph {
    bipartize_with_colors(g, &random_colors(g.node_count(), seed))
}

/// Residual-graph statistics after one round of the multi-round driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSnapshot {
    pub round_index: usize,
    pub residual_node_count: usize,
    pub residual_edge_count: usize,
    pub matched_this_round: usize,
    pub degree_histogram: BTreeMap<usize, usize>,
    pub mean_degree: f64,
    /// Share of residual edges whose endpoints both have degree at most twice
    /// the mean degree.
    pub low_edge_fraction: f64,
    /// Share of residual nodes that are `(α_i, Δ_i)`-regular, when a schedule
    /// is supplied. An empty residual counts as fully regular.
    pub alpha_regular_fraction: Option<f64>,
}

fn snapshot(g: &Graph, round_index: usize, matched: usize, target: Option<(f64, f64)>) -> RoundSnapshot {
    let n = g.node_count();
    let mut hist = BTreeMap::new();
    for v in 0..n {
        *hist.entry(g.degree(v)).or_insert(0) += 1;
    }
    let mean = if n == 0 { 0.0 } else { 2.0 * g.edge_count() as f64 / n as f64 };
    let low = g
        .edges()
        .iter()
        .filter(|&&(a, b)| g.degree(a) as f64 <= 2.0 * mean && g.degree(b) as f64 <= 2.0 * mean)
        .count();
    let low_edge_fraction = if g.edge_count() == 0 { 1.0 } else { low as f64 / g.edge_count() as f64 };
    let alpha_regular_fraction = target.map(|(alpha, delta)| {
        if n == 0 {
            1.0
        } else {
            let d = delta.round().max(0.0) as usize;
            classify_alpha_regular(g, alpha, d).len() as f64 / n as f64
        }
    });
    RoundSnapshot {
        round_index,
        residual_node_count: n,
        residual_edge_count: g.edge_count(),
        matched_this_round: matched,
        degree_histogram: hist,
        mean_degree: mean,
        low_edge_fraction,
        alpha_regular_fraction,
    }
}

/// Run `rounds` rounds of the distributed algorithm, deleting matched nodes
/// after each. `schedule[i-1] = (α_i, Δ_i)` is the regularity target checked
/// after round `i`. Matched nodes carry their (1-based) round.
pub fn multi_round_luby(
    g: &Graph,
    rounds: usize,
    seed: u64,
    schedule: Option<&[(f64, f64)]>,
) -> (Matching, Vec<RoundSnapshot>) {
    multi_round_luby_with(g, rounds, seed, schedule, DEFAULT_C_PRIME)
}

pub fn multi_round_luby_with(
    g: &Graph,
    rounds: usize,
    seed: u64,
    schedule: Option<&[(f64, f64)]>,
    c_prime: u32,
) -> (Matching, Vec<RoundSnapshot>) {
    let mut m = Matching::new(g.node_count());
    let mut snaps = Vec::with_capacity(rounds);
    let mut cur = g.clone();
    let mut ids: Vec<NodeId> = (0..g.node_count()).collect();
    for i in 1..=rounds {
        let round = luby_round_distributed(&cur, c_prime, derive_seed(seed, stream::ROUND, i as u64));
        for &(a, b) in round.edges() {
            m.insert(ids[a], ids[b], i).expect("residual nodes are unmatched");
        }
        let res = crate::graph::remove_matched(&cur, &round).expect("round output is a matching");
        ids = res.old_of_new.iter().map(|&v| ids[v]).collect();
        cur = res.graph;
        let target = schedule.and_then(|s| s.get(i - 1).copied());
        snaps.push(snapshot(&cur, i, round.matched_nodes(), target));
    }
    (m, snaps)
}

/// One iteration of the local sequential process, observed before the draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivorStep {
    /// 1-based iteration.
    pub iteration: usize,
    /// `|E_i|`: edges of `A_u` with no drawn edge at either endpoint.
    pub surviving: usize,
    /// Drawn ("labeled") edges so far.
    pub labeled: usize,
    /// Largest number of labeled edges at one node of the closed 2-hop ball.
    pub max_labeled_at_node: usize,
    /// `|E_i| / (|E_u| - (i-1))`.
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivorTrajectory {
    pub k: usize,
    pub delta: usize,
    pub e_u: usize,
    pub a_u: usize,
    /// Stopping time `⌊k log2 Δ / 100⌋`, capped at `|E_u|`.
    pub stop: usize,
    /// Steps `1..=stop + 1`; the last one is the state after `stop` draws.
    pub steps: Vec<SurvivorStep>,
}

impl SurvivorTrajectory {
    /// Ratios `|E_i| / |E_{i-1}|` for `i = 2..=stop+1` where the denominator is positive.
    pub fn survival_ratios(&self) -> Vec<(usize, f64)> {
        self.steps
            .windows(2)
            .filter(|w| w[0].surviving > 0)
            .map(|w| (w[1].iteration, w[1].surviving as f64 / w[0].surviving as f64))
            .collect()
    }
}

/// Run the local sequential process around `u` up to its stopping time and
/// record the surviving-edge counts. `Δ` is the maximum degree of `g`.
pub fn instrument_survivors(g: &Graph, u: NodeId, seed: u64) -> SurvivorTrajectory {
    let view = LocalView::new(g, u);
    let delta = g.max_degree();
    let stop_raw = if delta <= 1 { 0.0 } else { view.k as f64 * (delta as f64).log2() / 100.0 };
    let stop = (stop_raw.floor() as usize).min(view.e_u.len());

    let mut pool = view.e_u.clone();
    let mut rng = rng::bulk(seed, stream::EDGE_ORDER, u as u64);
    let mut touched = vec![false; g.node_count()];
    let mut labeled_at = vec![0usize; g.node_count()];
    let in_ball = |v: NodeId| matches!(view.dist[v], Some(d) if d <= 2);
    let mut surviving = view.a_u.len();
    let mut max_labeled = 0;
    let mut steps = Vec::with_capacity(stop + 1);

    for i in 1..=stop + 1 {
        let remaining = view.e_u.len() - (i - 1);
        steps.push(SurvivorStep {
            iteration: i,
            surviving,
            labeled: i - 1,
            max_labeled_at_node: max_labeled,
            q: if remaining == 0 { 0.0 } else { surviving as f64 / remaining as f64 },
        });
        if i == stop + 1 {
            break;
        }
        // Partial Fisher-Yates: draw the i-th edge without replacement.
        let j = rng.gen_range(i - 1..pool.len());
        pool.swap(i - 1, j);
        let (a, b) = g.edge(pool[i - 1]);
        for x in [a, b] {
            labeled_at[x] += 1;
            if in_ball(x) {
                max_labeled = max_labeled.max(labeled_at[x]);
            }
            if !touched[x] {
                let killed = g.neighbors(x).iter().filter(|&&y| !touched[y] && view.in_a_u(x, y)).count();
                surviving -= killed;
                touched[x] = true;
            }
        }
    }
    SurvivorTrajectory { k: view.k, delta, e_u: view.e_u.len(), a_u: view.a_u.len(), stop, steps }
}

/// One round of the distributed algorithm as a node program.
///
/// Rank agreement without identifiers: each endpoint sends a uniform share in
/// `0..R` and the edge rank is `(a + b) mod R + 1`, which is uniform on
/// `1..=R`. Round 1 sends a one-bit claim on the locally minimal port, round 2
/// decides. Output is the matched port, if any.
#[derive(Debug, Clone, Copy)]
pub struct LubyOneRound {
    pub range: u128,
}

impl LubyOneRound {
    pub fn for_graph(g: &Graph, c_prime: u32) -> LubyOneRound {
        LubyOneRound { range: rank_range(g.edge_count(), c_prime) }
    }
}

#[derive(Debug, Clone)]
pub struct LubyNodeState {
    seed: u64,
    shares: Vec<u128>,
    claim: Option<usize>,
}

impl NodeProgram for LubyOneRound {
    type State = LubyNodeState;
    type Output = Option<usize>;

    fn init(&self, _node: NodeId, degree: usize, seed: u64) -> LubyNodeState {
        LubyNodeState { seed, shares: vec![0; degree], claim: None }
    }

    fn on_round(&self, s: &mut LubyNodeState, round: usize, inbox: &[Message], out: &mut [Message]) -> Option<Option<usize>> {
        let bits = bits_for_range(self.range);
        match round {
            0 => {
                if out.is_empty() {
                    return Some(None);
                }
                let mut rng = rng::keyed(s.seed, stream::EDGE_RANK, 0);
                for (p, m) in out.iter_mut().enumerate() {
                    s.shares[p] = rng.gen_range(0..self.range);
                    *m = Message::from_value(s.shares[p], bits);
                }
                None
            }
            1 => {
                let rank = |p: usize| {
                    let sum = s.shares[p] + inbox[p].value();
                    sum % self.range
                };
                let mut best: Option<(u128, usize, bool)> = None;
                for p in 0..inbox.len() {
                    let r = rank(p);
                    best = match best {
                        None => Some((r, p, true)),
                        Some((b, _, _)) if r < b => Some((r, p, true)),
                        Some((b, q, _)) if r == b => Some((b, q, false)),
                        other => other,
                    };
                }
                if let Some((_, p, true)) = best {
                    s.claim = Some(p);
                    out[p] = Message::from_value(1, 1);
                }
                None
            }
            _ => Some(s.claim.filter(|&p| !inbox[p].is_empty())),
        }
    }
}

/// Turn per-node matched-port outputs into a matching on `g`.
pub fn matching_from_ports(g: &Graph, outputs: &[Option<Option<usize>>], round: usize) -> Matching {
    let mut m = Matching::new(g.node_count());
    for v in 0..g.node_count() {
        if let Some(Some(p)) = outputs[v] {
            let w = g.neighbors(v)[p];
            if v < w {
                m.insert(v, w, round).expect("port outputs form a matching");
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::run_rounds;

    fn path(n: usize) -> Graph {
        let e: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Graph::from_edges(n, &e, None).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &e, None).unwrap()
    }

    fn star(leaves: usize) -> Graph {
        let e: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::from_edges(leaves + 1, &e, None).unwrap()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn rank_range_and_bits() {
        assert_eq!(rank_range(10, 2), 100 * 10_000);
        assert_eq!(bits_for_range(1 << 20), 20);
        assert_eq!(bits_for_range((1 << 20) + 1), 21);
        assert_eq!(rank_range(usize::MAX, 4), u128::MAX);
    }

    #[test]
    fn distributed_round_small_graphs() {
        let m = luby_round_distributed(&path(2), 2, 3);
        assert_eq!(m.size(), 1);
        for s in 0..50 {
            assert_eq!(luby_round_distributed(&cycle(3), 2, s).size(), 1);
            assert_eq!(luby_round_distributed(&star(5), 2, s).size(), 1);
        }
        assert!(luby_round_distributed(&Graph::empty(3), 2, 0).is_empty());
    }

    #[test]
    fn ties_exclude_both_edges() {
        let g = path(3);
        assert!(local_minima(&g, &[5u32, 5]).is_empty());
        assert_eq!(local_minima(&g, &[4u32, 5]), vec![0]);
    }

    #[test]
    fn sequential_order_enumeration_on_p4() {
        // Edges of P4: a = 01, b = 12, c = 23.
        let g = path(4);
        let mut counts: BTreeMap<Vec<(usize, usize)>, usize> = BTreeMap::new();
        for order in permutations(3) {
            *counts.entry(seq_luby_over(&g, &order).sorted_edges()).or_default() += 1;
        }
        assert_eq!(counts[&vec![(0, 1), (2, 3)]], 2);
        assert_eq!(counts[&vec![(1, 2)]], 2);
        assert_eq!(counts[&vec![(0, 1)]], 1);
        assert_eq!(counts[&vec![(2, 3)]], 1);
    }

    #[test]
    fn sequential_never_empty_on_c4() {
        for s in 0..100 {
            let k = luby_round_sequential(&cycle(4), s).size();
            assert!(k == 1 || k == 2);
        }
    }

    #[test]
    fn local_view_examples() {
        let s = star(3);
        let v = LocalView::new(&s, 0);
        assert!(v.a_u.is_empty());
        assert!(seq_luby_local(&s, 0, 1).is_empty());
        let p = path(3);
        let v = LocalView::new(&p, 0);
        assert_eq!(v.a_u, vec![1]);
        assert_eq!(v.e_u.len(), 2);
        let hits: usize = permutations(2)
            .iter()
            .map(|o| {
                let order: Vec<usize> = o.iter().map(|&i| v.e_u[i]).collect();
                seq_luby_local_over(&p, &v, &order).size()
            })
            .sum();
        assert_eq!(hits, 1);
    }

    #[test]
    fn color_coding_with_fixed_colors_keeps_bipartite_graph() {
        let g = cycle(6);
        let colors: Vec<bool> = (0..6).map(|v| v % 2 == 1).collect();
        let h = bipartize_with_colors(&g, &colors);
        assert_eq!(h.edges(), g.edges());
        assert!(h.sides().is_some());
    }

    #[test]
    fn multi_round_zero_and_one() {
        let g = cycle(4);
        let (m, snaps) = multi_round_luby(&g, 0, 1, None);
        assert!(m.is_empty() && snaps.is_empty());
        for s in 0..20 {
            let (m, snaps) = multi_round_luby(&g, 1, s, None);
            assert!(snaps[0].matched_this_round == 2 || snaps[0].matched_this_round == 4);
            assert_eq!(m.matched_nodes(), snaps[0].matched_this_round);
        }
    }

    #[test]
    fn survivors_on_path_and_star() {
        let t = instrument_survivors(&star(3), 0, 0);
        assert!(t.steps.iter().all(|s| s.surviving == 0));
        // u = 0 on the path 0-1-2: k = 1, Δ = 2, stop = 0, so only E_1 is recorded.
        let t = instrument_survivors(&path(3), 0, 0);
        assert_eq!(t.steps[0].surviving, 1);
    }

    #[test]
    fn node_program_matches_on_p3_and_respects_bit_bound() {
        let g = path(3);
        let prog = LubyOneRound::for_graph(&g, 2);
        let (mut first, mut ties) = (0, 0);
        for s in 0..400 {
            let t = run_rounds(&g, &prog, 5, s);
            assert!(t.finish_round.iter().all(|&f| f == Some(2)));
            assert!(t.max_message_bits <= bits_for_range(rank_range(2, 2)));
            let m = matching_from_ports(&g, &t.outputs, 1);
            // A rank tie at the middle node (probability 1/R) matches nothing.
            assert!(m.size() <= 1);
            ties += (m.size() == 0) as usize;
            first += m.is_matched(0) as usize;
        }
        assert!(ties <= 3);
        assert!((100..300).contains(&first));
    }
}
