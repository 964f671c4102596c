//! The `O(log 1/ε)` approximate matcher, its parameter schedules, and a
//! maximal-matching driver measured by node-averaged finish time.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{require_regular, Graph, NodeId};
use crate::luby::{bits_for_range, color_code_bipartize, multi_round_luby, rank_range, RoundSnapshot, DEFAULT_C_PRIME};
use crate::matching::Matching;
use crate::rng::{self, stream};
use crate::sim::{node_averaged_time, run_rounds, Message, NodeProgram, Trace};
use crate::Rational;

/// `⌈log2 x⌉` for `x ≥ 1`, with a small tolerance so exact powers of two are
/// not pushed up by rounding.
pub fn ceil_log2(x: f64) -> usize {
    if x <= 1.0 {
        return 0;
    }
    (x.log2() - 1e-12).ceil() as usize
}

/// Rounds run by [`approx_match_fast`]: `⌈10·log2(1/ε)⌉`, at least 1.
pub fn fast_rounds(eps: f64) -> usize {
    ((10.0 * (1.0 / eps).log2()) - 1e-9).ceil().max(1.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub i: usize,
    pub alpha: f64,
    pub delta_fail: f64,
    /// `Δ/2^i`, exact.
    pub degree: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleTable {
    pub delta: u64,
    pub eps: f64,
    pub horizon: usize,
    /// Rows for `i = 0..=horizon`.
    pub rows: Vec<ScheduleRow>,
    /// `α_i ≤ 1/10` at every row.
    pub alpha_ok: bool,
    /// `δ_i ≤ exp(−Δ^{1/300})` at every row.
    pub delta_ok: bool,
    /// `ε ≥ Δ^{−1/c}` with `c = 10^5`.
    pub in_regime: bool,
}

impl ScheduleTable {
    /// `(α_i, Δ_i)` for rounds `1..=horizon`, the shape `multi_round_luby` takes.
    pub fn targets(&self) -> Vec<(f64, f64)> {
        self.rows[1..]
            .iter()
            .map(|r| (r.alpha, *r.degree.numer() as f64 / *r.degree.denom() as f64))
            .collect()
    }
}

/// Regime constant `c` in `ε ≥ Δ^{−1/c}`.
pub const REGIME_C: f64 = 1e5;

/// Evaluate the α and δ recursions up to `⌈10·log2(1/ε)⌉`. With `strict` set,
/// parameters outside the proven regime are rejected instead of flagged.
pub fn param_schedules(delta: u64, eps: f64, strict: bool) -> Result<ScheduleTable> {
    if delta < 2 {
        return Err(Error::Domain(format!("Δ = {delta} must be at least 2")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Range(format!("eps = {eps} must lie in (0, 1)")));
    }
    let d = delta as f64;
    let in_regime = eps >= d.powf(-1.0 / REGIME_C);
    if strict && !in_regime {
        return Err(Error::Domain(format!("eps = {eps} is below Δ^(-1/{REGIME_C})")));
    }
    let horizon = ((10.0 * (1.0 / eps).log2()) - 1e-12).ceil().max(0.0) as usize;
    if horizon > 120 {
        return Err(Error::Range(format!("horizon {horizon} is too long for exact Δ/2^i")));
    }
    let base = d.powf(-1.0 / 600.0);
    let mut alpha = base;
    let mut fail = (-d.powf(1.0 / 200.0)).exp();
    let fail_cap = (-d.powf(1.0 / 300.0)).exp();
    let mut rows = Vec::with_capacity(horizon + 1);
    for i in 0..=horizon {
        if i > 0 {
            alpha = 10.0 * alpha + base;
            let di = d / 2f64.powi(i as i32);
            fail = d * d * (fail + 2.0 * (-di.powf(1.0 / 100.0)).exp());
        }
        rows.push(ScheduleRow {
            i,
            alpha,
            delta_fail: fail,
            degree: Rational::new(delta as i128, 1i128 << i),
        });
    }
    let alpha_ok = rows.iter().all(|r| r.alpha <= 0.1);
    let delta_ok = rows.iter().all(|r| r.delta_fail <= fail_cap);
    Ok(ScheduleTable { delta, eps, horizon, rows, alpha_ok, delta_ok, in_regime })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastOutcome {
    pub matching: Matching,
    pub snapshots: Vec<RoundSnapshot>,
    pub rounds: usize,
    pub bichromatic_edges: usize,
    pub unmatched_fraction: f64,
}

/// Color-code the graph, then run `⌈10·log2(1/ε)⌉` rounds of one-round Luby
/// with removal.
pub fn approx_match_fast(g: &Graph, eps: f64, seed: u64) -> Result<FastOutcome> {
    approx_match_fast_with(g, eps, seed, None)
}

pub fn approx_match_fast_with(
    g: &Graph,
    eps: f64,
    seed: u64,
    schedule: Option<&[(f64, f64)]>,
) -> Result<FastOutcome> {
    require_regular(g)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Range(format!("eps = {eps} must lie in (0, 1)")));
    }
    let rounds = fast_rounds(eps);
    let h = color_code_bipartize(g, rng::derive_seed(seed, stream::COLOR, 0));
    let (matching, snapshots) = multi_round_luby(&h, rounds, rng::derive_seed(seed, stream::ROUND, 0), schedule);
    let n = g.node_count();
    let unmatched_fraction = if n == 0 { 0.0 } else { (n - matching.matched_nodes()) as f64 / n as f64 };
    Ok(FastOutcome { matching, snapshots, rounds, bichromatic_edges: h.edge_count(), unmatched_fraction })
}

/// Luby iterations of the first phase: `⌈200·log2 log2 Δ⌉`.
pub fn phase_one_iterations(delta: usize) -> usize {
    if delta < 2 {
        return 0;
    }
    let ll = (delta as f64).log2().log2();
    ((200.0 * ll) - 1e-9).ceil().max(0.0) as usize
}

/// Maximal matching as a message-passing program.
///
/// Round 0 exchanges random colors. Each later Luby iteration takes two rounds:
///
/// * round A: a node whose win bit crossed a win bit from the same neighbor is
///   matched, commits, and tells its other live neighbors. Everyone else sends
///   a random share on each port it wants to use this iteration.
/// * round B: ports that reported a match are dead; a node with no live port
///   left commits as unmatched. A port is used when both ends sent shares, the
///   edge rank is the sum of the shares mod `R`, and a node whose minimum is
///   unique sends a win bit on that port.
///
/// In the first phase a node only uses bichromatic edges. It moves to the
/// fallback phase, which uses every live edge, once it has no live bichromatic
/// edge or after [`phase_one_iterations`] iterations.
#[derive(Debug, Clone, Copy)]
pub struct NodeAvgMatching {
    pub range: u128,
    pub phase_one: usize,
}

impl NodeAvgMatching {
    pub fn for_graph(g: &Graph) -> NodeAvgMatching {
        NodeAvgMatching {
            range: rank_range(g.edge_count(), DEFAULT_C_PRIME),
            phase_one: phase_one_iterations(g.max_degree()),
        }
    }

    fn share_bits(&self) -> u32 {
        bits_for_range(self.range) + 1
    }
}

const LIVE: u8 = 1;
const BICHROMATIC: u8 = 2;
const SENT: u8 = 4;
const WON: u8 = 8;

#[derive(Debug, Clone)]
pub struct NodeAvgState {
    seed: u64,
    color: bool,
    port: Vec<u8>,
    shares: Vec<u128>,
    fallback: bool,
}

impl NodeProgram for NodeAvgMatching {
    type State = NodeAvgState;
    /// Matched port, or `None` when every neighbor got matched elsewhere.
    type Output = Option<usize>;

    fn init(&self, _node: NodeId, degree: usize, seed: u64) -> NodeAvgState {
        NodeAvgState { seed, color: false, port: vec![LIVE; degree], shares: vec![0; degree], fallback: false }
    }

    fn on_round(&self, s: &mut NodeAvgState, round: usize, inbox: &[Message], out: &mut [Message]) -> Option<Option<usize>> {
        if round == 0 {
            if out.is_empty() {
                return Some(None);
            }
            s.color = rng::keyed(s.seed, stream::COLOR, 0).gen();
            for m in out.iter_mut() {
                *m = Message::from_value(s.color as u128, 1);
            }
            return None;
        }
        let iteration = round.div_ceil(2);
        if round % 2 == 1 {
            if round == 1 {
                for (p, m) in inbox.iter().enumerate() {
                    if (m.value() == 1) != s.color {
                        s.port[p] |= BICHROMATIC;
                    }
                }
            } else {
                for (p, m) in inbox.iter().enumerate() {
                    if s.port[p] & WON != 0 && !m.is_empty() {
                        for (q, o) in out.iter_mut().enumerate() {
                            if q != p && s.port[q] & LIVE != 0 {
                                *o = Message::from_value(1, 1);
                            }
                        }
                        return Some(Some(p));
                    }
                }
            }
            if !s.fallback
                && (iteration > self.phase_one || s.port.iter().all(|&f| f & (LIVE | BICHROMATIC) != LIVE | BICHROMATIC))
            {
                s.fallback = true;
            }
            let mut rng = rng::keyed(s.seed, stream::ROUND, iteration as u64);
            for (p, o) in out.iter_mut().enumerate() {
                let f = &mut s.port[p];
                *f &= !(SENT | WON);
                if *f & LIVE != 0 && (s.fallback || *f & BICHROMATIC != 0) {
                    *f |= SENT;
                    s.shares[p] = rng.gen_range(0..self.range);
                    *o = Message::from_value(s.shares[p] << 1, self.share_bits());
                }
            }
            None
        } else {
            let mut best: Option<(u128, usize, bool)> = None;
            for (p, m) in inbox.iter().enumerate() {
                if m.is_empty() {
                    continue;
                }
                if m.value() & 1 == 1 {
                    s.port[p] &= !LIVE;
                    continue;
                }
                if s.port[p] & SENT == 0 {
                    continue;
                }
                let r = (s.shares[p] + (m.value() >> 1)) % self.range;
                best = match best {
                    Some((b, _, _)) if r < b => Some((r, p, true)),
                    Some((b, q, _)) if r == b => Some((b, q, false)),
                    None => Some((r, p, true)),
                    other => other,
                };
            }
            if s.port.iter().all(|&f| f & LIVE == 0) {
                return Some(None);
            }
            if let Some((_, p, true)) = best {
                if s.port[p] & LIVE != 0 {
                    s.port[p] |= WON;
                    out[p] = Message::from_value(1, 1);
                }
            }
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct NodeAvgOutcome {
    pub matching: Matching,
    pub trace: Trace<Option<usize>>,
    pub average: Rational,
    pub phase_one_iterations: usize,
}

/// Round budget generous enough that exhausting it signals a bug.
pub const NODE_AVG_BUDGET: usize = 1 << 20;

/// Run [`NodeAvgMatching`] to completion and check that the output is a
/// maximal matching. Match rounds are the nodes' finish rounds.
pub fn maximal_match_node_avg(g: &Graph, seed: u64) -> Result<NodeAvgOutcome> {
    require_regular(g)?;
    let prog = NodeAvgMatching::for_graph(g);
    let trace = run_rounds(g, &prog, NODE_AVG_BUDGET, seed);
    if trace.budget_exhausted {
        let unfinished = trace.finish_round.iter().filter(|f| f.is_none()).count();
        return Err(Error::UnfinishedTrace { unfinished, n: g.node_count() });
    }
    let mut m = Matching::new(g.node_count());
    for v in 0..g.node_count() {
        if let Some(Some(p)) = trace.outputs[v] {
            let w = g.neighbors(v)[p];
            let back = trace.outputs[w].flatten().map(|q| g.neighbors(w)[q]);
            if back != Some(v) {
                return Err(Error::InvalidMatching(format!("{v} and {w} disagree on their match")));
            }
            if v < w {
                m.insert(v, w, trace.finish_round[v].unwrap())?;
            }
        }
    }
    if !m.is_maximal_in(g) {
        return Err(Error::InvalidMatching("node-averaged driver ended with a non-maximal matching".into()));
    }
    let average = node_averaged_time(&trace)?;
    Ok(NodeAvgOutcome { matching: m, trace, average, phase_one_iterations: prog.phase_one })
}
