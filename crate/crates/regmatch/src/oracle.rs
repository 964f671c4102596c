//! Exact maximum matchings used to score the approximate algorithms.
//!
//! Bipartite graphs go through Hopcroft-Karp and come back with a König
//! vertex cover of the same size. Small general graphs use an exhaustive
//! branch-and-bound over node subsets.

use std::collections::{HashMap, VecDeque};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, Side};
use crate::matching::Matching;
use crate::Rational;

/// A maximum matching together with a vertex cover of equal size.
#[derive(Debug, Clone)]
pub struct CertifiedMatching {
    pub matching: Matching,
    pub vertex_cover: Vec<NodeId>,
}

impl CertifiedMatching {
    /// The cover touches every edge and has the matching's size.
    pub fn verify(&self, g: &Graph) -> bool {
        let mut inc = vec![false; g.node_count()];
        for &v in &self.vertex_cover {
            inc[v] = true;
        }
        self.vertex_cover.len() == self.matching.size()
            && g.edges().iter().all(|&(a, b)| inc[a] || inc[b])
            && self.matching.check_in(g).is_ok()
    }
}

/// Maximum matching of a bipartite graph (sides taken from the graph or from
/// a 2-coloring), certified by König's theorem.
pub fn max_matching_bipartite(g: &Graph) -> Result<CertifiedMatching> {
    let side: Vec<Side> = match g.sides() {
        Some(s) => s.to_vec(),
        None => g.two_coloring().ok_or(Error::NotBipartite)?,
    };
    let n = g.node_count();
    let left: Vec<NodeId> = (0..n).filter(|&v| side[v] == Side::L).collect();
    let mut mate: Vec<Option<NodeId>> = vec![None; n];
    let mut dist = vec![u32::MAX; n];

    loop {
        // BFS layers from free left nodes over alternating paths.
        let mut queue = VecDeque::new();
        for &u in &left {
            if mate[u].is_none() {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = u32::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &w in g.neighbors(u) {
                match mate[w] {
                    None => found = true,
                    Some(x) if dist[x] == u32::MAX => {
                        dist[x] = dist[u] + 1;
                        queue.push_back(x);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }
        // Iterative DFS along the layering, one augmenting path per free root.
        let mut next_port = vec![0usize; n];
        for &root in &left {
            if mate[root].is_some() {
                continue;
            }
            let mut stack: Vec<NodeId> = vec![root];
            let mut augmented = false;
            while let Some(&u) = stack.last() {
                let nb = g.neighbors(u);
                if next_port[u] >= nb.len() {
                    dist[u] = u32::MAX;
                    stack.pop();
                    continue;
                }
                let w = nb[next_port[u]];
                next_port[u] += 1;
                match mate[w] {
                    None => {
                        // Flip the path: stack holds left nodes; each pairs with
                        // the right node it advanced through.
                        let mut right = w;
                        while let Some(l) = stack.pop() {
                            let prev = mate[l];
                            mate[l] = Some(right);
                            mate[right] = Some(l);
                            match prev {
                                Some(p) => right = p,
                                None => break,
                            }
                        }
                        augmented = true;
                        break;
                    }
                    Some(x) if dist[x] == dist[u] + 1 => stack.push(x),
                    _ => {}
                }
            }
            let _ = augmented;
        }
    }

    let mut m = Matching::new(n);
    for &u in &left {
        if let Some(w) = mate[u] {
            m.insert(u, w, 0).expect("mate table is a matching");
        }
    }

    // König: Z = nodes reachable from free left nodes by alternating paths.
    let mut in_z = vec![false; n];
    let mut queue: VecDeque<NodeId> = left.iter().copied().filter(|&u| mate[u].is_none()).collect();
    for &u in &queue {
        in_z[u] = true;
    }
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbors(u) {
            if !in_z[w] {
                in_z[w] = true;
                if let Some(x) = mate[w] {
                    if !in_z[x] {
                        in_z[x] = true;
                        queue.push_back(x);
                    }
                }
            }
        }
    }
    let vertex_cover = (0..n)
        .filter(|&v| (side[v] == Side::L && !in_z[v]) || (side[v] == Side::R && in_z[v]))
        .collect();
    Ok(CertifiedMatching { matching: m, vertex_cover })
}

/// Exact maximum matching size of a general graph with at most 64 nodes.
pub fn max_matching_exact_small(g: &Graph) -> Result<usize> {
    let n = g.node_count();
    if n > 64 {
        return Err(Error::TooLarge(format!("{n} nodes exceeds the 64-node limit")));
    }
    let adj: Vec<u64> = (0..n).map(|v| g.neighbors(v).iter().fold(0u64, |a, &w| a | (1 << w))).collect();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    // Nodes without neighbors never matter.
    let start = (0..n).filter(|&v| adj[v] != 0).fold(0u64, |a, v| a | (1 << v));
    let mut memo = HashMap::new();
    Ok(best_in(start & all, &adj, &mut memo))
}

fn best_in(mask: u64, adj: &[u64], memo: &mut HashMap<u64, usize>) -> usize {
    if mask.count_ones() < 2 {
        return 0;
    }
    if let Some(&b) = memo.get(&mask) {
        return b;
    }
    let v = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << v);
    let mut best = 0;
    let mut cand = adj[v] & rest;
    while cand != 0 {
        let w = cand.trailing_zeros() as usize;
        cand &= cand - 1;
        best = best.max(1 + best_in(rest & !(1 << w), adj, memo));
        if best as u32 == mask.count_ones() / 2 {
            break;
        }
    }
    if (best as u32) < rest.count_ones() / 2 {
        best = best.max(best_in(rest, adj, memo));
    }
    memo.insert(mask, best);
    best
}

/// `(1 - τ_e - τ_v - 2κ - 1/(D+1)) · n/2`, clamped at zero: the guaranteed
/// matching size among balanced edges of an almost regular graph.
pub fn folklore_bound(n: u64, tau_e: Rational, tau_v: Rational, kappa: Rational, d: Rational) -> Result<Rational> {
    let half = Rational::new(1, 2);
    for (name, x) in [("tau_e", tau_e), ("tau_v", tau_v), ("kappa", kappa)] {
        if x < Rational::zero() || x >= half {
            return Err(Error::Range(format!("{name} = {x} must lie in [0, 1/2)")));
        }
    }
    if d < Rational::one() {
        return Err(Error::Range(format!("D = {d} must be at least 1")));
    }
    let two = Rational::from_integer(2);
    let factor = Rational::one() - tau_e - tau_v - two * kappa - (d + Rational::one()).recip();
    let v = factor * Rational::new(n as i128, 2);
    Ok(if v < Rational::zero() { Rational::zero() } else { v })
}

/// `opt / |m|`, defined as 1 when both are zero.
pub fn approx_ratio(m: &Matching, opt: usize) -> Result<Rational> {
    ratio_of_sizes(m.size(), opt)
}

pub fn ratio_of_sizes(found: usize, opt: usize) -> Result<Rational> {
    match (found, opt) {
        (0, 0) => Ok(Rational::one()),
        (0, _) => Err(Error::DivisionByZero(format!("empty matching against optimum {opt}"))),
        _ => Ok(Rational::new(opt as i128, found as i128)),
    }
}

/// Check that the uniform point `x_e = x` lies in the matching polytope of
/// `g`: degree constraints at every node and odd-set constraints for every
/// odd node set of size at most `max_odd_set` (exhaustive, so small graphs only).
pub fn uniform_point_in_polytope(g: &Graph, x: Rational, max_odd_set: usize) -> bool {
    if x < Rational::zero() {
        return false;
    }
    let deg_ok = (0..g.node_count()).all(|v| x * Rational::from_integer(g.degree(v) as i128) <= Rational::one());
    if !deg_ok {
        return false;
    }
    let n = g.node_count();
    let mut chosen = Vec::new();
    odd_sets_ok(g, x, 0, n, max_odd_set, &mut chosen)
}

fn odd_sets_ok(g: &Graph, x: Rational, from: usize, n: usize, cap: usize, chosen: &mut Vec<NodeId>) -> bool {
    if chosen.len() % 2 == 1 && chosen.len() >= 3 {
        let inside = chosen
            .iter()
            .enumerate()
            .map(|(i, &a)| chosen[i + 1..].iter().filter(|&&b| g.has_edge(a, b)).count())
            .sum::<usize>();
        let lhs = x * Rational::from_integer(inside as i128);
        if lhs > Rational::new(chosen.len() as i128 - 1, 2) {
            return false;
        }
    }
    if chosen.len() == cap {
        return true;
    }
    for v in from..n {
        chosen.push(v);
        let ok = odd_sets_ok(g, x, v + 1, n, cap, chosen);
        chosen.pop();
        if !ok {
            return false;
        }
    }
    true
}
