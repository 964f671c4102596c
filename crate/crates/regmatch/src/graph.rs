//! Simple undirected graphs in compressed adjacency form, random regular
//! generators, degree validation and the edge-list text format.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::Matching;
use crate::rng::{self, stream};
use crate::Rational;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::L => Side::R,
            Side::R => Side::L,
        }
    }
}

/// Immutable simple graph with nodes `0..n`.
///
/// Edges are stored as `(u, v)` with `u < v`, sorted, and their index in that
/// list is the edge id. Adjacency lists are sorted by neighbor id and carry the
/// id of the edge behind each slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(NodeId, NodeId)>,
    offsets: Vec<usize>,
    nbrs: Vec<NodeId>,
    slot_edge: Vec<usize>,
    side: Option<Vec<Side>>,
}

impl Graph {
    /// Build a graph, rejecting loops, parallel edges, out-of-range ids, and
    /// (when `side` is given) edges that do not cross the bipartition.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)], side: Option<Vec<Side>>) -> Result<Graph> {
        let mut norm = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at {a}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("parallel edge ({}, {})", w[0].0, w[0].1)));
        }
        if let Some(s) = &side {
            if s.len() != n {
                return Err(Error::InvalidGraph("side labels length differs from n".into()));
            }
            if let Some(&(a, b)) = norm.iter().find(|&&(a, b)| s[a] == s[b]) {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) does not cross the bipartition")));
            }
        }
        Ok(Self::build_sorted(n, norm, side))
    }

    /// `edges` must already be normalized, sorted and simple.
    fn build_sorted(n: usize, edges: Vec<(NodeId, NodeId)>, side: Option<Vec<Side>>) -> Graph {
        let mut deg = vec![0usize; n];
        for &(a, b) in &edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + deg[v];
        }
        let mut fill = offsets[..n].to_vec();
        let mut nbrs = vec![0; 2 * edges.len()];
        let mut slot_edge = vec![0; 2 * edges.len()];
        // Edges are sorted by (min, max), so pushing both directions in edge
        // order leaves every adjacency list sorted.
        for (id, &(a, b)) in edges.iter().enumerate() {
            nbrs[fill[b]] = a;
            slot_edge[fill[b]] = id;
            fill[b] += 1;
        }
        for (id, &(a, b)) in edges.iter().enumerate() {
            nbrs[fill[a]] = b;
            slot_edge[fill[a]] = id;
            fill[a] += 1;
        }
        Graph { n, edges, offsets, nbrs, slot_edge, side }
    }

    pub fn empty(n: usize) -> Graph {
        Self::build_sorted(n, Vec::new(), None)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> (NodeId, NodeId) {
        self.edges[id]
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.nbrs[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Edge ids aligned with [`Graph::neighbors`].
    pub fn incident_edges(&self, v: NodeId) -> &[usize] {
        &self.slot_edge[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Start of `v`'s slot range in the flat adjacency array.
    pub fn slot_offset(&self, v: NodeId) -> usize {
        self.offsets[v]
    }

    pub fn edge_id(&self, u: NodeId, v: NodeId) -> Option<usize> {
        if u >= self.n || v >= self.n {
            return None;
        }
        self.neighbors(u).binary_search(&v).ok().map(|i| self.incident_edges(u)[i])
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edge_id(u, v).is_some()
    }

    /// Port number of `v` at `u` (its index in `u`'s sorted neighbor list).
    pub fn port_of(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.neighbors(u).binary_search(&v).ok()
    }

    pub fn sides(&self) -> Option<&[Side]> {
        self.side.as_deref()
    }

    pub fn with_sides(mut self, side: Vec<Side>) -> Result<Graph> {
        if side.len() != self.n {
            return Err(Error::InvalidGraph("side labels length differs from n".into()));
        }
        if let Some(&(a, b)) = self.edges.iter().find(|&&(a, b)| side[a] == side[b]) {
            return Err(Error::InvalidGraph(format!("edge ({a}, {b}) does not cross the bipartition")));
        }
        self.side = Some(side);
        Ok(self)
    }

    /// Nodes at distance exactly 1, 2, ... `depth` from `u`, layer by layer.
    pub fn distance_layers(&self, u: NodeId, depth: usize) -> Vec<Vec<NodeId>> {
        let mut seen = HashSet::new();
        seen.insert(u);
        let mut layers = Vec::with_capacity(depth);
        let mut frontier = vec![u];
        for _ in 0..depth {
            let mut next = Vec::new();
            for &x in &frontier {
                for &y in self.neighbors(x) {
                    if seen.insert(y) {
                        next.push(y);
                    }
                }
            }
            next.sort_unstable();
            layers.push(next.clone());
            frontier = next;
        }
        layers
    }

    /// A proper 2-coloring, lowest id of each component on side `L`, if one exists.
    pub fn two_coloring(&self) -> Option<Vec<Side>> {
        let mut color: Vec<Option<Side>> = vec![None; self.n];
        let mut queue = VecDeque::new();
        for s in 0..self.n {
            if color[s].is_some() {
                continue;
            }
            color[s] = Some(Side::L);
            queue.push_back(s);
            while let Some(x) = queue.pop_front() {
                let cx = color[x].unwrap();
                for &y in self.neighbors(x) {
                    match color[y] {
                        None => {
                            color[y] = Some(cx.flip());
                            queue.push_back(y);
                        }
                        Some(cy) if cy == cx => return None,
                        _ => {}
                    }
                }
            }
        }
        Some(color.into_iter().map(|c| c.unwrap()).collect())
    }

    /// Subgraph keeping the listed edge ids, on the same node set and sides.
    pub fn edge_subgraph(&self, keep: impl IntoIterator<Item = usize>) -> Graph {
        let mut ids: Vec<usize> = keep.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        let edges = ids.into_iter().map(|i| self.edges[i]).collect();
        Self::build_sorted(self.n, edges, self.side.clone())
    }

    /// Subgraph induced on `keep` with ids remapped to `0..keep.len()`.
    pub fn induced(&self, keep: &[bool]) -> Residual {
        let mut new_of_old = vec![None; self.n];
        let mut old_of_new = Vec::new();
        for v in 0..self.n {
            if keep[v] {
                new_of_old[v] = Some(old_of_new.len());
                old_of_new.push(v);
            }
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|&(a, b)| Some((new_of_old[a]?, new_of_old[b]?)))
            .collect();
        let side = self.side.as_ref().map(|s| old_of_new.iter().map(|&v| s[v]).collect());
        // Remapping is monotone, so sortedness is preserved.
        Residual { graph: Self::build_sorted(old_of_new.len(), edges, side), old_of_new, new_of_old }
    }
}

/// A graph derived from a host by deleting nodes, with both id maps.
#[derive(Debug, Clone)]
pub struct Residual {
    pub graph: Graph,
    pub old_of_new: Vec<NodeId>,
    pub new_of_old: Vec<Option<NodeId>>,
}

/// Exact degree statistics of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub node_count: usize,
    pub edge_count: usize,
    pub min_degree: usize,
    pub max_degree: usize,
    pub mean_degree: Rational,
    pub is_regular: bool,
    pub regular_degree: Option<usize>,
    pub is_bipartite: bool,
    pub degree_histogram: BTreeMap<usize, usize>,
}

pub fn validate(g: &Graph) -> DegreeReport {
    let n = g.node_count();
    let mut hist = BTreeMap::new();
    for v in 0..n {
        *hist.entry(g.degree(v)).or_insert(0) += 1;
    }
    let min_degree = hist.keys().next().copied().unwrap_or(0);
    let max_degree = hist.keys().next_back().copied().unwrap_or(0);
    let mean_degree = if n == 0 {
        Rational::from_integer(0)
    } else {
        Rational::new(2 * g.edge_count() as i128, n as i128)
    };
    let is_regular = min_degree == max_degree;
    DegreeReport {
        node_count: n,
        edge_count: g.edge_count(),
        min_degree,
        max_degree,
        mean_degree,
        is_regular,
        regular_degree: is_regular.then_some(min_degree),
        is_bipartite: g.two_coloring().is_some(),
        degree_histogram: hist,
    }
}

/// The common degree of a regular graph, or a `NotRegular` error.
pub fn require_regular(g: &Graph) -> Result<usize> {
    let mut it = (0..g.node_count()).map(|v| g.degree(v));
    let first = it.next().unwrap_or(0);
    let (mut min, mut max) = (first, first);
    for d in it {
        min = min.min(d);
        max = max.max(d);
    }
    if min == max {
        Ok(min)
    } else {
        Err(Error::NotRegular { min, max })
    }
}

/// Nodes `u` whose closed two-hop ball has all degrees in `[Δ(1-α), Δ(1+α)]`.
pub fn classify_alpha_regular(g: &Graph, alpha: f64, delta: usize) -> Vec<NodeId> {
    let lo = delta as f64 * (1.0 - alpha);
    let hi = delta as f64 * (1.0 + alpha);
    let n = g.node_count();
    let bad: Vec<bool> = (0..n)
        .map(|v| {
            let d = g.degree(v) as f64;
            d < lo || d > hi
        })
        .collect();
    // near[v]: v or one of its neighbors is bad. u qualifies iff neither u nor
    // any neighbor is near a bad node.
    let near: Vec<bool> = (0..n).map(|v| bad[v] || g.neighbors(v).iter().any(|&w| bad[w])).collect();
    (0..n).filter(|&u| !near[u] && g.neighbors(u).iter().all(|&w| !near[w])).collect()
}

/// Delete the matched nodes and their incident edges.
pub fn remove_matched(g: &Graph, m: &Matching) -> Result<Residual> {
    m.check_in(g)?;
    let keep: Vec<bool> = (0..g.node_count()).map(|v| !m.is_matched(v)).collect();
    Ok(g.induced(&keep))
}

/// Δ-regular bipartite graph on `n_side + n_side` nodes as a union of `delta`
/// random perfect matchings. Left nodes are `0..n_side`.
///
/// A permutation that would duplicate an existing edge is repaired by random
/// transpositions; a slot that cannot be repaired within 1000 passes fails.
pub fn gen_regular_bipartite(n_side: usize, delta: usize, seed: u64) -> Result<Graph> {
    if n_side == 0 {
        return Err(Error::Range("n_side must be positive".into()));
    }
    if delta > n_side {
        return Err(Error::Range(format!("delta {delta} exceeds n_side {n_side}")));
    }
    let mut rng = rng::bulk(seed, stream::GENERATOR, 0);
    let mut used: Vec<HashSet<usize>> = vec![HashSet::new(); n_side];
    for _slot in 0..delta {
        let mut perm: Vec<usize> = (0..n_side).collect();
        perm.shuffle(&mut rng);
        let mut passes = 0;
        loop {
            let bad: Vec<usize> = (0..n_side).filter(|&i| used[i].contains(&perm[i])).collect();
            if bad.is_empty() {
                break;
            }
            passes += 1;
            if passes > 1000 {
                return Err(Error::ConstructionFailure(format!(
                    "could not place a perfect matching for n_side = {n_side}, delta = {delta}"
                )));
            }
            for i in bad {
                if !used[i].contains(&perm[i]) {
                    continue;
                }
                let j = rng.gen_range(0..n_side);
                let before = used[i].contains(&perm[i]) as u8 + used[j].contains(&perm[j]) as u8;
                let after = used[i].contains(&perm[j]) as u8 + used[j].contains(&perm[i]) as u8;
                if after <= before {
                    perm.swap(i, j);
                }
            }
        }
        for i in 0..n_side {
            used[i].insert(perm[i]);
        }
    }
    let mut edges = Vec::with_capacity(n_side * delta);
    for (i, set) in used.iter().enumerate() {
        edges.extend(set.iter().map(|&j| (i, n_side + j)));
    }
    let side = (0..2 * n_side).map(|v| if v < n_side { Side::L } else { Side::R }).collect();
    Graph::from_edges(2 * n_side, &edges, Some(side))
}

/// Simple Δ-regular graph on `n` nodes from the configuration model.
///
/// Loops and repeated pairs are first removed by random double-edge swaps; if
/// that stalls the whole pairing is redrawn, up to 10000 times.
pub fn gen_regular_general(n: usize, delta: usize, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::Range("n must be positive".into()));
    }
    if delta >= n {
        return Err(Error::Range(format!("delta {delta} must be below n {n}")));
    }
    if (n * delta) % 2 == 1 {
        return Err(Error::Parity(format!("n * delta = {} is odd", n * delta)));
    }
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(delta)).collect();
    for attempt in 0..10_000u64 {
        let mut rng = rng::bulk(seed, stream::GENERATOR, attempt);
        stubs.shuffle(&mut rng);
        let mut pairs: Vec<(usize, usize)> = stubs.chunks_exact(2).map(|c| (c[0].min(c[1]), c[0].max(c[1]))).collect();
        if repair_pairing(&mut pairs, &mut rng, n) {
            return Graph::from_edges(n, &pairs, None);
        }
    }
    Err(Error::ConstructionFailure(format!("no simple pairing found for n = {n}, delta = {delta}")))
}

fn repair_pairing(pairs: &mut [(usize, usize)], rng: &mut impl Rng, n: usize) -> bool {
    use std::collections::HashMap;
    let mut count: HashMap<(usize, usize), u32> = HashMap::new();
    for &p in pairs.iter() {
        *count.entry(p).or_insert(0) += 1;
    }
    let is_bad = |p: (usize, usize), count: &HashMap<(usize, usize), u32>| p.0 == p.1 || count[&p] > 1;
    let m = pairs.len();
    let budget = 50 * (m + n) + 1000;
    let mut tries = 0;
    loop {
        let bad: Vec<usize> = (0..m).filter(|&i| is_bad(pairs[i], &count)).collect();
        if bad.is_empty() {
            return true;
        }
        for i in bad {
            if !is_bad(pairs[i], &count) {
                continue;
            }
            tries += 1;
            if tries > budget {
                return false;
            }
            let j = rng.gen_range(0..m);
            if j == i {
                continue;
            }
            let (a, b) = pairs[i];
            let (c, d) = pairs[j];
            let (x, y) = if rng.gen::<bool>() { ((a, c), (b, d)) } else { ((a, d), (b, c)) };
            let x = (x.0.min(x.1), x.0.max(x.1));
            let y = (y.0.min(y.1), y.0.max(y.1));
            if x.0 == x.1 || y.0 == y.1 || x == y {
                continue;
            }
            if count.get(&x).copied().unwrap_or(0) > 0 || count.get(&y).copied().unwrap_or(0) > 0 {
                continue;
            }
            for old in [pairs[i], pairs[j]] {
                let e = count.get_mut(&old).unwrap();
                *e -= 1;
                if *e == 0 {
                    count.remove(&old);
                }
            }
            pairs[i] = x;
            pairs[j] = y;
            count.insert(x, 1);
            count.insert(y, 1);
        }
    }
}

/// Write `"n m [bipartite]"` followed by one `"u v"` line per edge.
pub fn write_edge_list<W: Write>(g: &Graph, mut w: W) -> std::io::Result<()> {
    let tag = if g.sides().is_some() { " bipartite" } else { "" };
    writeln!(w, "{} {}{}", g.node_count(), g.edge_count(), tag)?;
    for &(a, b) in g.edges() {
        writeln!(w, "{a} {b}")?;
    }
    Ok(())
}

/// Parse the edge-list format. Blank lines and `#` comments are skipped. A
/// `bipartite` header sets sides from a 2-coloring and fails if none exists.
pub fn read_edge_list<R: BufRead>(r: R) -> Result<Graph> {
    let mut header: Option<(usize, usize, bool)> = None;
    let mut edges = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
        let body = line.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        let num = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse { line: lineno, msg: format!("bad integer {s:?}") })
        };
        match header {
            None => {
                let bip = match toks.len() {
                    2 => false,
                    3 if toks[2] == "bipartite" => true,
                    _ => return Err(Error::Parse { line: lineno, msg: "expected \"n m [bipartite]\"".into() }),
                };
                header = Some((num(toks[0])?, num(toks[1])?, bip));
            }
            Some(_) => {
                if toks.len() != 2 {
                    return Err(Error::Parse { line: lineno, msg: "expected \"u v\"".into() });
                }
                edges.push((num(toks[0])?, num(toks[1])?));
            }
        }
    }
    let (n, m, bip) = header.ok_or(Error::Parse { line: 0, msg: "missing header".into() })?;
    if edges.len() != m {
        return Err(Error::Parse { line: 0, msg: format!("header declares {m} edges, found {}", edges.len()) });
    }
    let g = Graph::from_edges(n, &edges, None)?;
    if bip {
        let side = g.two_coloring().ok_or(Error::NotBipartite)?;
        g.with_sides(side)
    } else {
        Ok(g)
    }
}
