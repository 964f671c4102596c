use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Vertex-disjoint edge set with partner lookup and per-node match round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    edges: Vec<(NodeId, NodeId)>,
    partner: Vec<Option<NodeId>>,
    match_round: Vec<Option<usize>>,
}

impl Matching {
    pub fn new(n: usize) -> Matching {
        Matching { edges: Vec::new(), partner: vec![None; n], match_round: vec![None; n] }
    }

    /// Add `{u, v}` matched in `round`. Fails if either endpoint is taken.
    pub fn insert(&mut self, u: NodeId, v: NodeId, round: usize) -> Result<()> {
        let n = self.partner.len();
        if u >= n || v >= n || u == v {
            return Err(Error::InvalidMatching(format!("bad pair ({u}, {v})")));
        }
        if self.partner[u].is_some() || self.partner[v].is_some() {
            return Err(Error::InvalidMatching(format!("({u}, {v}) shares a matched endpoint")));
        }
        self.partner[u] = Some(v);
        self.partner[v] = Some(u);
        self.match_round[u] = Some(round);
        self.match_round[v] = Some(round);
        self.edges.push((u.min(v), u.max(v)));
        Ok(())
    }

    /// Remove `{u, v}` if present.
    pub fn remove(&mut self, u: NodeId, v: NodeId) -> bool {
        if self.partner[u] != Some(v) {
            return false;
        }
        self.partner[u] = None;
        self.partner[v] = None;
        self.match_round[u] = None;
        self.match_round[v] = None;
        let key = (u.min(v), u.max(v));
        self.edges.retain(|&e| e != key);
        true
    }

    pub fn node_count(&self) -> usize {
        self.partner.len()
    }

    pub fn size(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Edges in sorted order, convenient for comparing distributions.
    pub fn sorted_edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut e = self.edges.clone();
        e.sort_unstable();
        e
    }

    pub fn partner(&self, v: NodeId) -> Option<NodeId> {
        self.partner[v]
    }

    pub fn match_round(&self, v: NodeId) -> Option<usize> {
        self.match_round[v]
    }

    pub fn is_matched(&self, v: NodeId) -> bool {
        self.partner[v].is_some()
    }

    pub fn matched_nodes(&self) -> usize {
        2 * self.edges.len()
    }

    /// Check the type invariants and that every edge exists in `g`.
    pub fn check_in(&self, g: &Graph) -> Result<()> {
        if self.partner.len() != g.node_count() {
            return Err(Error::InvalidMatching("node count differs from graph".into()));
        }
        let mut seen = vec![false; g.node_count()];
        for &(a, b) in &self.edges {
            if !g.has_edge(a, b) {
                return Err(Error::InvalidMatching(format!("({a}, {b}) is not an edge")));
            }
            if seen[a] || seen[b] {
                return Err(Error::InvalidMatching(format!("({a}, {b}) shares an endpoint")));
            }
            seen[a] = true;
            seen[b] = true;
            if self.partner[a] != Some(b) || self.partner[b] != Some(a) {
                return Err(Error::InvalidMatching(format!("partner table disagrees at ({a}, {b})")));
            }
        }
        if self.partner.iter().filter(|p| p.is_some()).count() != 2 * self.edges.len() {
            return Err(Error::InvalidMatching("partner table has extra entries".into()));
        }
        Ok(())
    }

    /// True when no edge of `g` has both endpoints unmatched.
    pub fn is_maximal_in(&self, g: &Graph) -> bool {
        g.edges().iter().all(|&(a, b)| self.is_matched(a) || self.is_matched(b))
    }
}
