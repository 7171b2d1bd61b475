//! Undirected simple graphs, the four-way edge taxonomy, homophily ratios and
//! fairness-aware edge removal.
//!
//! Counts are kept as exact integers. Ratios are only turned into floats at
//! the API boundary so the closed-form shift identities in [`theory`] hold to
//! machine precision.

mod census;
mod edit;
pub mod io;
pub mod oracle;
pub mod theory;

pub use census::{classify_edge, homophily_ratios, EdgeCensus, EdgeType};
pub use edit::{fair_edge_remove, fair_edge_remove_budgeted, EditReport};

use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// Undirected simple graph. Edges are stored once as `(min, max)` pairs in
/// insertion order; `adjacency` is the sorted symmetric closure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Strict constructor: rejects self-loops, duplicates and out-of-range ids.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut adjacency = vec![Vec::new(); n];
        let mut canon = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::NodeOutOfRange { u, v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            canon.push((a, b));
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for (v, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_unstable();
            if let Some(w) = nbrs.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge(v.min(w[0]), v.max(w[0])));
            }
        }
        Ok(Self {
            n,
            edges: canon,
            adjacency,
        })
    }

    /// Lenient constructor used by loaders: drops self-loops and repeated or
    /// reversed pairs, returning how many were dropped.
    pub fn from_pairs_dedup(
        n: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<(Self, usize), GraphError> {
        let mut seen = std::collections::HashSet::new();
        let mut kept = Vec::new();
        let mut dropped = 0;
        for (u, v) in pairs {
            if u >= n || v >= n {
                return Err(GraphError::NodeOutOfRange { u, v, n });
            }
            let key = (u.min(v), u.max(v));
            if u == v || !seen.insert(key) {
                dropped += 1;
                continue;
            }
            kept.push(key);
        }
        Ok((Self::new(n, kept)?, dropped))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Copy of the graph without the edges at the given positions of [`Self::edges`].
    pub fn without_edge_indices(&self, drop: &[usize]) -> Self {
        let mut mask = vec![false; self.edges.len()];
        for &i in drop {
            mask[i] = true;
        }
        let kept = self
            .edges
            .iter()
            .zip(&mask)
            .filter(|(_, &d)| !d)
            .map(|(&e, _)| e);
        Self::new(self.n, kept).expect("subgraph of a valid graph is valid")
    }

    /// Relabel nodes: node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        Self::new(self.n, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))
            .expect("permutation preserves simplicity")
    }
}

/// Per-node class labels (partially observed), sensitive attributes (always
/// observed) and pseudo-labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLabels {
    pub class_label: Vec<Option<u8>>,
    pub sensitive: Vec<u8>,
    pub pseudo_label: Vec<Option<u8>>,
}

impl NodeLabels {
    pub fn new(class_label: Vec<Option<u8>>, sensitive: Vec<u8>) -> Self {
        let n = sensitive.len();
        assert_eq!(class_label.len(), n, "label arrays must share a length");
        Self {
            class_label,
            sensitive,
            pseudo_label: vec![None; n],
        }
    }

    /// All class labels known.
    pub fn fully_labeled(y: &[u8], s: &[u8]) -> Self {
        Self::new(y.iter().map(|&v| Some(v)).collect(), s.to_vec())
    }

    pub fn with_pseudo(mut self, pseudo: Vec<Option<u8>>) -> Self {
        assert_eq!(pseudo.len(), self.sensitive.len());
        self.pseudo_label = pseudo;
        self
    }

    pub fn len(&self) -> usize {
        self.sensitive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensitive.is_empty()
    }

    /// Ground truth where known, pseudo-label otherwise.
    pub fn effective_label(&self, v: usize) -> Option<u8> {
        self.class_label[v].or(self.pseudo_label[v])
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<(), GraphError> {
        if self.len() != n || self.class_label.len() != n || self.pseudo_label.len() != n {
            return Err(GraphError::LabelLength {
                expected: n,
                got: self.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_edges() {
        assert!(matches!(Graph::new(3, [(0, 0)]), Err(GraphError::SelfLoop(0))));
        assert!(matches!(
            Graph::new(3, [(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            Graph::new(3, [(0, 3)]),
            Err(GraphError::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn adjacency_is_symmetric_closure() {
        let g = Graph::new(4, [(2, 0), (1, 2), (3, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 2), (1, 2), (1, 3)]);
        assert_eq!(g.neighbors(2), &[0, 1]);
        assert_eq!(g.neighbors(1), &[2, 3]);
        let total: usize = (0..4).map(|v| g.degree(v)).sum();
        assert_eq!(total, 2 * g.m());
        for &(u, v) in g.edges() {
            assert!(g.has_edge(u, v) && g.has_edge(v, u));
        }
    }

    #[test]
    fn dedup_counts_dropped_pairs() {
        let (g, dropped) = Graph::from_pairs_dedup(3, [(0, 1), (1, 0), (1, 1), (1, 2), (0, 1)]).unwrap();
        assert_eq!(g.m(), 2);
        assert_eq!(dropped, 3);
    }

    #[test]
    fn effective_label_prefers_truth() {
        let l = NodeLabels::new(vec![Some(1), None, None], vec![0, 0, 1]).with_pseudo(vec![
            Some(0),
            Some(1),
            None,
        ]);
        assert_eq!(l.effective_label(0), Some(1));
        assert_eq!(l.effective_label(1), Some(1));
        assert_eq!(l.effective_label(2), None);
    }
}
