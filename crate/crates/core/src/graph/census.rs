use serde::{Deserialize, Serialize};

use super::{Graph, NodeLabels};
use crate::error::GraphError;

/// Edge category by agreement of class label and sensitive attribute across
/// the endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeType {
    /// same label, same sensitive
    I,
    /// same label, different sensitive
    II,
    /// different label, same sensitive (the removal target)
    III,
    /// different label, different sensitive
    IV,
}

impl EdgeType {
    pub const ALL: [EdgeType; 4] = [EdgeType::I, EdgeType::II, EdgeType::III, EdgeType::IV];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn same_class(self) -> bool {
        matches!(self, EdgeType::I | EdgeType::II)
    }

    pub fn same_sensitive(self) -> bool {
        matches!(self, EdgeType::I | EdgeType::III)
    }
}

pub fn classify_edge(y_u: u8, y_v: u8, s_u: u8, s_v: u8) -> EdgeType {
    debug_assert!(y_u <= 1 && y_v <= 1 && s_u <= 1 && s_v <= 1);
    match (y_u == y_v, s_u == s_v) {
        (true, true) => EdgeType::I,
        (true, false) => EdgeType::II,
        (false, true) => EdgeType::III,
        (false, false) => EdgeType::IV,
    }
}

/// Exact integer census of a labelled edge set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdgeCensus {
    pub m: u64,
    pub n_c: u64,
    pub n_s: u64,
    /// Counts indexed by [`EdgeType::index`].
    pub by_type: [u64; 4],
}

impl EdgeCensus {
    pub fn from_counts(by_type: [u64; 4]) -> Self {
        Self {
            m: by_type.iter().sum(),
            n_c: by_type[0] + by_type[1],
            n_s: by_type[0] + by_type[2],
            by_type,
        }
    }

    pub fn of(g: &Graph, labels: &NodeLabels) -> Result<Self, GraphError> {
        labels.check_len(g.n())?;
        let mut by_type = [0u64; 4];
        for &(u, v) in g.edges() {
            by_type[edge_type(labels, u, v)?.index()] += 1;
        }
        Ok(Self::from_counts(by_type))
    }

    pub fn count(&self, t: EdgeType) -> u64 {
        self.by_type[t.index()]
    }

    pub fn m_iii(&self) -> u64 {
        self.count(EdgeType::III)
    }

    pub fn hr_c(&self) -> Result<f64, GraphError> {
        if self.m == 0 {
            return Err(GraphError::UndefinedRatio);
        }
        Ok(self.n_c as f64 / self.m as f64)
    }

    pub fn hr_s(&self) -> Result<f64, GraphError> {
        if self.m == 0 {
            return Err(GraphError::UndefinedRatio);
        }
        Ok(self.n_s as f64 / self.m as f64)
    }

    /// Census over edges whose endpoints both carry an effective label;
    /// the second value counts the edges left out.
    pub fn of_labeled(g: &Graph, labels: &NodeLabels) -> Result<(Self, u64), GraphError> {
        labels.check_len(g.n())?;
        let mut by_type = [0u64; 4];
        let mut skipped = 0;
        for &(u, v) in g.edges() {
            match edge_type(labels, u, v) {
                Ok(t) => by_type[t.index()] += 1,
                Err(GraphError::MissingLabel(_)) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        Ok((Self::from_counts(by_type), skipped))
    }
}

pub(crate) fn edge_type(labels: &NodeLabels, u: usize, v: usize) -> Result<EdgeType, GraphError> {
    let yu = labels.effective_label(u).ok_or(GraphError::MissingLabel(u))?;
    let yv = labels.effective_label(v).ok_or(GraphError::MissingLabel(v))?;
    Ok(classify_edge(yu, yv, labels.sensitive[u], labels.sensitive[v]))
}

/// `(hr_c, hr_s)`: fraction of edges joining equal effective labels and equal
/// sensitive attributes.
pub fn homophily_ratios(g: &Graph, labels: &NodeLabels) -> Result<(f64, f64), GraphError> {
    let c = EdgeCensus::of(g, labels)?;
    Ok((c.hr_c()?, c.hr_s()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn taxonomy_examples() {
        assert_eq!(classify_edge(0, 0, 1, 1), EdgeType::I);
        assert_eq!(classify_edge(1, 0, 0, 0), EdgeType::III);
        assert_eq!(classify_edge(1, 0, 0, 1), EdgeType::IV);
        assert_eq!(classify_edge(1, 1, 0, 1), EdgeType::II);
    }

    #[test]
    fn uniform_labels_give_unit_ratios() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let l = NodeLabels::fully_labeled(&[1; 4], &[0; 4]);
        assert_eq!(homophily_ratios(&g, &l).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn empty_graph_ratio_is_an_error() {
        let g = Graph::new(3, []).unwrap();
        let l = NodeLabels::fully_labeled(&[0; 3], &[0; 3]);
        assert!(matches!(homophily_ratios(&g, &l), Err(GraphError::UndefinedRatio)));
    }

    #[test]
    fn labeled_census_skips_unlabeled_endpoints() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let l = NodeLabels::new(vec![Some(0), Some(0), None, Some(1)], vec![0, 1, 1, 1]);
        let (c, skipped) = EdgeCensus::of_labeled(&g, &l).unwrap();
        assert_eq!(skipped, 2);
        assert_eq!(c.by_type, [0, 1, 0, 0]);
    }

    #[test]
    fn missing_label_is_reported() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let l = NodeLabels::new(vec![Some(0), None], vec![0, 0]);
        assert!(matches!(homophily_ratios(&g, &l), Err(GraphError::MissingLabel(1))));
    }

    #[test]
    fn matches_naive_pair_loop_on_random_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let n = 20;
        let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let s: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(0.3) {
                    pairs.push((u, v));
                }
            }
        }
        let g = Graph::new(n, pairs.clone()).unwrap();
        // naive double loop over the adjacency relation
        let (mut same_y, mut same_s, mut total) = (0, 0, 0);
        for u in 0..n {
            for v in u + 1..n {
                if pairs.contains(&(u, v)) {
                    total += 1;
                    same_y += (y[u] == y[v]) as usize;
                    same_s += (s[u] == s[v]) as usize;
                }
            }
        }
        let (hc, hs) = homophily_ratios(&g, &NodeLabels::fully_labeled(&y, &s)).unwrap();
        assert_eq!(hc, same_y as f64 / total as f64);
        assert_eq!(hs, same_s as f64 / total as f64);
    }

    proptest! {
        #[test]
        fn census_partitions_edges(seed in 0u64..10_000, n in 2usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let s: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let pairs: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .filter(|_| rng.gen_bool(0.5)).collect();
            let g = Graph::new(n, pairs).unwrap();
            let l = NodeLabels::fully_labeled(&y, &s);
            let c = EdgeCensus::of(&g, &l).unwrap();
            prop_assert_eq!(c.by_type.iter().sum::<u64>(), g.m() as u64);
            prop_assert_eq!(c.n_c, c.count(EdgeType::I) + c.count(EdgeType::II));
            prop_assert_eq!(c.n_s, c.count(EdgeType::I) + c.count(EdgeType::III));

            // relabel node ids: census unchanged
            let mut perm: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
            let mut py = vec![0; n];
            let mut ps = vec![0; n];
            for v in 0..n {
                py[perm[v]] = y[v];
                ps[perm[v]] = s[v];
            }
            let c2 = EdgeCensus::of(&g.permuted(&perm), &NodeLabels::fully_labeled(&py, &ps)).unwrap();
            prop_assert_eq!(c, c2);
        }
    }
}
