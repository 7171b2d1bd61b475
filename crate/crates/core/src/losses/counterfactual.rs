use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::{sq_dist, Matrix};

/// One selected neighbour: node id and squared L2 distance in `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub node: usize,
    pub dist2: f64,
}

/// Per node, the `K` nearest nodes (in `H`) that share the label but not the
/// sensitive attribute (`e_cf`), and that share the sensitive attribute but
/// not the label (`c_cf`). Sorted by `(distance, node id)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualIndex {
    pub k: usize,
    pub e_cf: Vec<Vec<Neighbor>>,
    pub c_cf: Vec<Vec<Neighbor>>,
    /// Nodes whose `e_cf` / `c_cf` list came back empty.
    pub empty_e: usize,
    pub empty_c: usize,
}

impl CounterfactualIndex {
    pub fn n(&self) -> usize {
        self.e_cf.len()
    }

    pub fn realized_pairs(&self) -> (usize, usize) {
        (
            self.e_cf.iter().map(Vec::len).sum(),
            self.c_cf.iter().map(Vec::len).sum(),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.realized_pairs() == (0, 0)
    }
}

fn nearest(mut pool: Vec<Neighbor>, k: usize) -> Vec<Neighbor> {
    let by_key = |a: &Neighbor, b: &Neighbor| a.dist2.total_cmp(&b.dist2).then(a.node.cmp(&b.node));
    if pool.len() > k && k > 0 {
        pool.select_nth_unstable_by(k - 1, by_key);
        pool.truncate(k);
    } else if k == 0 {
        pool.clear();
    }
    pool.sort_unstable_by(by_key);
    pool
}

/// Select counterfactual neighbours under `labels` (pseudo-labels, complete)
/// and `sensitive`. Node `i` is never its own candidate.
pub fn select_counterfactuals(h: &Matrix, labels: &[u8], sensitive: &[u8], k: usize) -> CounterfactualIndex {
    let n = h.rows();
    assert_eq!(labels.len(), n, "one label per row of H");
    assert_eq!(sensitive.len(), n, "one sensitive value per row of H");
    let lists: Vec<(Vec<Neighbor>, Vec<Neighbor>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let hi = h.row(i);
            let mut e_pool = Vec::new();
            let mut c_pool = Vec::new();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let same_y = labels[j] == labels[i];
                let same_s = sensitive[j] == sensitive[i];
                if same_y == same_s {
                    continue;
                }
                let nb = Neighbor {
                    node: j,
                    dist2: sq_dist(hi, h.row(j)),
                };
                if same_y {
                    e_pool.push(nb);
                } else {
                    c_pool.push(nb);
                }
            }
            (nearest(e_pool, k), nearest(c_pool, k))
        })
        .collect();
    let (e_cf, c_cf): (Vec<_>, Vec<_>) = lists.into_iter().unzip();
    let empty_e = e_cf.iter().filter(|l| l.is_empty()).count();
    let empty_c = c_cf.iter().filter(|l| l.is_empty()).count();
    CounterfactualIndex {
        k,
        e_cf,
        c_cf,
        empty_e,
        empty_c,
    }
}
