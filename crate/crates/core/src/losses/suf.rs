use std::collections::HashSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{clamp_prob, Kinks, LossOutput};
use crate::error::LossError;
use crate::graph::Graph;
use crate::numerics::{dot, sigmoid, Matrix};

/// Number of unordered non-adjacent node pairs.
pub fn negative_capacity(g: &Graph) -> usize {
    let n = g.n();
    n * n.saturating_sub(1) / 2 - g.m()
}

/// `count` distinct non-edges `(u, v)`, `u < v`, drawn uniformly without
/// replacement. Deterministic in `seed`.
pub fn sample_negative_edges(g: &Graph, count: usize, seed: u64) -> Result<Vec<(usize, usize)>, LossError> {
    let capacity = negative_capacity(g);
    if count > capacity {
        return Err(LossError::Capacity {
            requested: count,
            capacity,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.n();
    if count.saturating_mul(2) <= capacity {
        // sparse regime: rejection keeps the draw uniform over what is left
        let mut seen = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u == v {
                continue;
            }
            let pair = (u.min(v), u.max(v));
            if g.has_edge(pair.0, pair.1) || !seen.insert(pair) {
                continue;
            }
            out.push(pair);
        }
        Ok(out)
    } else {
        let mut pool = Vec::with_capacity(capacity);
        for u in 0..n {
            for v in u + 1..n {
                if !g.has_edge(u, v) {
                    pool.push((u, v));
                }
            }
        }
        Ok(sample(&mut rng, pool.len(), count).into_iter().map(|i| pool[i]).collect())
    }
}

/// Structure-preserving link objective on `H` with inner-product decoder:
/// mean BCE of `sigmoid(h_i·h_j)` against 1 on `pos`, 0 on `neg`.
/// Gradient is `[∂/∂H]`.
pub fn suf_loss(h: &Matrix, pos: &[(usize, usize)], neg: &[(usize, usize)]) -> Result<LossOutput, LossError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(LossError::EmptyEdges);
    }
    let n = h.rows();
    if let Some(&(u, v)) = pos.iter().chain(neg).find(|&&(u, v)| u >= n || v >= n) {
        return Err(LossError::Invalid(format!("edge ({u}, {v}) out of range for {n} rows")));
    }
    let scale = 1.0 / (pos.len() + neg.len()) as f64;
    let mut grad = Matrix::zeros(n, h.cols());
    let mut kinks = Kinks::default();
    let mut total = 0.0;
    for (target, edges) in [(1.0, pos), (0.0, neg)] {
        for &(u, v) in edges {
            let (p, clamped) = clamp_prob(sigmoid(dot(h.row(u), h.row(v))));
            kinks.note(clamped);
            total -= if target == 1.0 { p.ln() } else { (1.0 - p).ln() };
            if clamped {
                continue;
            }
            // d/ds of the BCE term is p − target
            let g = scale * (p - target);
            for k in 0..h.cols() {
                let (hu, hv) = (h.get(u, k), h.get(v, k));
                grad.data_mut()[u * h.cols() + k] += g * hv;
                grad.data_mut()[v * h.cols() + k] += g * hu;
            }
        }
    }
    let value = total * scale;
    if !value.is_finite() {
        return Err(LossError::NonFinite("suf"));
    }
    Ok(LossOutput {
        value,
        grads: vec![grad],
        signature: kinks.finish(),
        degenerate: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_embeddings_give_ln2() {
        let h = Matrix::zeros(4, 3);
        let out = suf_loss(&h, &[(0, 1)], &[(2, 3)]).unwrap();
        assert!((out.value - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn aligned_positives_and_opposed_negatives_vanish() {
        let h = Matrix::from_rows(&[vec![10.0], vec![10.0], vec![-10.0]]).unwrap();
        let out = suf_loss(&h, &[(0, 1)], &[(0, 2)]).unwrap();
        assert!(out.value < 1e-11);
    }

    #[test]
    fn two_edge_hand_sum() {
        let h = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, -2.0]]).unwrap();
        let s_pos: f64 = 0.5;
        let s_neg: f64 = -1.0;
        let hand = -((1.0 / (1.0 + (-s_pos).exp())).ln() + (1.0 - 1.0 / (1.0 + (-s_neg).exp())).ln()) / 2.0;
        let out = suf_loss(&h, &[(0, 1)], &[(1, 2)]).unwrap();
        assert!((out.value - hand).abs() < 1e-15);
    }

    #[test]
    fn empty_sets_error() {
        let h = Matrix::zeros(2, 1);
        assert!(matches!(suf_loss(&h, &[], &[(0, 1)]), Err(LossError::EmptyEdges)));
        assert!(matches!(suf_loss(&h, &[(0, 1)], &[]), Err(LossError::EmptyEdges)));
    }

    #[test]
    fn complete_graph_has_no_capacity() {
        let g = Graph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(negative_capacity(&g), 0);
        assert!(matches!(sample_negative_edges(&g, 1, 0), Err(LossError::Capacity { capacity: 0, .. })));
        assert!(sample_negative_edges(&g, 0, 0).unwrap().is_empty());
    }

    #[test]
    fn samples_are_distinct_non_edges_and_seeded() {
        let g = Graph::new(30, (0..29).map(|i| (i, i + 1))).unwrap();
        for count in [10, 200, negative_capacity(&g)] {
            let a = sample_negative_edges(&g, count, 7).unwrap();
            assert_eq!(a, sample_negative_edges(&g, count, 7).unwrap());
            assert_eq!(a.len(), count);
            let set: HashSet<_> = a.iter().copied().collect();
            assert_eq!(set.len(), count);
            assert!(a.iter().all(|&(u, v)| u < v && !g.has_edge(u, v)));
        }
        assert_ne!(sample_negative_edges(&g, 10, 7).unwrap(), sample_negative_edges(&g, 10, 8).unwrap());
    }
}
