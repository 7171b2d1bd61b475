use rayon::prelude::*;

use super::{Kinks, LossOutput};
use crate::error::LossError;
use crate::numerics::{sq_dist, Matrix};

/// Nearest `k` nodes to `i` (by L2 in `e`) from the opposite sensitive group,
/// ties broken by node id.
pub(crate) fn cross_group_neighbors(e: &Matrix, sensitive: &[u8], i: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<(f64, usize)> = (0..e.rows())
        .filter(|&j| sensitive[j] != sensitive[i])
        .map(|j| (sq_dist(e.row(i), e.row(j)), j))
        .collect();
    pool.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    pool.truncate(k);
    pool.into_iter().map(|(_, j)| j).collect()
}

/// Environmental separation objective:
/// `−(1/n) Σ_i (1/K'_i) Σ_{j∈NN_i} ‖e_i − e_j‖₂`, `NN_i` the `K'` nearest
/// nodes of the other sensitive group. Neighbour choice is held fixed for the
/// gradient. Gradient is `[∂/∂E]`.
pub fn env_loss(e: &Matrix, sensitive: &[u8], k_prime: usize) -> Result<LossOutput, LossError> {
    let n = e.rows();
    if sensitive.len() != n {
        return Err(LossError::Invalid(format!("{} sensitive values for {n} rows", sensitive.len())));
    }
    if k_prime == 0 {
        return Err(LossError::Invalid("K' must be at least 1".into()));
    }
    for group in [0u8, 1] {
        if !sensitive.contains(&group) {
            return Err(LossError::EmptyGroup(group));
        }
    }
    let picks: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| cross_group_neighbors(e, sensitive, i, k_prime))
        .collect();

    let mut kinks = Kinks::default();
    let mut degenerate = 0;
    let mut grad = Matrix::zeros(n, e.cols());
    let mut total = 0.0;
    let d = e.cols();
    for (i, nn) in picks.iter().enumerate() {
        kinks.note(nn);
        let scale = 1.0 / (n * nn.len()) as f64;
        for &j in nn {
            let dist = sq_dist(e.row(i), e.row(j)).sqrt();
            total += scale * dist;
            if dist == 0.0 {
                degenerate += 1;
                kinks.note((i, j));
                continue;
            }
            for k in 0..d {
                let g = -scale * (e.get(i, k) - e.get(j, k)) / dist;
                grad.data_mut()[i * d + k] += g;
                grad.data_mut()[j * d + k] -= g;
            }
        }
    }
    let value = -total;
    if !value.is_finite() {
        return Err(LossError::NonFinite("env"));
    }
    Ok(LossOutput {
        value,
        grads: vec![grad],
        signature: kinks.finish(),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair() {
        let e = Matrix::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let out = env_loss(&e, &[0, 1], 1).unwrap();
        assert_eq!(out.value, -5.0);
    }

    #[test]
    fn identical_rows_give_zero() {
        let e = Matrix::filled(5, 3, 0.7);
        let out = env_loss(&e, &[0, 1, 0, 1, 1], 2).unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.grads[0].max_abs(), 0.0);
    }

    #[test]
    fn empty_group_errors() {
        let e = Matrix::zeros(3, 1);
        assert!(matches!(env_loss(&e, &[1, 1, 1], 1), Err(LossError::EmptyGroup(0))));
    }

    #[test]
    fn short_pool_uses_available_neighbours() {
        // node 0 is the only member of group 0: K'_i = 1 for nodes 1..3
        let e = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![4.0]]).unwrap();
        let out = env_loss(&e, &[0, 1, 1, 1], 3).unwrap();
        let hand = -((1.0 + 2.0 + 4.0) / 3.0 + 1.0 + 2.0 + 4.0) / 4.0;
        assert!((out.value - hand).abs() < 1e-15);
    }
}
