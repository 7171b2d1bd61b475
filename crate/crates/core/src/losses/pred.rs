use super::{clamp_prob, labels_at, Kinks, LossOutput};
use crate::error::LossError;
use crate::numerics::Matrix;

/// Probabilities are clamped into `[PROB_CLAMP, 1 − PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// Mean binary cross-entropy of `probs` (`n × 1`) over the nodes in `mask`.
/// Gradient is with respect to `probs`; clamped entries get zero.
pub fn pred_loss(probs: &Matrix, labels: &[Option<u8>], mask: &[usize]) -> Result<LossOutput, LossError> {
    if mask.is_empty() {
        return Err(LossError::EmptyMask);
    }
    if probs.cols() != 1 {
        return Err(LossError::Invalid(format!("probabilities must be a column, got {:?}", probs.shape())));
    }
    if let Some(&v) = mask.iter().find(|&&v| v >= probs.rows()) {
        return Err(LossError::Invalid(format!("mask node {v} out of range")));
    }
    let ys = labels_at(labels, mask)?;
    let inv_n = 1.0 / mask.len() as f64;
    let mut grad = Matrix::zeros(probs.rows(), 1);
    let mut kinks = Kinks::default();
    let mut total = 0.0;
    for (&v, &y) in mask.iter().zip(&ys) {
        let (p, clamped) = clamp_prob(probs.get(v, 0));
        kinks.note((v, clamped));
        if y == 1 {
            total -= p.ln();
            if !clamped {
                grad.data_mut()[v] -= inv_n / p;
            }
        } else {
            total -= (1.0 - p).ln();
            if !clamped {
                grad.data_mut()[v] += inv_n / (1.0 - p);
            }
        }
    }
    Ok(LossOutput {
        value: total * inv_n,
        grads: vec![grad],
        signature: kinks.finish(),
        degenerate: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn half_everywhere_is_ln2() {
        let out = pred_loss(&col(&[0.5; 4]), &[Some(0), Some(1), Some(1), None], &[0, 1, 2]).unwrap();
        assert!((out.value - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(out.grads[0].get(3, 0), 0.0);
    }

    #[test]
    fn confident_and_correct_is_near_zero() {
        let out = pred_loss(&col(&[1.0, 0.0]), &[Some(1), Some(0)], &[0, 1]).unwrap();
        assert!(out.value < 1e-11);
        assert_eq!(out.grads[0].max_abs(), 0.0);
    }

    #[test]
    fn hand_sum_three_nodes() {
        let p = [0.9, 0.2, 0.6];
        let y = [Some(1), Some(0), Some(0)];
        let hand = -((0.9f64).ln() + (0.8f64).ln() + (0.4f64).ln()) / 3.0;
        let out = pred_loss(&col(&p), &y, &[0, 1, 2]).unwrap();
        assert!((out.value - hand).abs() < 1e-15);
        assert!((out.grads[0].get(2, 0) - 1.0 / (3.0 * 0.4)).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(pred_loss(&col(&[0.5]), &[Some(1)], &[]), Err(LossError::EmptyMask)));
        assert!(matches!(pred_loss(&col(&[0.5]), &[None], &[0]), Err(LossError::Invalid(_))));
    }
}
