use super::{labels_at, Kinks, LossOutput};
use crate::error::LossError;
use crate::numerics::{cosine, cosine_backward, norm, Matrix};

/// Bounded angular similarity `(1 + cos) / (1 + κ(1 − cos)) − 1`.
pub fn tvmf(ci: &[f64], cj: &[f64], kappa: f64) -> f64 {
    tvmf_of_cos(cosine(ci, cj), kappa)
}

pub(crate) fn tvmf_of_cos(cos: f64, kappa: f64) -> f64 {
    (1.0 + cos) / (1.0 + kappa * (1.0 - cos)) - 1.0
}

/// `dΦ/dcos = (1 + 2κ) / (1 + κ(1 − cos))²`
pub fn tvmf_dcos(cos: f64, kappa: f64) -> f64 {
    let d = 1.0 + kappa * (1.0 - cos);
    (1.0 + 2.0 * kappa) / (d * d)
}

/// Supervised contrastive objective with t-vMF similarity over the nodes in
/// `members`, all of which must carry a label.
///
/// `−Σ_i (1/|P(i)|) Σ_{p∈P(i)} log softmax_{a∈V(i)} Φ(c_i, c_a)[p]` with
/// `V(i) = members \ {i}`, `P(i)` the members of `V(i)` sharing `i`'s label;
/// anchors with empty `P(i)` are skipped. Gradient is `[∂/∂C]`.
pub fn sc_loss(c: &Matrix, labels: &[Option<u8>], members: &[usize], kappa: f64) -> Result<LossOutput, LossError> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(LossError::Invalid(format!("kappa must be finite and nonnegative, got {kappa}")));
    }
    if members.len() < 2 {
        return Err(LossError::Invalid(format!(
            "contrastive loss needs at least 2 labeled nodes, got {}",
            members.len()
        )));
    }
    if let Some(&v) = members.iter().find(|&&v| v >= c.rows()) {
        return Err(LossError::Invalid(format!("member {v} out of range")));
    }
    let ys = labels_at(labels, members)?;
    let l = members.len();
    let mut kinks = Kinks::default();
    let mut degenerate = 0;
    for &v in members {
        if norm(c.row(v)) == 0.0 {
            degenerate += 1;
            kinks.note(v);
        }
    }

    // pairwise cosines among members
    let mut cos = vec![0.0; l * l];
    for a in 0..l {
        for b in a + 1..l {
            let x = cosine(c.row(members[a]), c.row(members[b]));
            cos[a * l + b] = x;
            cos[b * l + a] = x;
        }
    }

    let mut grad = Matrix::zeros(c.rows(), c.cols());
    let mut total = 0.0;
    let mut anchors = 0usize;
    let mut weights = vec![0.0; l];
    for i in 0..l {
        let positives = (0..l).filter(|&p| p != i && ys[p] == ys[i]).count();
        if positives == 0 {
            continue;
        }
        anchors += 1;
        let phi: Vec<f64> = (0..l).map(|a| tvmf_of_cos(cos[i * l + a], kappa)).collect();
        let max = (0..l).filter(|&a| a != i).map(|a| phi[a]).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = (0..l).filter(|&a| a != i).map(|a| (phi[a] - max).exp()).sum();
        let lse = max + z.ln();
        let inv_p = 1.0 / positives as f64;
        let mut pos_mean = 0.0;
        for a in 0..l {
            if a == i {
                weights[a] = 0.0;
                continue;
            }
            let is_pos = ys[a] == ys[i];
            if is_pos {
                pos_mean += phi[a] * inv_p;
            }
            let soft = (phi[a] - lse).exp();
            let d_phi = soft - if is_pos { inv_p } else { 0.0 };
            weights[a] = d_phi * tvmf_dcos(cos[i * l + a], kappa);
        }
        total += lse - pos_mean;
        let ci = c.row(members[i]).to_vec();
        for a in 0..l {
            if weights[a] == 0.0 {
                continue;
            }
            let ca = c.row(members[a]).to_vec();
            let mut gi = vec![0.0; c.cols()];
            let mut ga = vec![0.0; c.cols()];
            cosine_backward(&ci, &ca, weights[a], &mut gi, &mut ga);
            for (dst, s) in grad.row_mut(members[i]).iter_mut().zip(&gi) {
                *dst += s;
            }
            for (dst, s) in grad.row_mut(members[a]).iter_mut().zip(&ga) {
                *dst += s;
            }
        }
    }
    if anchors == 0 {
        return Err(LossError::NoPositives);
    }
    if !total.is_finite() {
        return Err(LossError::NonFinite("sc"));
    }
    Ok(LossOutput {
        value: total,
        grads: vec![grad],
        signature: kinks.finish(),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tvmf_endpoints_and_kappa_zero() {
        assert_eq!(tvmf_of_cos(1.0, 3.0), 1.0);
        assert_eq!(tvmf_of_cos(-1.0, 3.0), -1.0);
        for i in 0..=20 {
            let cos = -1.0 + 0.1 * i as f64;
            assert!((tvmf_of_cos(cos, 0.0) - cos).abs() < 1e-15);
        }
        // zero vector: cos taken as 0, so Φ = 1/(1+κ) − 1
        assert_eq!(tvmf(&[0.0, 0.0], &[1.0, 0.0], 1.0), -0.5);
        assert!((tvmf(&[2.0, 1.0], &[4.0, 2.0], 0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_identical_same_label_is_zero() {
        let c = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let out = sc_loss(&c, &[Some(1), Some(1)], &[0, 1], 1.0).unwrap();
        assert!(out.value.abs() < 1e-15);
    }

    #[test]
    fn distinct_labels_have_no_positives() {
        let c = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(sc_loss(&c, &[Some(0), Some(1)], &[0, 1], 1.0), Err(LossError::NoPositives)));
        assert!(matches!(sc_loss(&c, &[Some(0), Some(1)], &[0], 1.0), Err(LossError::Invalid(_))));
    }

    #[test]
    fn four_node_scalar_oracle() {
        let rows = [vec![1.0, 0.2], vec![0.8, 0.5], vec![-0.3, 1.0], vec![-1.0, -0.4]];
        let c = Matrix::from_rows(&rows).unwrap();
        let y = [Some(0), Some(0), Some(1), Some(1)];
        let kappa = 1.0;
        let phi = |a: usize, b: usize| {
            let cs = cosine(&rows[a], &rows[b]);
            (1.0 + cs) / (1.0 + kappa * (1.0 - cs)) - 1.0
        };
        let mut hand = 0.0;
        for i in 0..4 {
            let denom: f64 = (0..4).filter(|&a| a != i).map(|a| phi(i, a).exp()).sum();
            let pos: Vec<usize> = (0..4).filter(|&p| p != i && y[p] == y[i]).collect();
            for &p in &pos {
                hand -= (phi(i, p).exp() / denom).ln() / pos.len() as f64;
            }
        }
        let out = sc_loss(&c, &y, &[0, 1, 2, 3], kappa).unwrap();
        assert!((out.value - hand).abs() < 1e-12, "{} vs {hand}", out.value);
    }
}
