use serde::{Deserialize, Serialize};

use super::{CounterfactualIndex, Kinks, LossOutput};
use crate::error::LossError;
use crate::numerics::{cosine, cosine_backward, norm, Matrix};

/// Distance between a representation and its counterfactual.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisMetric {
    /// `1 − cos(a, b)`
    #[default]
    Cosine,
    /// `‖a − b‖₂`
    L2,
}

impl std::str::FromStr for DisMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" | "cos" => Ok(Self::Cosine),
            "l2" => Ok(Self::L2),
            other => Err(format!("unknown distance `{other}` (expected cosine or l2)")),
        }
    }
}

// Adds d(a, b) · scale into the two gradient rows and returns d(a, b).
#[allow(clippy::too_many_arguments)]
fn dis_with_grad(
    metric: DisMetric,
    a: &[f64],
    b: &[f64],
    scale: f64,
    ga: &mut [f64],
    gb: &mut [f64],
    kinks: &mut Kinks,
    degenerate: &mut usize,
) -> f64 {
    match metric {
        DisMetric::Cosine => {
            let zero = norm(a) == 0.0 || norm(b) == 0.0;
            if zero {
                *degenerate += 1;
            }
            kinks.note(zero);
            cosine_backward(a, b, -scale, ga, gb);
            1.0 - cosine(a, b)
        }
        DisMetric::L2 => {
            let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            kinks.note(d == 0.0);
            if d > 0.0 {
                for i in 0..a.len() {
                    let g = scale * (a[i] - b[i]) / d;
                    ga[i] += g;
                    gb[i] -= g;
                }
            }
            d
        }
    }
}

fn two_rows(m: &mut Matrix, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
    assert_ne!(i, j, "a node is never its own counterfactual");
    let cols = m.cols();
    let data = m.data_mut();
    if i < j {
        let (lo, hi) = data.split_at_mut(j * cols);
        (&mut lo[i * cols..(i + 1) * cols], &mut hi[..cols])
    } else {
        let (lo, hi) = data.split_at_mut(i * cols);
        (&mut hi[..cols], &mut lo[j * cols..(j + 1) * cols])
    }
}

/// Invariance/orthogonality objective.
///
/// `Σ dis(c_i, c_e) / P_e + Σ dis(e_i, e_c) / P_c + γ · mean_i |cos(c_i, e_i)|`
/// where the sums run over realised `e_cf` / `c_cf` pairs and `P_e`, `P_c`
/// count them. With full lists this is `(1/(nK)) Σ_i Σ_k [...]`. A sum with no
/// pairs is dropped. Gradients are `[∂/∂C, ∂/∂E]`.
pub fn inv_loss(
    c: &Matrix,
    e: &Matrix,
    cf: &CounterfactualIndex,
    gamma: f64,
    metric: DisMetric,
) -> Result<LossOutput, LossError> {
    let n = c.rows();
    if e.rows() != n || cf.n() != n {
        return Err(LossError::Invalid(format!(
            "C has {n} rows, E has {}, counterfactual index covers {}",
            e.rows(),
            cf.n()
        )));
    }
    if n == 0 {
        return Err(LossError::EmptyMask);
    }
    if c.cols() != e.cols() {
        return Err(LossError::Invalid("C and E must have equal width for the orthogonality term".into()));
    }
    let mut gc = Matrix::zeros(n, c.cols());
    let mut ge = Matrix::zeros(n, e.cols());
    let mut kinks = Kinks::default();
    let mut degenerate = 0;
    let (p_e, p_c) = cf.realized_pairs();
    let mut value = 0.0;

    if p_e > 0 {
        let scale = 1.0 / p_e as f64;
        for i in 0..n {
            for nb in &cf.e_cf[i] {
                let (gi, gj) = two_rows(&mut gc, i, nb.node);
                value += scale
                    * dis_with_grad(metric, c.row(i), c.row(nb.node), scale, gi, gj, &mut kinks, &mut degenerate);
            }
        }
    }
    if p_c > 0 {
        let scale = 1.0 / p_c as f64;
        for i in 0..n {
            for nb in &cf.c_cf[i] {
                let (gi, gj) = two_rows(&mut ge, i, nb.node);
                value += scale
                    * dis_with_grad(metric, e.row(i), e.row(nb.node), scale, gi, gj, &mut kinks, &mut degenerate);
            }
        }
    }
    if gamma != 0.0 {
        let scale = gamma / n as f64;
        for i in 0..n {
            let (ci, ei) = (c.row(i), e.row(i));
            let cos = cosine(ci, ei);
            if norm(ci) == 0.0 || norm(ei) == 0.0 {
                degenerate += 1;
            }
            let sign = if cos > 0.0 {
                1.0
            } else if cos < 0.0 {
                -1.0
            } else {
                0.0
            };
            kinks.note(sign as i8);
            value += scale * cos.abs();
            cosine_backward(ci, ei, scale * sign, gc.row_mut(i), ge.row_mut(i));
        }
    }
    if !value.is_finite() {
        return Err(LossError::NonFinite("inv"));
    }
    Ok(LossOutput {
        value,
        grads: vec![gc, ge],
        signature: kinks.finish(),
        degenerate,
    })
}
