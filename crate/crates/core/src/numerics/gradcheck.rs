//! Central-difference gradient verification.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::matrix::Matrix;
use crate::error::NumericError;

/// One evaluation of the loss under test. `signature` identifies the
/// piecewise-smooth region (see [`super::Tape::kink_signature`]); use 0 for
/// smooth functions.
#[derive(Debug, Clone, Copy)]
pub struct Probe {
    pub value: f64,
    pub signature: u64,
}

impl Probe {
    pub fn smooth(value: f64) -> Self {
        Self {
            value,
            signature: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    pub eps: f64,
    /// Coordinates probed per parameter matrix; all of them when the matrix
    /// is smaller.
    pub coords_per_param: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            eps: 1e-5,
            coords_per_param: 40,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
    /// `(param, flat index, analytic, numeric)` at the worst coordinate.
    pub worst: Option<(usize, usize, f64, f64)>,
}

/// `|analytic − numeric| / max(1, |analytic|, |numeric|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

/// Compare `analytic` against central differences of `f` around `params`.
/// Coordinates whose ±eps probes land in a different kink region than the
/// base point are skipped.
pub fn grad_check<F>(
    mut f: F,
    params: &[Matrix],
    analytic: &[Matrix],
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport, NumericError>
where
    F: FnMut(&[Matrix]) -> Probe,
{
    if !(1e-7..=1e-4).contains(&cfg.eps) {
        return Err(NumericError::BadStep(cfg.eps));
    }
    if params.len() != analytic.len() {
        return Err(NumericError::Tape("one analytic gradient per parameter".into()));
    }
    for (p, g) in params.iter().zip(analytic) {
        if p.shape() != g.shape() {
            return Err(NumericError::Shape {
                op: "grad_check",
                lhs: p.shape(),
                rhs: g.shape(),
            });
        }
    }
    let base = f(params);
    if !base.value.is_finite() {
        return Err(NumericError::NonFinite("loss at base point".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut work: Vec<Matrix> = params.to_vec();
    let mut report = GradCheckReport::default();
    for pi in 0..params.len() {
        let len = params[pi].data().len();
        let coords: Vec<usize> = if len <= cfg.coords_per_param {
            (0..len).collect()
        } else {
            let mut v = sample(&mut rng, len, cfg.coords_per_param).into_vec();
            v.sort_unstable();
            v
        };
        for idx in coords {
            let orig = params[pi].data()[idx];
            work[pi].data_mut()[idx] = orig + cfg.eps;
            let plus = f(&work);
            work[pi].data_mut()[idx] = orig - cfg.eps;
            let minus = f(&work);
            work[pi].data_mut()[idx] = orig;
            if !plus.value.is_finite() || !minus.value.is_finite() {
                return Err(NumericError::NonFinite(format!(
                    "loss while probing parameter {pi} coordinate {idx}"
                )));
            }
            if plus.signature != base.signature || minus.signature != base.signature {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (plus.value - minus.value) / (2.0 * cfg.eps);
            let a = analytic[pi].data()[idx];
            let err = relative_error(a, numeric);
            report.checked += 1;
            if report.worst.is_none() || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some((pi, idx, a, numeric));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tape;

    #[test]
    fn linear_loss_is_exact() {
        let w = Matrix::from_vec(2, 2, vec![0.3, -0.4, 1.1, 2.0]).unwrap();
        let coef = Matrix::from_vec(2, 2, vec![1.0, 2.0, -3.0, 0.5]).unwrap();
        let f = |p: &[Matrix]| {
            Probe::smooth(p[0].data().iter().zip(coef.data()).map(|(a, b)| a * b).sum())
        };
        let rep = grad_check(f, &[w], std::slice::from_ref(&coef), &GradCheckConfig::default()).unwrap();
        assert!(rep.max_rel_error <= 1e-10, "{rep:?}");
        assert_eq!(rep.checked, 4);
    }

    #[test]
    fn detects_wrong_gradient() {
        let w = Matrix::from_vec(1, 2, vec![0.3, -0.4]).unwrap();
        let f = |p: &[Matrix]| Probe::smooth(p[0].data().iter().map(|x| x * x).sum());
        let wrong = Matrix::from_vec(1, 2, vec![0.0, 0.0]).unwrap();
        let rep = grad_check(f, &[w], &[wrong], &GradCheckConfig::default()).unwrap();
        assert!(rep.max_rel_error > 0.5);
    }

    #[test]
    fn skips_coordinates_at_relu_kink() {
        // loss = sum(relu(x)) with one entry sitting on the kink
        let x = Matrix::from_vec(1, 3, vec![1.0, -2.0, 1e-7]).unwrap();
        let f = |p: &[Matrix]| {
            let mut t = Tape::new();
            let v = t.leaf(p[0].clone());
            let r = t.relu(v).unwrap();
            let s = t.sum(r).unwrap();
            Probe {
                value: t.value(s).get(0, 0),
                signature: t.kink_signature(),
            }
        };
        let analytic = Matrix::from_vec(1, 3, vec![1.0, 0.0, 1.0]).unwrap();
        let rep = grad_check(f, &[x], &[analytic], &GradCheckConfig::default()).unwrap();
        assert_eq!(rep.skipped_kinks, 1);
        assert_eq!(rep.checked, 2);
        assert!(rep.max_rel_error < 1e-9);
    }

    #[test]
    fn rejects_bad_step_and_nan() {
        let w = Matrix::scalar(1.0);
        let g = Matrix::scalar(0.0);
        let cfg = GradCheckConfig {
            eps: 1e-2,
            ..Default::default()
        };
        assert!(matches!(
            grad_check(|_| Probe::smooth(0.0), std::slice::from_ref(&w), std::slice::from_ref(&g), &cfg),
            Err(NumericError::BadStep(_))
        ));
        assert!(matches!(
            grad_check(|_| Probe::smooth(f64::NAN), &[w], &[g], &GradCheckConfig::default()),
            Err(NumericError::NonFinite(_))
        ));
    }
}
