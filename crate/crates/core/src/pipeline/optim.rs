use super::OptimizerKind;
use crate::model::ModelParams;
use crate::numerics::Matrix;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Full-batch first-order optimiser over all six parameter tensors.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Self {
            kind,
            lr,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &[Matrix]) {
        debug_assert_eq!(grads.len(), ModelParams::NAMES.len());
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.tensors_mut().into_iter().zip(grads) {
                    p.add_scaled(g, -self.lr).expect("gradient shape matches parameter");
                }
            }
            OptimizerKind::Adam => {
                if self.m.is_empty() {
                    self.m = grads.iter().map(|g| Matrix::zeros(g.rows(), g.cols())).collect();
                    self.v = self.m.clone();
                }
                self.t += 1;
                let c1 = 1.0 - BETA1.powi(self.t);
                let c2 = 1.0 - BETA2.powi(self.t);
                for (i, p) in params.tensors_mut().into_iter().enumerate() {
                    let g = grads[i].data();
                    let (m, v) = (self.m[i].data_mut(), self.v[i].data_mut());
                    for (k, x) in p.data_mut().iter_mut().enumerate() {
                        m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                        v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                        *x -= self.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + ADAM_EPS);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;

    #[test]
    fn sgd_moves_against_gradient() {
        let mut p = init_params(2, 3, 2, 0);
        let before = p.clone();
        let grads: Vec<Matrix> = p.tensors().iter().map(|t| Matrix::filled(t.rows(), t.cols(), 1.0)).collect();
        Optimizer::new(OptimizerKind::Sgd, 0.1).step(&mut p, &grads);
        for (a, b) in p.tensors().iter().zip(before.tensors()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - (y - 0.1)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let mut p = init_params(2, 3, 2, 0);
        let before = p.clone();
        let grads: Vec<Matrix> = p.tensors().iter().map(|t| Matrix::filled(t.rows(), t.cols(), 5.0)).collect();
        Optimizer::new(OptimizerKind::Adam, 0.01).step(&mut p, &grads);
        let delta = before.encoder.w1.get(0, 0) - p.encoder.w1.get(0, 0);
        assert!((delta - 0.01).abs() < 1e-9);
    }
}
