//! Two-layer mean-aggregation encoder producing `H = [C | E]` and a
//! single-layer sigmoid classifier on `C`.
//!
//! Layer 1: `relu([x_v ; mean_{u∈N(v)} x_u] · W1 + b1)`.
//! Layer 2: `[h_v ; mean_{u∈N(v)} h_u] · W2 + b2`, linear.

use rand::distributions::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::NumericError;
use crate::graph::Graph;
use crate::numerics::{Matrix, Tape, Var};
use crate::seed::rng_for;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
    pub d_c: usize,
    pub d_e: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorParams {
    /// `d_c × 1`
    pub w: Matrix,
    /// `1 × 1`
    pub b: Matrix,
}

/// Encoder and predictor together, the unit the optimiser updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub version: u32,
    pub encoder: EncoderParams,
    pub predictor: PredictorParams,
}

impl ModelParams {
    pub const NAMES: [&'static str; 6] = ["w1", "b1", "w2", "b2", "w", "b"];

    pub fn tensors(&self) -> [&Matrix; 6] {
        let (e, p) = (&self.encoder, &self.predictor);
        [&e.w1, &e.b1, &e.w2, &e.b2, &p.w, &p.b]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix; 6] {
        let (e, p) = (&mut self.encoder, &mut self.predictor);
        [&mut e.w1, &mut e.b1, &mut e.w2, &mut e.b2, &mut p.w, &mut p.b]
    }

    pub fn to_vec(&self) -> Vec<Matrix> {
        self.tensors().into_iter().cloned().collect()
    }

    /// Rebuild from tensors in [`Self::NAMES`] order, keeping widths.
    pub fn with_tensors(&self, t: &[Matrix]) -> Self {
        let mut out = self.clone();
        for (slot, m) in out.tensors_mut().into_iter().zip(t) {
            *slot = m.clone();
        }
        out
    }

    pub fn d_in(&self) -> usize {
        self.encoder.w1.rows() / 2
    }

    pub fn hidden(&self) -> usize {
        self.encoder.w1.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|m| m.is_finite())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    pub fn from_json(s: &str) -> Result<Self, crate::error::DataError> {
        let p: Self = serde_json::from_str(s)?;
        if p.version != CHECKPOINT_VERSION {
            return Err(crate::error::DataError::Parse {
                file: "checkpoint".into(),
                row: 0,
                msg: format!("unsupported checkpoint version {}", p.version),
            });
        }
        Ok(p)
    }
}

fn glorot(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit);
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| dist.sample(rng)).collect())
        .expect("sizes agree")
}

/// Glorot-uniform weights, zero biases. `d_e = d_c`.
pub fn init_params(d_in: usize, hidden: usize, d_c: usize, seed: u64) -> ModelParams {
    assert!(d_in > 0 && hidden > 0 && d_c > 0, "dimensions must be positive");
    let mut rng = rng_for(seed, "model-init");
    let d_e = d_c;
    ModelParams {
        version: CHECKPOINT_VERSION,
        encoder: EncoderParams {
            w1: glorot(2 * d_in, hidden, &mut rng),
            b1: Matrix::zeros(1, hidden),
            w2: glorot(2 * hidden, d_c + d_e, &mut rng),
            b2: Matrix::zeros(1, d_c + d_e),
            d_c,
            d_e,
        },
        predictor: PredictorParams {
            w: glorot(d_c, 1, &mut rng),
            b: Matrix::zeros(1, 1),
        },
    }
}

/// `H = [C | E]` with `C` the first `d_c` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub h: Matrix,
    pub c: Matrix,
    pub e: Matrix,
}

/// Tape handles produced by one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct ForwardVars {
    /// Parameter leaves in [`ModelParams::NAMES`] order.
    pub params: [Var; 6],
    pub h: Var,
    pub c: Var,
    pub e: Var,
    /// Per-node probability, `n × 1`.
    pub probs: Var,
}

/// Record encoder and predictor on `tape`.
pub fn forward<'g>(
    tape: &mut Tape<'g>,
    params: &ModelParams,
    adjacency: &'g [Vec<usize>],
    x: &Matrix,
) -> Result<ForwardVars, NumericError> {
    let enc = &params.encoder;
    if x.cols() * 2 != enc.w1.rows() {
        return Err(NumericError::Shape {
            op: "encode",
            lhs: x.shape(),
            rhs: enc.w1.shape(),
        });
    }
    let pv: Vec<Var> = params.tensors().into_iter().map(|m| tape.leaf(m.clone())).collect();
    let p = [pv[0], pv[1], pv[2], pv[3], pv[4], pv[5]];
    let xv = tape.leaf(x.clone());

    let nx = tape.neighbor_mean(xv, adjacency)?;
    let cat1 = tape.concat_cols(xv, nx)?;
    let z1 = tape.matmul(cat1, p[0])?;
    let z1 = tape.add_row(z1, p[1])?;
    let h1 = tape.relu(z1)?;

    let nh = tape.neighbor_mean(h1, adjacency)?;
    let cat2 = tape.concat_cols(h1, nh)?;
    let z2 = tape.matmul(cat2, p[2])?;
    let h = tape.add_row(z2, p[3])?;

    let c = tape.slice_cols(h, 0, enc.d_c)?;
    let e = tape.slice_cols(h, enc.d_c, enc.d_c + enc.d_e)?;

    let logits = tape.matmul(c, p[4])?;
    let logits = tape.add_row(logits, p[5])?;
    let probs = tape.sigmoid(logits)?;
    Ok(ForwardVars {
        params: p,
        h,
        c,
        e,
        probs,
    })
}

pub fn encode(params: &ModelParams, g: &Graph, x: &Matrix) -> Result<LatentState, NumericError> {
    if x.rows() != g.n() {
        return Err(NumericError::Shape {
            op: "encode",
            lhs: x.shape(),
            rhs: (g.n(), 0),
        });
    }
    let mut tape = Tape::new();
    let fv = forward(&mut tape, params, g.adjacency(), x)?;
    Ok(LatentState {
        h: tape.value(fv.h).clone(),
        c: tape.value(fv.c).clone(),
        e: tape.value(fv.e).clone(),
    })
}

/// `sigmoid(C·w + b)` per node.
pub fn predict(predictor: &PredictorParams, c: &Matrix) -> Result<Vec<f64>, NumericError> {
    let logits = c.matmul(&predictor.w)?.add_row(&predictor.b)?;
    Ok(logits.sigmoid().into_vec())
}

/// Threshold at 0.5; exactly 0.5 maps to class 1.
pub fn hard_labels(probs: &[f64]) -> Vec<u8> {
    probs.iter().map(|&p| u8::from(p >= 0.5)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_graph() -> Graph {
        Graph::new(5, [(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap()
    }

    fn toy_x() -> Matrix {
        Matrix::from_vec(5, 3, (0..15).map(|i| ((i * 7) as f64 * 0.13).sin()).collect()).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_shaped() {
        let a = init_params(4, 16, 16, 0);
        assert_eq!(a, init_params(4, 16, 16, 0));
        assert_ne!(a, init_params(4, 16, 16, 1));
        assert_eq!(a.encoder.w2.cols(), 32);
        assert_eq!(a.encoder.w1.shape(), (8, 16));
        let lim = (6.0f64 / 24.0).sqrt();
        assert!(a.encoder.w1.data().iter().all(|x| x.abs() <= lim));
        assert_eq!(a.encoder.b1.max_abs(), 0.0);
    }

    #[test]
    fn zero_weights_give_bias() {
        let mut p = init_params(3, 4, 2, 0);
        p.encoder.w1 = Matrix::zeros(6, 4);
        p.encoder.w2 = Matrix::zeros(8, 4);
        p.encoder.b2 = Matrix::from_vec(1, 4, vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        let st = encode(&p, &toy_graph(), &toy_x()).unwrap();
        for r in 0..5 {
            assert_eq!(st.h.row(r), p.encoder.b2.data());
        }
        assert_eq!(st.c.cols(), 2);
        assert_eq!(st.h, st.c.concat_cols(&st.e).unwrap());
    }

    #[test]
    fn isolated_node_sees_only_itself() {
        let g = toy_graph();
        let p = init_params(3, 4, 2, 3);
        let mut x = toy_x();
        let before = encode(&p, &g, &x).unwrap();
        // node 4 is isolated; perturbing others must not move it
        for v in 0..4 {
            for c in 0..3 {
                x.set(v, c, x.get(v, c) + 1.0);
            }
        }
        let after = encode(&p, &g, &x).unwrap();
        assert_eq!(before.h.row(4), after.h.row(4));
    }

    #[test]
    fn permutation_equivariance() {
        let g = toy_graph();
        let x = toy_x();
        let p = init_params(3, 4, 2, 5);
        let perm = [3, 0, 4, 1, 2];
        let gp = g.permuted(&perm);
        let mut xp = Matrix::zeros(5, 3);
        for v in 0..5 {
            xp.row_mut(perm[v]).copy_from_slice(x.row(v));
        }
        let h = encode(&p, &g, &x).unwrap().h;
        let hp = encode(&p, &gp, &xp).unwrap().h;
        for v in 0..5 {
            for (a, b) in h.row(v).iter().zip(hp.row(perm[v])) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn predictor_tie_and_limits() {
        let c = Matrix::from_vec(3, 2, vec![1.0, 2.0, -1.0, 0.0, 5.0, 5.0]).unwrap();
        let zero = PredictorParams {
            w: Matrix::zeros(2, 1),
            b: Matrix::zeros(1, 1),
        };
        let p = predict(&zero, &c).unwrap();
        assert_eq!(p, vec![0.5; 3]);
        assert_eq!(hard_labels(&p), vec![1, 1, 1]);
        let big = PredictorParams {
            w: Matrix::zeros(2, 1),
            b: Matrix::scalar(50.0),
        };
        assert!(predict(&big, &c).unwrap().iter().all(|&q| q > 1.0 - 1e-12));
    }

    #[test]
    fn checkpoint_json_is_bit_exact() {
        let p = init_params(7, 5, 3, 11);
        let s = p.to_json().unwrap();
        let q = ModelParams::from_json(&s).unwrap();
        for (a, b) in p.tensors().iter().zip(q.tensors()) {
            let ab: Vec<u64> = a.data().iter().map(|x| x.to_bits()).collect();
            let bb: Vec<u64> = b.data().iter().map(|x| x.to_bits()).collect();
            assert_eq!(ab, bb);
        }
    }
}
