//! Minimal reverse-mode tape over dense matrices.
//!
//! Every operation appends a node holding its forward value. Scalar losses
//! with hand-derived gradients enter through [`Tape::custom_scalar`], which
//! stores the partials with respect to each input at forward time.
//!
//! The tape also keeps a running hash of discrete decisions made during the
//! forward pass (ReLU activation pattern, clamping, nearest-neighbour picks).
//! Finite-difference checks compare this signature across perturbations to
//! skip coordinates that cross a kink.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use super::matrix::Matrix;
use crate::error::NumericError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Op<'g> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    NeighborMean(Var, &'g [Vec<usize>]),
    ConcatCols(Var, Var),
    SliceCols(Var, usize),
    Sum(Var),
    Custom(Vec<(Var, Matrix)>),
    Linear(Vec<(Var, f64)>),
}

struct Node<'g> {
    value: Matrix,
    op: Op<'g>,
}

pub struct Tape<'g> {
    nodes: Vec<Node<'g>>,
    kinks: DefaultHasher,
}

impl Default for Tape<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'g> Tape<'g> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            kinks: DefaultHasher::new(),
        }
    }

    fn push(&mut self, value: Matrix, op: Op<'g>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    fn check(&self, v: Var) -> Result<(), NumericError> {
        if v.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(NumericError::Tape(format!("variable {} is not on this tape", v.0)))
        }
    }

    /// Leaf node. Parameters and constants are both leaves; which ones receive
    /// gradients is decided by the caller of [`Tape::grad`].
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Mix a discrete forward-pass decision into the kink signature.
    pub fn note_kink(&mut self, tag: impl Hash) {
        tag.hash(&mut self.kinks);
    }

    pub fn kink_signature(&self) -> u64 {
        self.kinks.finish()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumericError> {
        self.check(a)?;
        self.check(b)?;
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumericError> {
        self.check(a)?;
        self.check(b)?;
        let v = self.value(a).add(self.value(b))?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var, NumericError> {
        self.check(x)?;
        self.check(bias)?;
        let v = self.value(x).add_row(self.value(bias))?;
        Ok(self.push(v, Op::AddRow(x, bias)))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, NumericError> {
        self.check(x)?;
        let input = self.value(x);
        let pattern: Vec<bool> = input.data().iter().map(|&z| z > 0.0).collect();
        let v = input.relu();
        pattern.hash(&mut self.kinks);
        Ok(self.push(v, Op::Relu(x)))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var, NumericError> {
        self.check(x)?;
        let v = self.value(x).sigmoid();
        Ok(self.push(v, Op::Sigmoid(x)))
    }

    pub fn neighbor_mean(&mut self, x: Var, adjacency: &'g [Vec<usize>]) -> Result<Var, NumericError> {
        self.check(x)?;
        let v = self.value(x).row_mean_neighbors(adjacency)?;
        Ok(self.push(v, Op::NeighborMean(x, adjacency)))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var, NumericError> {
        self.check(a)?;
        self.check(b)?;
        let v = self.value(a).concat_cols(self.value(b))?;
        Ok(self.push(v, Op::ConcatCols(a, b)))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var, NumericError> {
        self.check(x)?;
        let v = self.value(x).slice_cols(start, end)?;
        Ok(self.push(v, Op::SliceCols(x, start)))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var, NumericError> {
        self.check(x)?;
        let v = Matrix::scalar(self.value(x).sum());
        Ok(self.push(v, Op::Sum(x)))
    }

    /// Scalar node with externally computed partials `∂value/∂input`.
    pub fn custom_scalar(&mut self, value: f64, partials: Vec<(Var, Matrix)>) -> Result<Var, NumericError> {
        for (v, g) in &partials {
            self.check(*v)?;
            if g.shape() != self.value(*v).shape() {
                return Err(NumericError::Shape {
                    op: "custom_scalar",
                    lhs: self.value(*v).shape(),
                    rhs: g.shape(),
                });
            }
        }
        Ok(self.push(Matrix::scalar(value), Op::Custom(partials)))
    }

    /// `Σ w_i · x_i` over scalar nodes.
    pub fn weighted_sum(&mut self, terms: &[(Var, f64)]) -> Result<Var, NumericError> {
        let mut total = 0.0;
        for &(v, w) in terms {
            self.check(v)?;
            if self.value(v).shape() != (1, 1) {
                return Err(NumericError::Tape("weighted_sum expects scalar terms".into()));
            }
            total += w * self.value(v).get(0, 0);
        }
        Ok(self.push(Matrix::scalar(total), Op::Linear(terms.to_vec())))
    }

    /// Gradients of the scalar `out` with respect to each of `wrt`.
    pub fn grad(&self, out: Var, wrt: &[Var]) -> Result<Vec<Matrix>, NumericError> {
        self.check(out)?;
        for &w in wrt {
            self.check(w)?;
        }
        if self.value(out).shape() != (1, 1) {
            return Err(NumericError::Tape(format!(
                "gradient requested of a non-scalar node with shape {:?}",
                self.value(out).shape()
            )));
        }
        let mut grads: Vec<Option<Matrix>> = (0..=out.0).map(|_| None).collect();
        grads[out.0] = Some(Matrix::scalar(1.0));

        fn acc(slot: &mut Option<Matrix>, g: Matrix) {
            match slot {
                Some(s) => s.add_scaled(&g, 1.0).expect("gradient shapes match forward shapes"),
                None => *slot = Some(g),
            }
        }

        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let ga = g.matmul_t(self.value(*b))?;
                    let gb = self.value(*a).t_matmul(&g)?;
                    acc(&mut grads[a.0], ga);
                    acc(&mut grads[b.0], gb);
                }
                Op::Add(a, b) => {
                    acc(&mut grads[a.0], g.clone());
                    acc(&mut grads[b.0], g);
                }
                Op::AddRow(x, b) => {
                    acc(&mut grads[b.0], g.col_sums());
                    acc(&mut grads[x.0], g);
                }
                Op::Relu(x) => {
                    let input = self.value(*x);
                    let mut gx = g;
                    for (d, &z) in gx.data_mut().iter_mut().zip(input.data()) {
                        if z <= 0.0 {
                            *d = 0.0;
                        }
                    }
                    acc(&mut grads[x.0], gx);
                }
                Op::Sigmoid(x) => {
                    let mut gx = g;
                    for (d, &y) in gx.data_mut().iter_mut().zip(node.value.data()) {
                        *d *= y * (1.0 - y);
                    }
                    acc(&mut grads[x.0], gx);
                }
                Op::NeighborMean(x, adj) => {
                    acc(&mut grads[x.0], g.row_mean_neighbors_adjoint(adj));
                }
                Op::ConcatCols(a, b) => {
                    let ca = self.value(*a).cols();
                    acc(&mut grads[a.0], g.slice_cols(0, ca)?);
                    acc(&mut grads[b.0], g.slice_cols(ca, g.cols())?);
                }
                Op::SliceCols(x, start) => {
                    let src = self.value(*x);
                    let mut gx = Matrix::zeros(src.rows(), src.cols());
                    for r in 0..g.rows() {
                        gx.row_mut(r)[*start..*start + g.cols()].copy_from_slice(g.row(r));
                    }
                    acc(&mut grads[x.0], gx);
                }
                Op::Sum(x) => {
                    let (r, c) = self.value(*x).shape();
                    acc(&mut grads[x.0], Matrix::filled(r, c, g.get(0, 0)));
                }
                Op::Custom(parts) => {
                    let up = g.get(0, 0);
                    for (v, p) in parts {
                        acc(&mut grads[v.0], p.scale(up));
                    }
                }
                Op::Linear(terms) => {
                    let up = g.get(0, 0);
                    for &(v, w) in terms {
                        acc(&mut grads[v.0], Matrix::scalar(w * up));
                    }
                }
            }
        }

        Ok(wrt
            .iter()
            .map(|w| {
                grads
                    .get(w.0)
                    .and_then(|g| g.clone())
                    .unwrap_or_else(|| {
                        let (r, c) = self.value(*w).shape();
                        Matrix::zeros(r, c)
                    })
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_gradient_is_ones() {
        let mut t = Tape::new();
        let w = t.leaf(Matrix::from_vec(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.0, 9.0]).unwrap());
        let s = t.sum(w).unwrap();
        let g = t.grad(s, &[w]).unwrap();
        assert_eq!(g[0], Matrix::filled(2, 3, 1.0));
    }

    #[test]
    fn squared_norm_of_wx() {
        // loss = ||W x||², grad = 2 (W x) xᵀ
        let wv = Matrix::from_vec(2, 3, vec![0.3, -1.0, 2.0, 1.5, 0.2, -0.7]).unwrap();
        let xv = Matrix::from_vec(3, 1, vec![1.0, 2.0, -0.5]).unwrap();
        let mut t = Tape::new();
        let w = t.leaf(wv.clone());
        let x = t.leaf(xv.clone());
        let y = t.matmul(w, x).unwrap();
        let yv = t.value(y).clone();
        let loss = t
            .custom_scalar(yv.data().iter().map(|v| v * v).sum(), vec![(y, yv.scale(2.0))])
            .unwrap();
        let g = t.grad(loss, &[w]).unwrap();
        let expected = wv.matmul(&xv).unwrap().scale(2.0).matmul(&xv.transpose()).unwrap();
        for (a, b) in g[0].data().iter().zip(expected.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unrecorded_variable_is_an_error() {
        let mut other = Tape::new();
        let _ = other.leaf(Matrix::scalar(1.0));
        let stray = other.leaf(Matrix::scalar(2.0));
        let mut t = Tape::new();
        let a = t.leaf(Matrix::scalar(1.0));
        assert!(matches!(t.grad(a, &[stray]), Err(NumericError::Tape(_))));
        let m = t.leaf(Matrix::zeros(2, 2));
        assert!(matches!(t.grad(m, &[a]), Err(NumericError::Tape(_))));
    }

    #[test]
    fn unreached_parameter_gets_zero_gradient() {
        let mut t = Tape::new();
        let a = t.leaf(Matrix::filled(1, 2, 1.0));
        let b = t.leaf(Matrix::filled(2, 2, 1.0));
        let s = t.sum(a).unwrap();
        let g = t.grad(s, &[b]).unwrap();
        assert_eq!(g[0], Matrix::zeros(2, 2));
    }

    #[test]
    fn relu_pattern_changes_signature() {
        let sig = |x: f64| {
            let mut t = Tape::new();
            let v = t.leaf(Matrix::scalar(x));
            t.relu(v).unwrap();
            t.kink_signature()
        };
        assert_eq!(sig(1.0), sig(2.0));
        assert_ne!(sig(1.0), sig(-1.0));
    }
}
