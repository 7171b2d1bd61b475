use serde::{Deserialize, Serialize};

use crate::error::NumericError;

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

fn shape_err(op: &'static str, a: &Matrix, b: &Matrix) -> NumericError {
    NumericError::Shape {
        op,
        lhs: a.shape(),
        rhs: b.shape(),
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericError> {
        if data.len() != rows * cols {
            return Err(NumericError::Shape {
                op: "from_vec",
                lhs: (rows, cols),
                rhs: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NumericError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(NumericError::Shape {
                    op: "from_rows",
                    lhs: (rows.len(), cols),
                    rhs: (1, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![v],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn check_finite(&self, what: &str) -> Result<(), NumericError> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(NumericError::NonFinite(what.to_string()))
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Matrix {
        self.map(|x| x * k)
    }

    /// `self += k * other`
    pub fn add_scaled(&mut self, other: &Matrix, k: f64) -> Result<(), NumericError> {
        if self.shape() != other.shape() {
            return Err(shape_err("add_scaled", self, other));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += k * b;
        }
        Ok(())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, NumericError> {
        let mut out = self.clone();
        out.add_scaled(other, 1.0).map_err(|_| shape_err("add", self, other))?;
        Ok(out)
    }

    /// Add a `1 × cols` bias to every row.
    pub fn add_row(&self, bias: &Matrix) -> Result<Matrix, NumericError> {
        if bias.rows != 1 || bias.cols != self.cols {
            return Err(shape_err("add_row", self, bias));
        }
        let mut out = self.clone();
        for r in 0..self.rows {
            for (a, b) in out.row_mut(r).iter_mut().zip(&bias.data) {
                *a += b;
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, NumericError> {
        if self.cols != other.rows {
            return Err(shape_err("matmul", self, other));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other` without materialising the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix, NumericError> {
        if self.rows != other.rows {
            return Err(shape_err("t_matmul", self, other));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let arow = self.row(r);
            let brow = other.row(r);
            for (i, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · otherᵀ`
    pub fn matmul_t(&self, other: &Matrix) -> Result<Matrix, NumericError> {
        if self.cols != other.cols {
            return Err(shape_err("matmul_t", self, other));
        }
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                out.data[i * other.rows + j] = dot(self.row(i), other.row(j));
            }
        }
        Ok(out)
    }

    pub fn concat_cols(&self, other: &Matrix) -> Result<Matrix, NumericError> {
        if self.rows != other.rows {
            return Err(shape_err("concat_cols", self, other));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Ok(Matrix {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// Columns `start..end`.
    pub fn slice_cols(&self, start: usize, end: usize) -> Result<Matrix, NumericError> {
        if start > end || end > self.cols {
            return Err(NumericError::Shape {
                op: "slice_cols",
                lhs: self.shape(),
                rhs: (start, end),
            });
        }
        let w = end - start;
        let mut data = Vec::with_capacity(self.rows * w);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[start..end]);
        }
        Ok(Matrix {
            rows: self.rows,
            cols: w,
            data,
        })
    }

    /// Sum over rows, giving `1 × cols`.
    pub fn col_sums(&self) -> Matrix {
        let mut out = Matrix::zeros(1, self.cols);
        for r in 0..self.rows {
            for (o, x) in out.data.iter_mut().zip(self.row(r)) {
                *o += x;
            }
        }
        out
    }

    pub fn relu(&self) -> Matrix {
        self.map(|x| if x > 0.0 { x } else { 0.0 })
    }

    pub fn sigmoid(&self) -> Matrix {
        self.map(sigmoid)
    }

    pub fn ln(&self) -> Result<Matrix, NumericError> {
        // NaN fails the comparison too
        if self.data.iter().any(|&x| x.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
            return Err(NumericError::NonFinite("log of a non-positive entry".into()));
        }
        Ok(self.map(f64::ln))
    }

    /// Row-wise `exp(x − max_row(x))`.
    pub fn exp_stable(&self) -> Result<Matrix, NumericError> {
        self.check_finite("exp_stable input")?;
        let mut out = self.clone();
        for r in 0..self.rows {
            let row = out.row_mut(r);
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for x in row.iter_mut() {
                *x = (*x - mx).exp();
            }
        }
        Ok(out)
    }

    /// Each row divided by its L2 norm; zero rows stay zero.
    pub fn row_l2_normalize(&self) -> Matrix {
        let mut out = self.clone();
        for r in 0..self.rows {
            let row = out.row_mut(r);
            let norm = dot(row, row).sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x /= norm);
            }
        }
        out
    }

    /// `out[i][j] = cos(a_i, b_j)`; rows with zero norm give 0.
    pub fn cosine_matrix(a: &Matrix, b: &Matrix) -> Result<Matrix, NumericError> {
        if a.cols != b.cols {
            return Err(shape_err("cosine_matrix", a, b));
        }
        a.row_l2_normalize().matmul_t(&b.row_l2_normalize())
    }

    /// Row `v` becomes the mean of its neighbours' rows (zero when isolated).
    pub fn row_mean_neighbors(&self, adjacency: &[Vec<usize>]) -> Result<Matrix, NumericError> {
        if adjacency.len() != self.rows {
            return Err(NumericError::Shape {
                op: "row_mean_neighbors",
                lhs: self.shape(),
                rhs: (adjacency.len(), 0),
            });
        }
        let mut out = Matrix::zeros(self.rows, self.cols);
        for (v, nbrs) in adjacency.iter().enumerate() {
            if nbrs.is_empty() {
                continue;
            }
            let inv = 1.0 / nbrs.len() as f64;
            let orow = &mut out.data[v * self.cols..(v + 1) * self.cols];
            for &u in nbrs {
                for (o, x) in orow.iter_mut().zip(self.row(u)) {
                    *o += x;
                }
            }
            orow.iter_mut().for_each(|x| *x *= inv);
        }
        Ok(out)
    }

    /// Transpose of [`Self::row_mean_neighbors`] as a linear map: scatters
    /// `self[v] / deg(v)` onto each neighbour of `v`.
    pub fn row_mean_neighbors_adjoint(&self, adjacency: &[Vec<usize>]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for (v, nbrs) in adjacency.iter().enumerate() {
            if nbrs.is_empty() {
                continue;
            }
            let inv = 1.0 / nbrs.len() as f64;
            for &u in nbrs {
                let src = &self.data[v * self.cols..(v + 1) * self.cols];
                let dst = &mut out.data[u * self.cols..(u + 1) * self.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += s * inv;
                }
            }
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Gradients of `cos(a, b)` with respect to `a` and `b`, added into `ga`, `gb`
/// scaled by `upstream`. Zero vectors contribute nothing.
pub fn cosine_backward(a: &[f64], b: &[f64], upstream: f64, ga: &mut [f64], gb: &mut [f64]) {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 || upstream == 0.0 {
        return;
    }
    let c = dot(a, b) / (na * nb);
    let inv = 1.0 / (na * nb);
    for i in 0..a.len() {
        ga[i] += upstream * (b[i] * inv - c * a[i] / (na * na));
        gb[i] += upstream * (a[i] * inv - c * b[i] / (nb * nb));
    }
}
