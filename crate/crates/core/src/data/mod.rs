//! Dataset ingestion, standardisation, a synthetic planted-partition generator
//! and embedding export.

mod export;
mod loader;
mod synth;

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, NodeLabels};
use crate::numerics::Matrix;

pub use export::{export_embeddings, read_embeddings, EMBEDDING_FIXED_COLUMNS};
pub use loader::{
    data_dir, load_dataset, preset, write_dataset, DatasetMeta, DatasetSpec, DATA_DIR_ENV, PRESETS,
};
pub use synth::{expected_census, synth_generate, BlockSizes, SynthConfig, SynthSummary};

/// A loaded (or generated) node-attributed graph. Features are raw; see
/// [`standardize`].
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub features: Matrix,
    pub feature_names: Vec<String>,
    /// `None` for nodes without a ground-truth label.
    pub labels: Vec<Option<u8>>,
    pub sensitive: Vec<u8>,
    /// Self-loops, duplicates and dangling edges removed while loading.
    pub dropped_edges: usize,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn labeled_ids(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.labels[v].is_some()).collect()
    }

    pub fn node_labels(&self) -> NodeLabels {
        NodeLabels::new(self.labels.clone(), self.sensitive.clone())
    }
}

/// Disjoint train/validation/test node sets over the labeled nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Masks {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Masks {
    /// Per-node tag: `train`, `val`, `test` or `none`.
    pub fn tags(&self, n: usize) -> Vec<&'static str> {
        let mut out = vec!["none"; n];
        for (set, tag) in [(&self.train, "train"), (&self.val, "val"), (&self.test, "test")] {
            for &v in set {
                out[v] = tag;
            }
        }
        out
    }
}

/// Column statistics used for z-scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; constant columns store 1.
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Fit on the given rows only.
    pub fn fit(x: &Matrix, rows: &[usize]) -> Self {
        let d = x.cols();
        let mut mean = vec![0.0; d];
        let mut scale = vec![1.0; d];
        if rows.is_empty() {
            return Self { mean, scale };
        }
        let k = rows.len() as f64;
        for &r in rows {
            for (m, v) in mean.iter_mut().zip(x.row(r)) {
                *m += v / k;
            }
        }
        for (c, s) in scale.iter_mut().enumerate() {
            let var = rows.iter().map(|&r| (x.get(r, c) - mean[c]).powi(2)).sum::<f64>() / k;
            *s = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Self { mean, scale }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.mean[c]) / self.scale[c];
            }
        }
        out
    }
}

/// Z-score every row with statistics from `rows`.
pub fn standardize(x: &Matrix, rows: &[usize]) -> Matrix {
    Standardizer::fit(x, rows).apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_uses_only_fit_rows() {
        let x = Matrix::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0], vec![100.0, -1.0]]).unwrap();
        let z = standardize(&x, &[0, 1]);
        assert_eq!(z.row(0), &[-1.0, 0.0]);
        assert_eq!(z.row(1), &[1.0, 0.0]);
        assert_eq!(z.get(2, 0), 98.0);
        assert_eq!(z.get(2, 1), -6.0);
    }

    #[test]
    fn tags_cover_masks() {
        let m = Masks {
            train: vec![0],
            val: vec![2],
            test: vec![3],
        };
        assert_eq!(m.tags(5), vec!["train", "none", "val", "test", "none"]);
    }
}
