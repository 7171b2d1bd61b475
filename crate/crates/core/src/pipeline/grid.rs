use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{plan_runs, AggregateReport};
use super::train::{run_once, RunResult};
use super::TrainConfig;
use crate::data::Dataset;
use crate::error::PipelineError;
use crate::losses::LossWeights;

/// Candidate values per hyper-parameter; the grid is their product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "K")]
    pub k: Vec<usize>,
    #[serde(rename = "K_prime")]
    pub k_prime: Vec<usize>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub omega: Vec<f64>,
    pub eta: Vec<f64>,
}

impl GridSpec {
    /// The full reference grid (9450 cells).
    pub fn reference() -> Self {
        Self {
            k: vec![2, 5, 10],
            k_prime: vec![2, 5, 10],
            alpha: vec![0.2, 0.5, 0.9, 5.0, 10.0],
            beta: vec![0.5, 1.0],
            gamma: vec![0.02, 0.1, 1.0],
            omega: vec![0.03, 0.09, 0.3, 0.7, 1.0],
            eta: vec![0.06, 0.07, 0.08, 0.09, 0.1, 0.3, 0.8],
        }
    }

    pub fn singleton(w: &LossWeights) -> Self {
        Self {
            k: vec![w.k],
            k_prime: vec![w.k_prime],
            alpha: vec![w.alpha],
            beta: vec![w.beta],
            gamma: vec![w.gamma],
            omega: vec![w.omega],
            eta: vec![w.eta],
        }
    }

    pub fn len(&self) -> usize {
        [
            self.k.len(),
            self.k_prime.len(),
            self.alpha.len(),
            self.beta.len(),
            self.gamma.len(),
            self.omega.len(),
            self.eta.len(),
        ]
        .iter()
        .product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells in lexicographic order; `kappa` comes from `base`.
    pub fn cells(&self, base: &LossWeights) -> Vec<LossWeights> {
        let mut out = Vec::with_capacity(self.len());
        for &k in &self.k {
            for &k_prime in &self.k_prime {
                for &alpha in &self.alpha {
                    for &beta in &self.beta {
                        for &gamma in &self.gamma {
                            for &omega in &self.omega {
                                for &eta in &self.eta {
                                    out.push(LossWeights {
                                        alpha,
                                        beta,
                                        gamma,
                                        omega,
                                        eta,
                                        k,
                                        k_prime,
                                        kappa: base.kappa,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn contains(&self, w: &LossWeights) -> bool {
        self.k.contains(&w.k)
            && self.k_prime.contains(&w.k_prime)
            && self.alpha.contains(&w.alpha)
            && self.beta.contains(&w.beta)
            && self.gamma.contains(&w.gamma)
            && self.omega.contains(&w.omega)
            && self.eta.contains(&w.eta)
    }
}

#[derive(Debug, Clone)]
pub struct GridCell {
    pub index: usize,
    pub weights: LossWeights,
    /// Mean best-epoch validation score; `None` when any run failed.
    pub mean_val_score: Option<f64>,
    pub test: Option<AggregateReport>,
    pub runs: Vec<RunResult>,
    pub error: Option<String>,
}

/// Evaluate every cell over the configured seeds and splits and rank by mean
/// validation score (ties keep grid order; failed cells last).
pub fn grid_search(ds: &Dataset, config: &TrainConfig, grid: &GridSpec) -> Result<Vec<GridCell>, PipelineError> {
    config.validate()?;
    let jobs = plan_runs(ds, config)?;
    let cells = grid.cells(&config.weights);
    let mut out: Vec<GridCell> = cells
        .par_iter()
        .enumerate()
        .map(|(index, w)| {
            let cfg = TrainConfig {
                weights: *w,
                ..config.clone()
            };
            let runs: Result<Vec<RunResult>, PipelineError> = jobs
                .par_iter()
                .map(|(seed, split, masks)| run_once(ds, &cfg, *seed, *split, masks))
                .collect();
            match runs {
                Ok(runs) => {
                    let mean = runs.iter().map(|r| r.val.score).sum::<f64>() / runs.len() as f64;
                    let tests: Vec<_> = runs.iter().map(|r| r.test.clone()).collect();
                    GridCell {
                        index,
                        weights: *w,
                        mean_val_score: Some(mean),
                        test: Some(AggregateReport::from_reports(&ds.name, &cfg, &tests)),
                        runs,
                        error: None,
                    }
                }
                Err(e) => GridCell {
                    index,
                    weights: *w,
                    mean_val_score: None,
                    test: None,
                    runs: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    out.sort_by(|a, b| match (a.mean_val_score, b.mean_val_score) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.index.cmp(&b.index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_grid_contains_german_optimum() {
        let g = GridSpec::reference();
        assert_eq!(g.len(), 9450);
        let german = LossWeights {
            alpha: 10.0,
            beta: 1.0,
            gamma: 1.0,
            omega: 0.3,
            eta: 0.09,
            ..Default::default()
        };
        assert!(g.contains(&german));
        assert_eq!(GridSpec::singleton(&german).cells(&german), vec![german]);
    }
}
