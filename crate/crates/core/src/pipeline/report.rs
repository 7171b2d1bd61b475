//! Run orchestration over seeds × splits, JSON reports and checkpoints.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::split::{read_masks, split_dataset};
use super::train::{edit_identity_residual, run_once, RunResult};
use super::{Mode, OptimizerKind, TrainConfig};
use crate::data::{Dataset, Masks, Standardizer};
use crate::error::PipelineError;
use crate::graph::{EditReport, Graph};
use crate::losses::LossParts;
use crate::metrics::MetricsReport;
use crate::model::{encode, predict, ModelParams, CHECKPOINT_VERSION};
use crate::seed::derive_indexed;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "FAIRGRAPH_THREADS";

/// Run `f` on a pool capped by [`THREADS_ENV`] (all cores when unset).
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&t| t > 0);
    match cap {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(f),
            Err(e) => {
                log::warn!("could not build a {t}-thread pool ({e}); using the global pool");
                f()
            }
        },
        None => f(),
    }
}

/// One `(seed, split_id, masks)` job per seed and split.
pub fn plan_runs(ds: &Dataset, config: &TrainConfig) -> Result<Vec<(u64, usize, Masks)>, PipelineError> {
    let mut jobs = Vec::new();
    for &seed in &config.seeds {
        if config.splits.files.is_empty() {
            for split_id in 0..config.splits.count {
                let masks = split_dataset(
                    ds.n(),
                    &ds.labeled_ids(),
                    config.splits.fractions,
                    derive_indexed(seed, "split", split_id as u64),
                    config.splits.train_budget,
                )?;
                jobs.push((seed, split_id, masks));
            }
        } else {
            for (split_id, path) in config.splits.files.iter().enumerate() {
                jobs.push((seed, split_id, read_masks(path, &ds.labels)?));
            }
        }
    }
    Ok(jobs)
}

/// Every planned run, in plan order. Runs execute in parallel.
pub fn run_all(ds: &Dataset, config: &TrainConfig) -> Result<Vec<RunResult>, PipelineError> {
    config.validate()?;
    let jobs = plan_runs(ds, config)?;
    jobs.par_iter()
        .map(|(seed, split_id, masks)| run_once(ds, config, *seed, *split_id, masks))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub loss: f64,
    pub parts: LossParts,
    pub val_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub library_version: String,
    pub config_hash: String,
    pub dataset: String,
    pub mode: Mode,
    pub seed: u64,
    pub split_id: usize,
    pub optimizer: OptimizerKind,
    pub standardization: String,
    pub best_epoch: usize,
    pub test: MetricsReport,
    pub val: MetricsReport,
    pub edit: EditReport,
    pub edit_identity_residual: f64,
    pub pretrain_final_loss: Option<f64>,
    pub epochs: Vec<EpochSummary>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(ds_name: &str, config: &TrainConfig, r: &RunResult) -> Result<Self, PipelineError> {
        Ok(Self {
            library_version: LIBRARY_VERSION.to_string(),
            config_hash: config.hash(),
            dataset: ds_name.to_string(),
            mode: r.mode,
            seed: r.seed,
            split_id: r.split_id,
            optimizer: config.optimizer,
            standardization: if config.standardize { "z-score (training split)" } else { "none" }.to_string(),
            best_epoch: r.best_epoch,
            test: r.test.clone(),
            val: r.val.clone(),
            edit: r.edit.clone(),
            edit_identity_residual: edit_identity_residual(&r.edit)?,
            pretrain_final_loss: r.pretrain_losses.last().copied(),
            epochs: r
                .epochs
                .iter()
                .map(|e| EpochSummary {
                    epoch: e.epoch,
                    loss: e.loss,
                    parts: e.parts,
                    val_score: e.val_score(),
                })
                .collect(),
            warnings: r.warnings.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub bacc: f64,
    pub auc: f64,
    pub f1: f64,
    pub delta_sp: f64,
    pub delta_eo: f64,
    pub score: f64,
}

impl MetricSummary {
    fn of(r: &MetricsReport) -> Self {
        Self {
            bacc: r.bacc,
            auc: r.auc,
            f1: r.f1,
            delta_sp: r.delta_sp,
            delta_eo: r.delta_eo,
            score: r.score,
        }
    }

    fn fields(&self) -> [f64; 6] {
        [self.bacc, self.auc, self.f1, self.delta_sp, self.delta_eo, self.score]
    }

    fn from_fields(f: [f64; 6]) -> Self {
        Self {
            bacc: f[0],
            auc: f[1],
            f1: f[2],
            delta_sp: f[3],
            delta_eo: f[4],
            score: f[5],
        }
    }
}

/// Mean and (population) standard deviation over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub library_version: String,
    pub config_hash: String,
    pub dataset: String,
    pub mode: Mode,
    pub runs: usize,
    pub mean: MetricSummary,
    pub std: MetricSummary,
}

impl AggregateReport {
    pub fn from_reports(ds_name: &str, config: &TrainConfig, reports: &[MetricsReport]) -> Self {
        let rows: Vec<[f64; 6]> = reports.iter().map(|r| MetricSummary::of(r).fields()).collect();
        let k = rows.len().max(1) as f64;
        let mean: [f64; 6] = std::array::from_fn(|i| rows.iter().map(|r| r[i]).sum::<f64>() / k);
        let std: [f64; 6] = std::array::from_fn(|i| (rows.iter().map(|r| (r[i] - mean[i]).powi(2)).sum::<f64>() / k).sqrt());
        Self {
            library_version: LIBRARY_VERSION.to_string(),
            config_hash: config.hash(),
            dataset: ds_name.to_string(),
            mode: config.mode,
            runs: rows.len(),
            mean: MetricSummary::from_fields(mean),
            std: MetricSummary::from_fields(std),
        }
    }

    /// `mean (std)` table, one row per mode.
    pub fn table(&self) -> String {
        let cell = |m: f64, s: f64| format!("{m:.2} ({s:.2})");
        format!(
            "{:<10} {:>14} {:>14} {:>14} {:>14} {:>14}\n{:<10} {:>14} {:>14} {:>14} {:>14} {:>14}",
            "mode",
            "BACC",
            "AUC",
            "F1",
            "dSP",
            "dEO",
            self.mode.name(),
            cell(self.mean.bacc, self.std.bacc),
            cell(self.mean.auc, self.std.auc),
            cell(self.mean.f1, self.std.f1),
            cell(self.mean.delta_sp, self.std.delta_sp),
            cell(self.mean.delta_eo, self.std.delta_eo),
        )
    }
}

/// Everything needed to rebuild a trained model's predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub library_version: String,
    pub config_hash: String,
    pub config: TrainConfig,
    pub dataset: String,
    pub mode: Mode,
    pub seed: u64,
    pub split_id: usize,
    pub masks: Masks,
    pub params: ModelParams,
    pub pseudo_labels: Vec<u8>,
    pub removed_edges: Vec<(usize, usize)>,
    pub standardizer: Option<Standardizer>,
    pub test: MetricsReport,
}

impl Checkpoint {
    pub fn new(ds_name: &str, config: &TrainConfig, r: &RunResult) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            library_version: LIBRARY_VERSION.to_string(),
            config_hash: config.hash(),
            config: config.clone(),
            dataset: ds_name.to_string(),
            mode: r.mode,
            seed: r.seed,
            split_id: r.split_id,
            masks: r.masks.clone(),
            params: r.params.clone(),
            pseudo_labels: r.pseudo_labels.clone(),
            removed_edges: r.edit.removed_edges.clone(),
            standardizer: r.standardizer.clone(),
            test: r.test.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let c: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(PipelineError::Config(format!("unsupported checkpoint version {}", c.version)));
        }
        Ok(c)
    }

    /// The training graph: the original minus the recorded removals.
    pub fn edited_graph(&self, original: &Graph) -> Graph {
        let removed: std::collections::HashSet<(usize, usize)> = self.removed_edges.iter().copied().collect();
        let drop: Vec<usize> = original
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| removed.contains(e))
            .map(|(i, _)| i)
            .collect();
        original.without_edge_indices(&drop)
    }

    /// Recompute probabilities and the test report on `ds`.
    pub fn evaluate(&self, ds: &Dataset) -> Result<(Vec<f64>, MetricsReport), PipelineError> {
        if ds.n() != self.pseudo_labels.len() {
            return Err(PipelineError::Config(format!(
                "checkpoint covers {} nodes, dataset has {}",
                self.pseudo_labels.len(),
                ds.n()
            )));
        }
        let g = self.edited_graph(&ds.graph);
        let x = match &self.standardizer {
            Some(st) => st.apply(&ds.features),
            None => ds.features.clone(),
        };
        let latent = encode(&self.params, &g, &x)?;
        let probs = predict(&self.params.predictor, &latent.c)?;
        let truth: Vec<u8> = ds.labels.iter().map(|l| l.unwrap_or(0)).collect();
        let mut report = MetricsReport::evaluate(&probs, &truth, &ds.sensitive, &self.masks.test)?;
        report.seed = self.seed;
        report.split_id = self.split_id;
        Ok((probs, report))
    }
}
