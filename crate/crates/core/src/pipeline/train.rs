//! Pre-training, graph editing and full training for one `(seed, split)`.

use serde::{Deserialize, Serialize};

use super::objective::Objective;
use super::optim::Optimizer;
use super::{Mode, RetainLabels, ScLabels, TrainConfig};
use crate::data::{Dataset, Masks, Standardizer};
use crate::error::{GraphError, PipelineError};
use crate::graph::theory::predict_ratio_shift;
use crate::graph::{fair_edge_remove, EditReport, Graph, NodeLabels};
use crate::losses::{sample_negative_edges, select_counterfactuals, CounterfactualIndex, LossParts, LossWeights};
use crate::metrics::MetricsReport;
use crate::model::{encode, hard_labels, init_params, predict, LatentState, ModelParams};
use crate::numerics::Matrix;
use crate::seed::{derive_indexed, derive_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub parts: LossParts,
    /// Validation metrics after this epoch's step; `None` when undefined.
    pub val: Option<MetricsReport>,
    /// `(e-type, c-type)` counterfactual lists that were empty.
    pub empty_counterfactuals: (usize, usize),
}

impl EpochRecord {
    pub fn val_score(&self) -> Option<f64> {
        self.val.as_ref().map(|r| r.score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainResult {
    pub params: ModelParams,
    /// Complete label vector used for editing and counterfactuals.
    pub pseudo_labels: Vec<u8>,
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub mode: Mode,
    pub seed: u64,
    pub split_id: usize,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub val: MetricsReport,
    pub test: MetricsReport,
    pub edit: EditReport,
    pub pseudo_labels: Vec<u8>,
    pub params: ModelParams,
    pub pretrain_losses: Vec<f64>,
    pub masks: Masks,
    pub standardizer: Option<Standardizer>,
    pub warnings: Vec<String>,
}

fn diverged(phase: &'static str, epoch: usize, detail: impl ToString) -> PipelineError {
    PipelineError::Diverged {
        phase,
        epoch,
        detail: detail.to_string(),
    }
}

/// Hard predictions, with ground truth kept on `retain` nodes.
pub fn pseudo_labels(probs: &[f64], labels: &[Option<u8>], retain: &[usize]) -> Vec<u8> {
    let mut out = hard_labels(probs);
    for &v in retain {
        if let Some(y) = labels[v] {
            out[v] = y;
        }
    }
    out
}

fn retained(config: &TrainConfig, labels: &[Option<u8>], masks: &Masks) -> Vec<usize> {
    match config.retain_labels {
        RetainLabels::Train => masks.train.clone(),
        RetainLabels::All => (0..labels.len()).filter(|&v| labels[v].is_some()).collect(),
    }
}

fn probabilities(params: &ModelParams, g: &Graph, x: &Matrix) -> Result<(LatentState, Vec<f64>), PipelineError> {
    let latent = encode(params, g, x)?;
    let probs = predict(&params.predictor, &latent.c)?;
    Ok((latent, probs))
}

/// `T_pre` gradient steps on the prediction loss alone, then pseudo-labels
/// for every node.
pub fn pretrain(
    g: &Graph,
    x: &Matrix,
    labels: &[Option<u8>],
    sensitive: &[u8],
    masks: &Masks,
    config: &TrainConfig,
    seed: u64,
) -> Result<PretrainResult, PipelineError> {
    if masks.train.is_empty() {
        return Err(PipelineError::EmptySplit("train"));
    }
    let mut params = init_params(x.cols(), config.hidden, config.d_c, derive_seed(seed, "model"));
    let zero = LossWeights {
        alpha: 0.0,
        beta: 0.0,
        omega: 0.0,
        eta: 0.0,
        ..config.weights
    };
    let objective = Objective {
        graph: g,
        x,
        labels,
        train: &masks.train,
        sensitive,
        sc_labels: labels,
        sc_members: &[],
        counterfactuals: None,
        negatives: &[],
        weights: zero,
        metric: config.dis_metric,
    };
    let mut opt = Optimizer::new(config.optimizer, config.lr);
    let mut losses = Vec::with_capacity(config.t_pre);
    for epoch in 0..config.t_pre {
        let v = objective.evaluate(&params).map_err(|e| diverged("pretrain", epoch, e))?;
        losses.push(v.total);
        opt.step(&mut params, &v.grads);
        if !params.is_finite() {
            return Err(diverged("pretrain", epoch, "non-finite parameters after step"));
        }
    }
    let (_, probs) = probabilities(&params, g, x)?;
    let pseudo_labels = pseudo_labels(&probs, labels, &retained(config, labels, masks));
    Ok(PretrainResult {
        params,
        pseudo_labels,
        losses,
    })
}

/// Fairness-aware edit under the pseudo-labels; a no-op for modes that do
/// not edit.
pub fn run_phase1(g: &Graph, pseudo: &[u8], sensitive: &[u8], mode: Mode) -> Result<(Graph, EditReport), GraphError> {
    let labels = NodeLabels::fully_labeled(pseudo, sensitive);
    if mode.edits_graph() {
        fair_edge_remove(g, &labels)
    } else {
        Ok((g.clone(), EditReport::skipped(g, &labels)?))
    }
}

/// Largest gap between the observed ratio shifts of an edit and the closed
/// form for `k = |removed|` deletions.
pub fn edit_identity_residual(report: &EditReport) -> Result<f64, GraphError> {
    let k = report.removed_edges.len() as u64;
    if k == 0 {
        return Ok(0.0);
    }
    let (dc, ds) = predict_ratio_shift(&report.census_before, k)?;
    let oc = report.hr_c_after - report.hr_c_before;
    let os = report.hr_s_after - report.hr_s_before;
    Ok((oc - dc).abs().max((os - ds).abs()))
}

fn counterfactuals(latent: &LatentState, pseudo: &[u8], sensitive: &[u8], config: &TrainConfig) -> CounterfactualIndex {
    let h = if config.normalize_cf {
        latent.h.row_l2_normalize()
    } else {
        latent.h.clone()
    };
    select_counterfactuals(&h, pseudo, sensitive, config.weights.k)
}

pub struct Phase2Input<'a> {
    pub graph: &'a Graph,
    pub x: &'a Matrix,
    pub labels: &'a [Option<u8>],
    pub sensitive: &'a [u8],
    pub masks: &'a Masks,
    pub pretrained: &'a PretrainResult,
}

pub struct Phase2Output {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_params: ModelParams,
    pub pseudo_labels: Vec<u8>,
    pub warnings: Vec<String>,
}

/// Full training on the (edited) graph with epoch selection by the
/// validation score; ties go to the earliest epoch.
pub fn train_full(input: &Phase2Input<'_>, config: &TrainConfig, seed: u64) -> Result<Phase2Output, PipelineError> {
    let Phase2Input {
        graph: g,
        x,
        labels,
        sensitive,
        masks,
        pretrained,
    } = *input;
    let weights = config.effective_weights();
    let retain = retained(config, labels, masks);
    let mut warnings = Vec::new();
    let mut params = if config.reinit_phase2 {
        init_params(x.cols(), config.hidden, config.d_c, derive_seed(seed, "model-phase2"))
    } else {
        pretrained.params.clone()
    };
    let mut pseudo = pretrained.pseudo_labels.clone();

    let wants_cf = weights.alpha != 0.0;
    let mut cf = if wants_cf {
        let (latent, _) = probabilities(&pretrained.params, g, x)?;
        Some(counterfactuals(&latent, &pseudo, sensitive, config))
    } else {
        None
    };
    let mut warned_cf = false;

    let pseudo_as_labels = |p: &[u8]| -> Vec<Option<u8>> { p.iter().map(|&y| Some(y)).collect() };
    let all_nodes: Vec<usize> = (0..g.n()).collect();
    let mut sc_labels: Vec<Option<u8>> = match config.sc_labels {
        ScLabels::GroundTruth => labels.to_vec(),
        ScLabels::Pseudo => pseudo_as_labels(&pseudo),
    };
    let sc_members: &[usize] = match config.sc_labels {
        ScLabels::GroundTruth => &masks.train,
        ScLabels::Pseudo => &all_nodes,
    };

    let neg_count = if weights.beta != 0.0 {
        let cap = crate::losses::negative_capacity(g);
        if g.m() == 0 {
            warnings.push("edited graph has no edges; structure term skipped".to_string());
        } else if cap < g.m() {
            warnings.push(format!("only {cap} non-edges for {} edges; structure term uses all of them", g.m()));
        }
        g.m().min(cap)
    } else {
        0
    };

    let mut opt = Optimizer::new(config.optimizer, config.lr);
    let mut epochs = Vec::with_capacity(config.t_train);
    let mut best: Option<(usize, f64, ModelParams)> = None;
    let mut last_latent: Option<LatentState> = None;
    let mut last_probs: Option<Vec<f64>> = None;
    for t in 0..config.t_train {
        if t > 0 && t % config.refresh_period == 0 {
            if let (Some(latent), Some(probs)) = (&last_latent, &last_probs) {
                pseudo = pseudo_labels(probs, labels, &retain);
                if config.sc_labels == ScLabels::Pseudo {
                    sc_labels = pseudo_as_labels(&pseudo);
                }
                if wants_cf {
                    cf = Some(counterfactuals(latent, &pseudo, sensitive, config));
                }
            }
        }
        let usable_cf = match &cf {
            Some(index) if index.is_empty() => {
                if !warned_cf {
                    warnings.push(format!("epoch {t}: every counterfactual list is empty; invariance term dropped"));
                    warned_cf = true;
                }
                None
            }
            other => other.as_ref(),
        };
        let negatives = if neg_count > 0 {
            sample_negative_edges(g, neg_count, derive_indexed(seed, "negatives", t as u64))?
        } else {
            Vec::new()
        };
        let objective = Objective {
            graph: g,
            x,
            labels,
            train: &masks.train,
            sensitive,
            sc_labels: &sc_labels,
            sc_members,
            counterfactuals: usable_cf,
            negatives: &negatives,
            weights,
            metric: config.dis_metric,
        };
        let v = objective.evaluate(&params).map_err(|e| diverged("train", t, e))?;
        opt.step(&mut params, &v.grads);
        if !params.is_finite() {
            return Err(diverged("train", t, "non-finite parameters after step"));
        }
        let (latent, probs) = probabilities(&params, g, x)?;
        let truth: Vec<u8> = labels.iter().map(|l| l.unwrap_or(0)).collect();
        let val = MetricsReport::evaluate(&probs, &truth, sensitive, &masks.val).ok();
        let empty = cf.as_ref().map_or((0, 0), |c| (c.empty_e, c.empty_c));
        let record = EpochRecord {
            epoch: t,
            loss: v.total,
            parts: v.parts,
            val,
            empty_counterfactuals: empty,
        };
        if let Some(score) = record.val_score() {
            if best.as_ref().is_none_or(|(_, b, _)| score > *b) {
                best = Some((t, score, params.clone()));
            }
        }
        epochs.push(record);
        last_latent = Some(latent);
        last_probs = Some(probs);
    }
    let (best_epoch, _, best_params) = best.ok_or(PipelineError::NoValidEpoch)?;
    Ok(Phase2Output {
        epochs,
        best_epoch,
        best_params,
        pseudo_labels: pseudo,
        warnings,
    })
}

/// Features as the model sees them for a given split.
pub fn prepare_features(ds: &Dataset, masks: &Masks, config: &TrainConfig) -> (Matrix, Option<Standardizer>) {
    if config.standardize {
        let st = Standardizer::fit(&ds.features, &masks.train);
        (st.apply(&ds.features), Some(st))
    } else {
        (ds.features.clone(), None)
    }
}

/// All three phases for one seed and one split.
pub fn run_once(
    ds: &Dataset,
    config: &TrainConfig,
    seed: u64,
    split_id: usize,
    masks: &Masks,
) -> Result<RunResult, PipelineError> {
    config.validate()?;
    let (x, standardizer) = prepare_features(ds, masks, config);
    let pre = pretrain(&ds.graph, &x, &ds.labels, &ds.sensitive, masks, config, seed)?;
    let (edited, edit) = run_phase1(&ds.graph, &pre.pseudo_labels, &ds.sensitive, config.mode)?;
    let out = train_full(
        &Phase2Input {
            graph: &edited,
            x: &x,
            labels: &ds.labels,
            sensitive: &ds.sensitive,
            masks,
            pretrained: &pre,
        },
        config,
        seed,
    )?;
    let (_, probs) = probabilities(&out.best_params, &edited, &x)?;
    let truth: Vec<u8> = ds.labels.iter().map(|l| l.unwrap_or(0)).collect();
    let mut test = MetricsReport::evaluate(&probs, &truth, &ds.sensitive, &masks.test)?;
    let mut val = out.epochs[out.best_epoch].val.clone().expect("best epoch has a defined score");
    for r in [&mut test, &mut val] {
        r.seed = seed;
        r.split_id = split_id;
    }
    for w in &out.warnings {
        log::warn!("seed {seed} split {split_id}: {w}");
    }
    Ok(RunResult {
        mode: config.mode,
        seed,
        split_id,
        epochs: out.epochs,
        best_epoch: out.best_epoch,
        val,
        test,
        edit,
        pseudo_labels: out.pseudo_labels,
        params: out.best_params,
        pretrain_losses: pre.losses,
        masks: masks.clone(),
        standardizer,
        warnings: out.warnings,
    })
}
