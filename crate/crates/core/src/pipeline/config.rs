use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::PipelineError;
use crate::losses::{DisMetric, LossWeights};

/// Hard cap on epochs per phase.
pub const MAX_EPOCHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// Graph edit + CAF objective + contrastive and environmental terms.
    #[serde(rename = "HSCCAF")]
    Hsccaf,
    /// Counterfactual objective alone on the original graph.
    #[serde(rename = "CAF")]
    Caf,
    #[serde(rename = "CAF+GE")]
    CafGe,
    #[serde(rename = "HSCCAF-GE")]
    HsccafNoGe,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Hsccaf, Mode::Caf, Mode::CafGe, Mode::HsccafNoGe];

    pub fn edits_graph(self) -> bool {
        matches!(self, Mode::Hsccaf | Mode::CafGe)
    }

    pub fn uses_sc_env(self) -> bool {
        matches!(self, Mode::Hsccaf | Mode::HsccafNoGe)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Hsccaf => "HSCCAF",
            Mode::Caf => "CAF",
            Mode::CafGe => "CAF+GE",
            Mode::HsccafNoGe => "HSCCAF-GE",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.to_ascii_uppercase().chars().filter(|c| !matches!(c, '_' | ' ')).collect();
        match norm.as_str() {
            "HSCCAF" => Ok(Mode::Hsccaf),
            "CAF" => Ok(Mode::Caf),
            "CAF+GE" | "CAFGE" => Ok(Mode::CafGe),
            "HSCCAF-GE" | "HSCCAF−GE" | "HSCCAFNOGE" => Ok(Mode::HsccafNoGe),
            _ => Err(format!("unknown mode `{s}` (HSCCAF, CAF, CAF+GE, HSCCAF-GE)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Plain full-batch gradient descent.
    #[default]
    Sgd,
    Adam,
}

/// Which labels the contrastive term sees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScLabels {
    /// Ground truth of training nodes.
    #[default]
    GroundTruth,
    /// Pseudo-labels of every node.
    Pseudo,
}

/// Which ground-truth labels override pseudo-labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetainLabels {
    /// Training nodes only; validation and test labels never reach training.
    #[default]
    Train,
    /// Every labeled node.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    /// Train / validation / test shares of the labeled nodes.
    pub fractions: [f64; 3],
    /// Number of random splits.
    pub count: usize,
    /// Optional cap on the training set size (taken from the train share).
    #[serde(default)]
    pub train_budget: Option<usize>,
    /// Explicit mask files (JSON `{train, val, test}`); override `fractions`.
    #[serde(default)]
    pub files: Vec<PathBuf>,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            fractions: [0.5, 0.25, 0.25],
            count: 5,
            train_budget: None,
            files: Vec::new(),
        }
    }
}

fn default_hidden() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub weights: LossWeights,
    pub lr: f64,
    #[serde(rename = "T_pre")]
    pub t_pre: usize,
    #[serde(rename = "T_train")]
    pub t_train: usize,
    pub refresh_period: usize,
    pub seeds: Vec<u64>,
    pub splits: SplitSpec,
    pub mode: Mode,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub dis_metric: DisMetric,
    #[serde(default)]
    pub sc_labels: ScLabels,
    #[serde(default)]
    pub retain_labels: RetainLabels,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_hidden")]
    pub d_c: usize,
    /// Re-initialise parameters after pre-training instead of continuing.
    #[serde(default)]
    pub reinit_phase2: bool,
    /// L2-normalise rows of `H` before counterfactual search.
    #[serde(default)]
    pub normalize_cf: bool,
    /// Z-score features with training-split statistics.
    #[serde(default = "yes")]
    pub standardize: bool,
}

fn yes() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            lr: 0.01,
            t_pre: 100,
            t_train: 100,
            refresh_period: 5,
            seeds: vec![0],
            splits: SplitSpec::default(),
            mode: Mode::Hsccaf,
            optimizer: OptimizerKind::Sgd,
            dis_metric: DisMetric::Cosine,
            sc_labels: ScLabels::GroundTruth,
            retain_labels: RetainLabels::Train,
            hidden: 16,
            d_c: 16,
            reinit_phase2: false,
            normalize_cf: false,
            standardize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.refresh_period == 0 {
            return bad("refresh_period must be at least 1".into());
        }
        if self.t_train == 0 || self.t_train > MAX_EPOCHS {
            return bad(format!("T_train must be in 1..={MAX_EPOCHS}, got {}", self.t_train));
        }
        if self.t_pre > MAX_EPOCHS {
            return bad(format!("T_pre must be at most {MAX_EPOCHS}, got {}", self.t_pre));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.hidden == 0 || self.d_c == 0 {
            return bad("hidden and d_c must be positive".into());
        }
        let f = self.splits.fractions;
        if f.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || ((f[0] + f[1] + f[2]) - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions must be nonnegative and sum to 1, got {f:?}"));
        }
        if self.splits.files.is_empty() && self.splits.count == 0 {
            return bad("splits.count must be at least 1".into());
        }
        self.weights.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.weights.k == 0 || self.weights.k_prime == 0 {
            return bad("K and K_prime must be at least 1".into());
        }
        Ok(())
    }

    /// Weights with the terms the mode excludes set to zero.
    pub fn effective_weights(&self) -> LossWeights {
        let mut w = self.weights;
        if !self.mode.uses_sc_env() {
            w.omega = 0.0;
            w.eta = 0.0;
        }
        w
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    pub fn from_json(s: &str) -> Result<Self, PipelineError> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_uses_spec_field_names() {
        let v = serde_json::to_value(TrainConfig::default()).unwrap();
        for key in ["weights", "lr", "T_pre", "T_train", "refresh_period", "seeds", "splits", "mode"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["mode"], "HSCCAF");
        assert_eq!(v["weights"]["K_prime"], 5);
        let back = TrainConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(back, TrainConfig::default());
        assert_eq!(back.hash(), TrainConfig::default().hash());
    }

    #[test]
    fn invalid_configs() {
        let mut c = TrainConfig {
            t_train: 101,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.t_train = 10;
        c.refresh_period = 0;
        assert!(c.validate().is_err());
        c.refresh_period = 5;
        c.lr = 0.0;
        assert!(c.validate().is_err());
        c.lr = 0.01;
        c.splits.fractions = [0.5, 0.5, 0.5];
        assert!(c.validate().is_err());
    }

    #[test]
    fn mode_parsing_and_lattice() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!(Mode::Hsccaf.edits_graph() && Mode::Hsccaf.uses_sc_env());
        assert!(!Mode::Caf.edits_graph() && !Mode::Caf.uses_sc_env());
        let c = TrainConfig {
            mode: Mode::Caf,
            ..Default::default()
        };
        assert_eq!(c.effective_weights().omega, 0.0);
    }
}
