//! Three-phase training: pre-train → fairness-aware edit → full training,
//! plus splits, grid search, reports and checkpoints.

mod config;
mod grid;
mod objective;
mod optim;
mod report;
mod split;
mod train;

pub use config::{Mode, OptimizerKind, RetainLabels, ScLabels, SplitSpec, TrainConfig, MAX_EPOCHS};
pub use grid::{grid_search, GridCell, GridSpec};
pub use objective::{Objective, ObjectiveValue};
pub use optim::Optimizer;
pub use report::{
    plan_runs, run_all, with_thread_cap, AggregateReport, Checkpoint, EpochSummary, MetricSummary, RunReport,
    LIBRARY_VERSION, THREADS_ENV,
};
pub use split::{read_masks, split_dataset, validate_masks};
pub use train::{
    edit_identity_residual, prepare_features, pretrain, pseudo_labels, run_once, run_phase1, train_full,
    EpochRecord, Phase2Input, Phase2Output, PretrainResult, RunResult,
};
