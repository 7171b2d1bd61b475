//! `fairgraph`: fairness-aware graph editing and fair GNN training from the
//! command line. Every command prints a short human summary; `--out DIR`
//! also writes the JSON artifact, and `--json` prints that artifact instead.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use fairgraph_core::data::{
    export_embeddings, load_dataset, synth_generate, write_dataset, Dataset, DatasetSpec, SynthConfig,
};
use fairgraph_core::error::{GraphError, PipelineError};
use fairgraph_core::graph::{fair_edge_remove, io::write_edge_list, EdgeCensus, EditReport, NodeLabels};
use fairgraph_core::losses::{DisMetric, LossWeights};
use fairgraph_core::model::encode;
use fairgraph_core::pipeline::{
    edit_identity_residual, grid_search, plan_runs, prepare_features, pretrain, run_all, run_phase1,
    with_thread_cap, AggregateReport, Checkpoint, GridSpec, Mode, OptimizerKind, RunReport, TrainConfig,
    LIBRARY_VERSION,
};
use fairgraph_core::verify::{
    counterfactual_suite, gradient_suite, theory_suites, tvmf_suite, SuiteReport,
};

#[derive(Parser)]
#[command(name = "fairgraph", version, about = "Fairness-aware graph editing and fair GNN training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Edge-type census and homophily ratios of a dataset.
    Analyze(LabelArgs),
    /// Remove every Type III edge and report the ratio shift.
    Edit(LabelArgs),
    /// Pre-train on the prediction loss, then edit under the pseudo-labels.
    Pretrain(PretrainArgs),
    /// Full training over seeds × splits with an aggregate table.
    Train(TrainArgs),
    /// Recompute a stored checkpoint's test report.
    Evaluate(EvaluateArgs),
    /// Hyper-parameter grid search ranked by validation score.
    Grid(GridArgs),
    /// Randomised property suites for the editing theory and gradients.
    Verify(VerifyArgs),
    /// Generate a synthetic dataset with planted homophily.
    Synth(SynthArgs),
    /// Write a checkpoint's latent representations to CSV.
    Export(ExportArgs),
}

#[derive(Args, Clone)]
struct Output {
    /// Directory for JSON artifacts (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON artifact instead of the human summary.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelSource {
    Truth,
    Pseudo,
}

#[derive(Args)]
struct LabelArgs {
    /// Preset name or dataset directory.
    #[arg(long)]
    dataset: String,
    #[arg(long, value_enum, default_value = "truth")]
    labels: LabelSource,
    /// Checkpoint supplying pseudo-labels (required with `--labels pseudo`).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Args)]
struct ConfigArgs {
    /// Preset name or dataset directory.
    #[arg(long)]
    dataset: String,
    /// JSON training config; flags below override its fields. Without one,
    /// benchmark presets use their published optimum weights.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<Mode>,
    /// Master seed (replaces the config's seed list).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of random splits.
    #[arg(long)]
    splits: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Counterfactuals per node.
    #[arg(long = "k")]
    k: Option<usize>,
    /// Cross-group neighbours in the environment loss.
    #[arg(long = "k-prime")]
    k_prime: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long = "t-pre")]
    t_pre: Option<usize>,
    #[arg(long = "t-train")]
    t_train: Option<usize>,
    #[arg(long, value_enum)]
    optimizer: Option<OptimizerArg>,
    #[arg(long = "dis-metric")]
    dis_metric: Option<DisMetric>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PretrainArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Which split of the first seed to pre-train on.
    #[arg(long, default_value_t = 0)]
    split_id: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Skip writing per-run checkpoints.
    #[arg(long)]
    no_checkpoints: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Defaults to the dataset recorded in the checkpoint.
    #[arg(long)]
    dataset: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// JSON grid (`{"K": [..], "K_prime": [..], "alpha": [..], ...}`).
    #[arg(long, conflicts_with = "full_grid")]
    grid: Option<PathBuf>,
    /// The complete 9450-cell reference grid.
    #[arg(long)]
    full_grid: bool,
    /// Cells shown in the summary.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Random graphs per theory suite.
    #[arg(long, default_value_t = 100)]
    graphs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leave one Type III edge behind in the full edit (self-test).
    #[arg(long)]
    inject_fault: bool,
    /// Seeds for the gradient suite (0 skips it).
    #[arg(long, default_value_t = 5)]
    grad_seeds: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON generator config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "hr-c")]
    hr_c: Option<f64>,
    #[arg(long = "hr-s")]
    hr_s: Option<f64>,
    #[arg(long)]
    degree: Option<f64>,
    #[arg(long)]
    features: Option<usize>,
    #[arg(long = "label-rate")]
    label_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Dataset directory to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dataset: Option<String>,
    /// Directory receiving `embeddings.csv`.
    #[arg(long)]
    out: PathBuf,
}

/// Exit-code classes: 1 for numerical or verification failures, 2 for
/// usage, configuration and input problems.
enum Failure {
    Numeric(String),
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Numeric(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let msg = e.to_string();
        match e {
            PipelineError::Config(_)
            | PipelineError::EmptySplit(_)
            | PipelineError::Data(_)
            | PipelineError::Json(_)
            | PipelineError::Io(_) => Failure::Usage(msg),
            PipelineError::Graph(g) => graph_failure(g),
            _ => Failure::Numeric(msg),
        }
    }
}

fn graph_failure(e: GraphError) -> Failure {
    let msg = e.to_string();
    match e {
        GraphError::DegenerateEdit(_)
        | GraphError::UndefinedRatio
        | GraphError::DivisionByZero { .. }
        | GraphError::Infeasible { .. } => Failure::Numeric(msg),
        _ => Failure::Usage(msg),
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        graph_failure(e)
    }
}

impl From<fairgraph_core::error::DataError> for Failure {
    fn from(e: fairgraph_core::error::DataError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = with_thread_cap(move || match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Edit(a) => edit(a),
        Command::Pretrain(a) => pretrain_cmd(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Grid(a) => grid(a),
        Command::Verify(a) => verify(a),
        Command::Synth(a) => synth(a),
        Command::Export(a) => export(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Numeric(msg) | Failure::Usage(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}

fn load(name_or_path: &str) -> Result<Dataset, Failure> {
    let spec = DatasetSpec::resolve(name_or_path)?;
    Ok(load_dataset(&spec)?)
}

fn write_json(dir: &Path, file: &str, value: &impl Serialize) -> CmdResult {
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    std::fs::write(dir.join(file), text)?;
    Ok(())
}

/// Write the artifact when asked and print either it or the summary.
fn emit(output: &Output, file: &str, artifact: &impl Serialize, summary: impl FnOnce() -> String) -> CmdResult {
    if let Some(dir) = &output.out {
        write_json(dir, file, artifact)?;
    }
    if output.json {
        println!("{}", serde_json::to_string_pretty(artifact).map_err(|e| Failure::Usage(e.to_string()))?);
    } else {
        println!("{}", summary());
    }
    Ok(())
}

fn node_labels(ds: &Dataset, source: LabelSource, checkpoint: Option<&Path>) -> Result<NodeLabels, Failure> {
    match (source, checkpoint) {
        (LabelSource::Truth, _) => Ok(ds.node_labels()),
        (LabelSource::Pseudo, None) => Err(Failure::Usage("--labels pseudo requires --checkpoint".into())),
        (LabelSource::Pseudo, Some(path)) => {
            let ck = Checkpoint::load(path)?;
            if ck.pseudo_labels.len() != ds.n() {
                return Err(Failure::Usage(format!(
                    "checkpoint has {} pseudo-labels, dataset has {} nodes",
                    ck.pseudo_labels.len(),
                    ds.n()
                )));
            }
            Ok(NodeLabels::fully_labeled(&ck.pseudo_labels, &ds.sensitive))
        }
    }
}

fn source_name(s: LabelSource) -> &'static str {
    match s {
        LabelSource::Truth => "truth",
        LabelSource::Pseudo => "pseudo",
    }
}

#[derive(Serialize)]
struct AnalyzeOutput {
    library_version: &'static str,
    dataset: String,
    labels: &'static str,
    n: usize,
    m: usize,
    edges_skipped_unlabeled: u64,
    census: EdgeCensus,
    type_i: u64,
    type_ii: u64,
    type_iii: u64,
    type_iv: u64,
    hr_c: f64,
    hr_s: f64,
}

fn analyze(a: LabelArgs) -> CmdResult {
    // usage errors come before any file access
    if matches!(a.labels, LabelSource::Pseudo) && a.checkpoint.is_none() {
        return Err(Failure::Usage("--labels pseudo requires --checkpoint".into()));
    }
    let ds = load(&a.dataset)?;
    let labels = node_labels(&ds, a.labels, a.checkpoint.as_deref())?;
    let (census, skipped) = EdgeCensus::of_labeled(&ds.graph, &labels)?;
    let out = AnalyzeOutput {
        library_version: LIBRARY_VERSION,
        dataset: ds.name.clone(),
        labels: source_name(a.labels),
        n: ds.n(),
        m: ds.graph.m(),
        edges_skipped_unlabeled: skipped,
        census,
        type_i: census.by_type[0],
        type_ii: census.by_type[1],
        type_iii: census.by_type[2],
        type_iv: census.by_type[3],
        hr_c: census.hr_c()?,
        hr_s: census.hr_s()?,
    };
    emit(&a.output, "analyze.json", &out, || {
        format!(
            "dataset {} ({} labels)\nn {}\nm {}\nedges_skipped_unlabeled {}\ntype_i {}\ntype_ii {}\ntype_iii {}\ntype_iv {}\nhr_c {}\nhr_s {}",
            out.dataset,
            out.labels,
            out.n,
            out.m,
            out.edges_skipped_unlabeled,
            out.type_i,
            out.type_ii,
            out.type_iii,
            out.type_iv,
            out.hr_c,
            out.hr_s
        )
    })
}

fn edit_summary(report: &EditReport, residual: f64) -> String {
    format!(
        "removed {}\nhr_c {} -> {}\nhr_s {} -> {}\nidentity_residual {}",
        report.removed_edges.len(),
        report.hr_c_before,
        report.hr_c_after,
        report.hr_s_before,
        report.hr_s_after,
        residual
    )
}

fn edit(a: LabelArgs) -> CmdResult {
    if matches!(a.labels, LabelSource::Pseudo) && a.checkpoint.is_none() {
        return Err(Failure::Usage("--labels pseudo requires --checkpoint".into()));
    }
    let ds = load(&a.dataset)?;
    let labels = node_labels(&ds, a.labels, a.checkpoint.as_deref())?;
    let (edited, report) = fair_edge_remove(&ds.graph, &labels)?;
    let residual = edit_identity_residual(&report)?;
    if let Some(dir) = &a.output.out {
        std::fs::create_dir_all(dir)?;
        write_edge_list(&edited, std::io::BufWriter::new(std::fs::File::create(dir.join("edited_edges.txt"))?))?;
    }
    let out = json!({
        "library_version": LIBRARY_VERSION,
        "dataset": ds.name,
        "labels": source_name(a.labels),
        "edit": report,
        "identity_residual": residual,
    });
    emit(&a.output, "edit.json", &out, || format!("dataset {}\n{}", ds.name, edit_summary(&report, residual)))
}

fn build_config(c: &ConfigArgs) -> Result<TrainConfig, Failure> {
    let mut cfg = match &c.config {
        Some(path) => TrainConfig::from_json(&std::fs::read_to_string(path)?)?,
        // benchmark presets start from their published optimum
        None => TrainConfig {
            weights: LossWeights::for_dataset(&c.dataset).unwrap_or_default(),
            ..TrainConfig::default()
        },
    };
    if let Some(m) = c.mode {
        cfg.mode = m;
    }
    if let Some(s) = c.seed {
        cfg.seeds = vec![s];
    }
    if let Some(k) = c.splits {
        cfg.splits.count = k;
    }
    let w = &mut cfg.weights;
    for (slot, v) in [
        (&mut w.alpha, c.alpha),
        (&mut w.beta, c.beta),
        (&mut w.gamma, c.gamma),
        (&mut w.omega, c.omega),
        (&mut w.eta, c.eta),
        (&mut w.kappa, c.kappa),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    if let Some(k) = c.k {
        w.k = k;
    }
    if let Some(k) = c.k_prime {
        w.k_prime = k;
    }
    if let Some(lr) = c.lr {
        cfg.lr = lr;
    }
    if let Some(t) = c.t_pre {
        cfg.t_pre = t;
    }
    if let Some(t) = c.t_train {
        cfg.t_train = t;
    }
    if let Some(o) = c.optimizer {
        cfg.optimizer = match o {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Adam => OptimizerKind::Adam,
        };
    }
    if let Some(d) = c.dis_metric {
        cfg.dis_metric = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn pretrain_cmd(a: PretrainArgs) -> CmdResult {
    let cfg = build_config(&a.cfg)?;
    let ds = load(&a.cfg.dataset)?;
    let start = Instant::now();
    let seed = cfg.seeds[0];
    let (_, split_id, masks) = plan_runs(&ds, &cfg)?
        .into_iter()
        .find(|(s, id, _)| *s == seed && *id == a.split_id)
        .ok_or_else(|| Failure::Usage(format!("no split {} for seed {seed}", a.split_id)))?;
    let (x, _) = prepare_features(&ds, &masks, &cfg);
    let pre = pretrain(&ds.graph, &x, &ds.labels, &ds.sensitive, &masks, &cfg, seed)?;
    let (_, report) = run_phase1(&ds.graph, &pre.pseudo_labels, &ds.sensitive, cfg.mode)?;
    let residual = edit_identity_residual(&report)?;
    let test_acc = {
        let hits = masks
            .test
            .iter()
            .filter(|&&v| ds.labels[v] == Some(pre.pseudo_labels[v]))
            .count();
        100.0 * hits as f64 / masks.test.len().max(1) as f64
    };
    let final_loss = pre.losses.last().copied();
    let out = json!({
        "library_version": LIBRARY_VERSION,
        "config_hash": cfg.hash(),
        "dataset": ds.name,
        "mode": cfg.mode,
        "seed": seed,
        "split_id": split_id,
        "final_loss": final_loss,
        "losses": pre.losses,
        "pseudo_test_accuracy": test_acc,
        "edit": report,
        "identity_residual": residual,
        "elapsed_ms": start.elapsed().as_millis() as u64,
    });
    emit(&a.cfg.output, "pretrain.json", &out, || {
        format!(
            "dataset {} seed {seed} split {split_id}\nfinal_loss {}\npseudo_test_accuracy {}\n{}",
            ds.name,
            final_loss.map_or("none".to_string(), |l| l.to_string()),
            test_acc,
            edit_summary(&report, residual)
        )
    })
}

fn train(a: TrainArgs) -> CmdResult {
    let cfg = build_config(&a.cfg)?;
    let ds = load(&a.cfg.dataset)?;
    let runs = run_all(&ds, &cfg)?;
    let reports: Vec<RunReport> = runs.iter().map(|r| RunReport::new(&ds.name, &cfg, r)).collect::<Result<_, _>>()?;
    let aggregate = AggregateReport::from_reports(&ds.name, &cfg, &runs.iter().map(|r| r.test.clone()).collect::<Vec<_>>());
    if let Some(dir) = &a.cfg.output.out {
        write_json(dir, "runs.json", &reports)?;
        if !a.no_checkpoints {
            for r in &runs {
                let ck = Checkpoint::new(&ds.name, &cfg, r);
                std::fs::create_dir_all(dir.join("checkpoints"))?;
                ck.save(&dir.join("checkpoints").join(format!("seed{}_split{}.json", r.seed, r.split_id)))?;
            }
        }
    }
    let out = json!({
        "library_version": LIBRARY_VERSION,
        "config_hash": cfg.hash(),
        "config": cfg,
        "aggregate": aggregate,
        "runs": reports.iter().map(|r| json!({
            "seed": r.seed,
            "split_id": r.split_id,
            "mode": r.mode,
            "best_epoch": r.best_epoch,
            "test": r.test,
            "edit_identity_residual": r.edit_identity_residual,
        })).collect::<Vec<_>>(),
    });
    emit(&a.cfg.output, "aggregate.json", &out, || {
        let mut s = String::new();
        for r in &reports {
            s += &format!(
                "seed {} split {} best_epoch {} BACC {} AUC {} F1 {} dSP {} dEO {}\n",
                r.seed, r.split_id, r.best_epoch, r.test.bacc, r.test.auc, r.test.f1, r.test.delta_sp, r.test.delta_eo
            );
        }
        s + &aggregate.table()
    })
}

fn checkpoint_dataset(ck: &Checkpoint, flag: Option<&str>) -> Result<Dataset, Failure> {
    load(flag.unwrap_or(&ck.dataset))
}

fn evaluate(a: EvaluateArgs) -> CmdResult {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let ds = checkpoint_dataset(&ck, a.dataset.as_deref())?;
    let (_, report) = ck.evaluate(&ds)?;
    let matches = report == ck.test;
    let out = json!({
        "library_version": LIBRARY_VERSION,
        "config_hash": ck.config_hash,
        "dataset": ds.name,
        "mode": ck.mode,
        "seed": ck.seed,
        "split_id": ck.split_id,
        "test": report,
        "matches_stored": matches,
    });
    emit(&a.output, "evaluate.json", &out, || {
        format!(
            "BACC {} AUC {} F1 {} dSP {} dEO {} score {}\nmatches_stored {matches}",
            report.bacc, report.auc, report.f1, report.delta_sp, report.delta_eo, report.score
        )
    })?;
    if matches {
        Ok(())
    } else {
        Err(Failure::Numeric("recomputed report differs from the stored one".into()))
    }
}

fn grid(a: GridArgs) -> CmdResult {
    let cfg = build_config(&a.cfg)?;
    let spec = match (&a.grid, a.full_grid) {
        (Some(path), _) => serde_json::from_str::<GridSpec>(&std::fs::read_to_string(path)?)
            .map_err(|e| Failure::Usage(format!("grid file: {e}")))?,
        (None, true) => GridSpec::reference(),
        (None, false) => return Err(Failure::Usage("pass --grid FILE or --full-grid".into())),
    };
    if spec.is_empty() {
        return Err(Failure::Usage("grid has no cells".into()));
    }
    let ds = load(&a.cfg.dataset)?;
    let cells = grid_search(&ds, &cfg, &spec)?;
    let rows: Vec<_> = cells
        .iter()
        .map(|c| {
            json!({
                "index": c.index,
                "weights": c.weights,
                "mean_val_score": c.mean_val_score,
                "test": c.test,
                "error": c.error,
            })
        })
        .collect();
    let out = json!({
        "library_version": LIBRARY_VERSION,
        "config_hash": cfg.hash(),
        "dataset": ds.name,
        "mode": cfg.mode,
        "cells": rows,
    });
    emit(&a.cfg.output, "grid.json", &out, || {
        let mut s = format!("{} cells, best first\n", cells.len());
        for c in cells.iter().take(a.top) {
            let w = &c.weights;
            s += &format!(
                "#{} K {} K' {} alpha {} beta {} gamma {} omega {} eta {} val_score {}\n",
                c.index,
                w.k,
                w.k_prime,
                w.alpha,
                w.beta,
                w.gamma,
                w.omega,
                w.eta,
                c.mean_val_score.map_or_else(|| format!("failed ({})", c.error.as_deref().unwrap_or("")), |v| v.to_string())
            );
        }
        s.trim_end().to_string()
    })
}

fn verify(a: VerifyArgs) -> CmdResult {
    if a.graphs == 0 {
        return Err(Failure::Usage("--graphs must be at least 1".into()));
    }
    let mut suites: Vec<SuiteReport> = theory_suites(a.graphs, a.seed, a.inject_fault);
    suites.push(tvmf_suite(10_000));
    suites.push(counterfactual_suite(a.graphs, a.seed));
    let mut gradients = Vec::new();
    if a.grad_seeds > 0 {
        let seeds: Vec<u64> = (a.seed..a.seed + a.grad_seeds).collect();
        let (rep, cases) = gradient_suite(&seeds);
        suites.push(rep);
        gradients = cases;
    }
    let passed = suites.iter().all(|s| s.passed);
    let identity = suites.iter().find(|s| s.name == "identity").map_or(0.0, |s| s.max_residual);
    let first_failure = suites.iter().find(|s| !s.passed);
    let out = json!({
        "library_version": LIBRARY_VERSION,
        "seed": a.seed,
        "graphs": a.graphs,
        "inject_fault": a.inject_fault,
        "passed": passed,
        "max_identity_residual": identity,
        "suites": suites,
        "gradients": gradients,
        "first_counterexample": first_failure.map(|s| json!({ "suite": s.name, "case": s.counterexample })),
    });
    emit(&a.output, "verify.json", &out, || {
        let mut s = String::new();
        for r in &suites {
            s += &format!(
                "{:<26} {} cases {:>5} checks {:>7} max_residual {:e} ({} ms)\n",
                r.name,
                if r.passed { "PASS" } else { "FAIL" },
                r.cases,
                r.checks,
                r.max_residual,
                r.elapsed_ms
            );
        }
        s += &format!("max_identity_residual {identity}");
        s
    })?;
    match first_failure {
        None => Ok(()),
        Some(s) => {
            let example = serde_json::to_string(&s.counterexample).unwrap_or_default();
            Err(Failure::Numeric(format!("suite `{}` failed; first counterexample: {example}", s.name)))
        }
    }
}

fn synth(a: SynthArgs) -> CmdResult {
    let mut cfg: SynthConfig = match &a.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Failure::Usage(format!("synth config: {e}")))?,
        None => SynthConfig::default(),
    };
    if let Some(v) = a.n {
        cfg.n = v;
    }
    if let Some(v) = a.hr_c {
        cfg.target_hr_c = v;
    }
    if let Some(v) = a.hr_s {
        cfg.target_hr_s = v;
    }
    if let Some(v) = a.degree {
        cfg.mean_degree = v;
    }
    if let Some(v) = a.features {
        cfg.feature_dim = v;
    }
    if let Some(v) = a.label_rate {
        cfg.label_rate = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    let (ds, summary) = synth_generate(&cfg)?;
    write_dataset(&ds, &a.out)?;
    let (census, skipped) = EdgeCensus::of_labeled(&ds.graph, &ds.node_labels())?;
    let (hr_c, hr_s) = (census.hr_c()?, census.hr_s()?);
    let out = json!({
        "library_version": LIBRARY_VERSION,
        "config": cfg,
        "expected": summary,
        "census": census,
        "edges_skipped_unlabeled": skipped,
        "hr_c": hr_c,
        "hr_s": hr_s,
    });
    write_json(&a.out, "synth.json", &out)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&out).map_err(|e| Failure::Usage(e.to_string()))?);
    } else {
        println!(
            "wrote {} (n {}, m {})\nhr_c {hr_c}\nhr_s {hr_s}",
            a.out.display(),
            ds.n(),
            ds.graph.m()
        );
    }
    Ok(())
}

fn export(a: ExportArgs) -> CmdResult {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let ds = checkpoint_dataset(&ck, a.dataset.as_deref())?;
    if ds.n() != ck.pseudo_labels.len() {
        return Err(Failure::Usage(format!(
            "checkpoint covers {} nodes, dataset has {}",
            ck.pseudo_labels.len(),
            ds.n()
        )));
    }
    let g = ck.edited_graph(&ds.graph);
    let x = match &ck.standardizer {
        Some(st) => st.apply(&ds.features),
        None => ds.features.clone(),
    };
    let latent = encode(&ck.params, &g, &x).map_err(|e| Failure::Numeric(e.to_string()))?;
    std::fs::create_dir_all(&a.out)?;
    let path = a.out.join("embeddings.csv");
    export_embeddings(&latent, &ds.labels, &ds.sensitive, Some(&ck.masks), &path)?;
    println!("wrote {} ({} nodes, d_c {}, d_e {})", path.display(), ds.n(), latent.c.cols(), latent.e.cols());
    Ok(())
}
