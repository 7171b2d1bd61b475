//! Shared fixtures for the kernel benchmarks in `benches/`.

use fairgraph_core::data::{synth_generate, Dataset, SynthConfig};
use fairgraph_core::losses::{sample_negative_edges, select_counterfactuals, CounterfactualIndex};
use fairgraph_core::model::{encode, init_params, LatentState, ModelParams};

pub struct Fixture {
    pub ds: Dataset,
    pub labels: Vec<u8>,
    pub params: ModelParams,
    pub latent: LatentState,
    pub counterfactuals: CounterfactualIndex,
    pub negatives: Vec<(usize, usize)>,
    pub train: Vec<usize>,
}

/// A German-shaped synthetic graph of `n` nodes with a freshly initialised
/// model and its latent state.
pub fn fixture(n: usize) -> Fixture {
    let (ds, _) = synth_generate(&SynthConfig {
        n,
        target_hr_c: 0.59,
        target_hr_s: 0.8,
        mean_degree: 20.0,
        feature_dim: 27,
        seed: 1,
        ..Default::default()
    })
    .expect("feasible targets");
    let labels: Vec<u8> = ds.labels.iter().map(|l| l.unwrap_or(0)).collect();
    let params = init_params(ds.features.cols(), 16, 16, 7);
    let latent = encode(&params, &ds.graph, &ds.features).expect("finite forward pass");
    let counterfactuals = select_counterfactuals(&latent.h, &labels, &ds.sensitive, 5);
    let negatives = sample_negative_edges(&ds.graph, ds.graph.m(), 3).expect("sparse graph");
    let train = (0..n).step_by(2).collect();
    Fixture {
        ds,
        labels,
        params,
        latent,
        counterfactuals,
        negatives,
        train,
    }
}
