use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use fairgraph_bench::fixture;
use fairgraph_core::graph::{fair_edge_remove, EdgeCensus, NodeLabels};
use fairgraph_core::losses::{env_loss, inv_loss, sc_loss, select_counterfactuals, suf_loss, DisMetric, LossWeights};
use fairgraph_core::model::encode;
use fairgraph_core::pipeline::Objective;

fn graph_edit(c: &mut Criterion) {
    let mut g = c.benchmark_group("edit");
    for n in [1000, 5000] {
        let f = fixture(n);
        let labels = NodeLabels::fully_labeled(&f.labels, &f.ds.sensitive);
        g.bench_with_input(BenchmarkId::new("census", n), &n, |b, _| {
            b.iter(|| EdgeCensus::of(black_box(&f.ds.graph), &labels).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("fair_edge_remove", n), &n, |b, _| {
            b.iter(|| fair_edge_remove(black_box(&f.ds.graph), &labels).unwrap())
        });
    }
    g.finish();
}

fn model(c: &mut Criterion) {
    let f = fixture(1000);
    c.bench_function("encode/1000", |b| b.iter(|| encode(&f.params, &f.ds.graph, black_box(&f.ds.features)).unwrap()));
    let obj = Objective {
        graph: &f.ds.graph,
        x: &f.ds.features,
        labels: &f.ds.labels,
        train: &f.train,
        sensitive: &f.ds.sensitive,
        sc_labels: &f.ds.labels,
        sc_members: &f.train,
        counterfactuals: Some(&f.counterfactuals),
        negatives: &f.negatives,
        weights: LossWeights::default(),
        metric: DisMetric::Cosine,
    };
    c.bench_function("objective+grad/1000", |b| b.iter(|| obj.evaluate(black_box(&f.params)).unwrap()));
}

fn losses(c: &mut Criterion) {
    let f = fixture(1000);
    let l = &f.latent;
    let mut g = c.benchmark_group("losses/1000");
    g.bench_function("select_counterfactuals", |b| {
        b.iter(|| select_counterfactuals(black_box(&l.h), &f.labels, &f.ds.sensitive, 5))
    });
    g.bench_function("inv", |b| b.iter(|| inv_loss(&l.c, &l.e, &f.counterfactuals, 1.0, DisMetric::Cosine).unwrap()));
    g.bench_function("suf", |b| b.iter(|| suf_loss(&l.h, f.ds.graph.edges(), &f.negatives).unwrap()));
    g.bench_function("sc", |b| b.iter(|| sc_loss(&l.c, &f.ds.labels, &f.train, 1.0).unwrap()));
    g.bench_function("env", |b| b.iter(|| env_loss(&l.e, &f.ds.sensitive, 5).unwrap()));
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = graph_edit, model, losses
}
criterion_main!(benches);
