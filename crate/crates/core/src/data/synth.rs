//! Planted partition over the four `(y, s)` blocks.
//!
//! Edges of each type (I–IV) are drawn independently per node pair with a
//! type-specific probability chosen so the expected type fractions are
//! `hr_c·hr_s`, `hr_c(1−hr_s)`, `(1−hr_c)hr_s`, `(1−hr_c)(1−hr_s)`; the
//! expected homophily ratios then equal the targets.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::DataError;
use crate::graph::{EdgeType, Graph};
use crate::numerics::Matrix;
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n: usize,
    /// Fraction of nodes with `y = 1`.
    pub class_balance: f64,
    /// Fraction of nodes with `s = 1`.
    pub sensitive_balance: f64,
    pub target_hr_c: f64,
    pub target_hr_s: f64,
    pub mean_degree: f64,
    pub feature_dim: usize,
    /// Shift of class-informative feature means, `±signal`.
    pub signal: f64,
    /// Shift of sensitive-informative feature means, `±sensitive_signal`.
    pub sensitive_signal: f64,
    pub noise: f64,
    /// Fraction of nodes whose label is exposed.
    pub label_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            class_balance: 0.5,
            sensitive_balance: 0.5,
            target_hr_c: 0.6,
            target_hr_s: 0.8,
            mean_degree: 10.0,
            feature_dim: 8,
            signal: 1.0,
            sensitive_signal: 0.5,
            noise: 1.0,
            label_rate: 1.0,
            seed: 0,
        }
    }
}

/// Node counts per block, indexed `[y][s]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSizes(pub [[usize; 2]; 2]);

impl BlockSizes {
    /// Unordered node pairs of each edge type, indexed like [`EdgeType::ALL`].
    pub fn pair_counts(&self) -> [u64; 4] {
        let b = |y: usize, s: usize| self.0[y][s] as u64;
        let within = |k: u64| k * k.saturating_sub(1) / 2;
        [
            within(b(0, 0)) + within(b(0, 1)) + within(b(1, 0)) + within(b(1, 1)),
            b(0, 0) * b(0, 1) + b(1, 0) * b(1, 1),
            b(0, 0) * b(1, 0) + b(0, 1) * b(1, 1),
            b(0, 0) * b(1, 1) + b(0, 1) * b(1, 0),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub blocks: BlockSizes,
    /// Per-type pair probability, indexed like [`EdgeType::ALL`].
    pub probabilities: [f64; 4],
    /// Expected count and variance of each edge type.
    pub expected: [f64; 4],
    pub variance: [f64; 4],
}

fn type_fractions(hr_c: f64, hr_s: f64) -> [f64; 4] {
    [hr_c * hr_s, hr_c * (1.0 - hr_s), (1.0 - hr_c) * hr_s, (1.0 - hr_c) * (1.0 - hr_s)]
}

/// Per-type probabilities and the mean/variance of each type count for the
/// given block sizes. Fails when a probability would exceed 1 or a type with
/// positive target mass has no pairs.
pub fn expected_census(cfg: &SynthConfig, blocks: &BlockSizes) -> Result<SynthSummary, DataError> {
    let pairs = blocks.pair_counts();
    let edges = cfg.n as f64 * cfg.mean_degree / 2.0;
    let frac = type_fractions(cfg.target_hr_c, cfg.target_hr_s);
    let mut probabilities = [0.0; 4];
    for t in 0..4 {
        if frac[t] == 0.0 {
            continue;
        }
        if pairs[t] == 0 {
            return Err(DataError::Infeasible(format!(
                "edge type {:?} has target fraction {} but no node pairs",
                EdgeType::ALL[t],
                frac[t]
            )));
        }
        let p = frac[t] * edges / pairs[t] as f64;
        if p > 1.0 {
            return Err(DataError::Infeasible(format!(
                "edge type {:?} needs pair probability {p:.4} > 1; lower mean_degree or move the targets",
                EdgeType::ALL[t]
            )));
        }
        probabilities[t] = p;
    }
    let expected = std::array::from_fn(|t| probabilities[t] * pairs[t] as f64);
    let variance = std::array::from_fn(|t| probabilities[t] * (1.0 - probabilities[t]) * pairs[t] as f64);
    Ok(SynthSummary {
        blocks: *blocks,
        probabilities,
        expected,
        variance,
    })
}

fn validate(cfg: &SynthConfig) -> Result<(), DataError> {
    let unit = |name: &str, v: f64| {
        if (0.0..=1.0).contains(&v) {
            Ok(())
        } else {
            Err(DataError::Infeasible(format!("{name} = {v} outside [0, 1]")))
        }
    };
    unit("class_balance", cfg.class_balance)?;
    unit("sensitive_balance", cfg.sensitive_balance)?;
    unit("target_hr_c", cfg.target_hr_c)?;
    unit("target_hr_s", cfg.target_hr_s)?;
    unit("label_rate", cfg.label_rate)?;
    if cfg.n < 2 {
        return Err(DataError::Infeasible("need at least 2 nodes".into()));
    }
    if !(cfg.mean_degree.is_finite() && cfg.mean_degree >= 0.0) {
        return Err(DataError::Infeasible(format!("mean_degree = {}", cfg.mean_degree)));
    }
    if !(cfg.noise >= 0.0 && cfg.signal.is_finite() && cfg.sensitive_signal.is_finite()) {
        return Err(DataError::Infeasible("feature parameters must be finite, noise ≥ 0".into()));
    }
    Ok(())
}

// Independent Bernoulli(p) over `total` slots, visiting hits in order by
// geometric skipping.
fn bernoulli_hits(total: u64, p: f64, rng: &mut impl Rng, mut hit: impl FnMut(u64)) {
    if p <= 0.0 || total == 0 {
        return;
    }
    if p >= 1.0 {
        (0..total).for_each(hit);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut k: u64 = 0;
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
        let skip = (u.ln() / log_q).floor();
        if !skip.is_finite() || skip >= (total - k) as f64 {
            return;
        }
        k += skip as u64;
        hit(k);
        k += 1;
        if k >= total {
            return;
        }
    }
}

// k-th pair (i < j) of 0..m in row-major order.
fn triangle_pair(k: u64, m: u64) -> (u64, u64) {
    let mf = m as f64;
    let mut i = ((2.0 * mf - 1.0 - ((2.0 * mf - 1.0).powi(2) - 8.0 * k as f64).max(0.0).sqrt()) / 2.0).floor() as u64;
    let start = |i: u64| i * (2 * m - i - 1) / 2;
    while i > 0 && start(i) > k {
        i -= 1;
    }
    while i + 1 < m && start(i + 1) <= k {
        i += 1;
    }
    (i, i + 1 + (k - start(i)))
}

/// Generate a labelled graph with the requested expected homophily ratios.
pub fn synth_generate(cfg: &SynthConfig) -> Result<(Dataset, SynthSummary), DataError> {
    validate(cfg)?;
    let n = cfg.n;
    let mut rng = rng_for(cfg.seed, "synth-assign");
    let n_y1 = (cfg.class_balance * n as f64).round() as usize;
    let n_s1 = (cfg.sensitive_balance * n as f64).round() as usize;
    let mut y: Vec<u8> = (0..n).map(|i| u8::from(i < n_y1)).collect();
    let mut s: Vec<u8> = (0..n).map(|i| u8::from(i < n_s1)).collect();
    y.shuffle(&mut rng);
    s.shuffle(&mut rng);

    let mut members: [[Vec<usize>; 2]; 2] = Default::default();
    for v in 0..n {
        members[y[v] as usize][s[v] as usize].push(v);
    }
    let blocks = BlockSizes(std::array::from_fn(|a| std::array::from_fn(|b| members[a][b].len())));
    let summary = expected_census(cfg, &blocks)?;

    let mut rng = rng_for(cfg.seed, "synth-edges");
    let mut edges = Vec::new();
    let block_ids = [(0, 0), (0, 1), (1, 0), (1, 1)];
    for (ai, &(ya, sa)) in block_ids.iter().enumerate() {
        for &(yb, sb) in &block_ids[ai..] {
            let t = EdgeType::ALL
                .iter()
                .position(|e| e.same_class() == (ya == yb) && e.same_sensitive() == (sa == sb))
                .expect("four types cover all agreements");
            let p = summary.probabilities[t];
            let (ma, mb) = (&members[ya][sa], &members[yb][sb]);
            if (ya, sa) == (yb, sb) {
                let m = ma.len() as u64;
                bernoulli_hits(m * m.saturating_sub(1) / 2, p, &mut rng, |k| {
                    let (i, j) = triangle_pair(k, m);
                    edges.push((ma[i as usize], ma[j as usize]));
                });
            } else {
                let nb = mb.len() as u64;
                bernoulli_hits(ma.len() as u64 * nb, p, &mut rng, |k| {
                    edges.push((ma[(k / nb) as usize], mb[(k % nb) as usize]));
                });
            }
        }
    }
    let graph = Graph::new(n, edges)?;

    let mut rng = rng_for(cfg.seed, "synth-features");
    let d = cfg.feature_dim;
    let mut x = Matrix::zeros(n, d);
    for v in 0..n {
        for c in 0..d {
            let shift = if c % 2 == 0 {
                cfg.signal * (2.0 * f64::from(y[v]) - 1.0)
            } else {
                cfg.sensitive_signal * (2.0 * f64::from(s[v]) - 1.0)
            };
            let z: f64 = StandardNormal.sample(&mut rng);
            x.set(v, c, shift + cfg.noise * z);
        }
    }

    let mut rng = rng_for(cfg.seed, "synth-labels");
    let n_labeled = (cfg.label_rate * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut labels = vec![None; n];
    for &v in &order[..n_labeled] {
        labels[v] = Some(y[v]);
    }

    let ds = Dataset {
        name: format!("synth-{}", cfg.seed),
        graph,
        features: x,
        feature_names: (0..d).map(|c| format!("x{c}")).collect(),
        labels,
        sensitive: s,
        dropped_edges: 0,
    };
    Ok((ds, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeCensus, NodeLabels};

    fn truth(ds: &Dataset, y_all: &[u8]) -> NodeLabels {
        NodeLabels::fully_labeled(y_all, &ds.sensitive)
    }

    #[test]
    fn triangle_decoding_is_exhaustive() {
        for m in 2..40u64 {
            let mut k = 0;
            for i in 0..m {
                for j in i + 1..m {
                    assert_eq!(triangle_pair(k, m), (i, j), "m={m} k={k}");
                    k += 1;
                }
            }
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let cfg = SynthConfig {
            n: 300,
            ..Default::default()
        };
        let (a, _) = synth_generate(&cfg).unwrap();
        let (b, _) = synth_generate(&cfg).unwrap();
        assert_eq!(a.graph.edges(), b.graph.edges());
        assert_eq!(a.features, b.features);
        let (c, _) = synth_generate(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.graph.edges(), c.graph.edges());
    }

    #[test]
    fn within_class_only_gives_full_class_homophily() {
        let cfg = SynthConfig {
            n: 400,
            target_hr_c: 1.0,
            target_hr_s: 0.3,
            ..Default::default()
        };
        let (ds, _) = synth_generate(&cfg).unwrap();
        let y: Vec<u8> = ds.labels.iter().map(|l| l.unwrap()).collect();
        let census = EdgeCensus::of(&ds.graph, &truth(&ds, &y)).unwrap();
        assert_eq!(census.hr_c().unwrap(), 1.0);
    }

    #[test]
    fn infeasible_targets_are_rejected() {
        // all nodes in one sensitive group: Type II/IV pairs do not exist
        let cfg = SynthConfig {
            n: 100,
            sensitive_balance: 0.0,
            target_hr_s: 0.5,
            ..Default::default()
        };
        assert!(matches!(synth_generate(&cfg), Err(DataError::Infeasible(_))));
        let dense = SynthConfig {
            n: 20,
            mean_degree: 50.0,
            ..Default::default()
        };
        assert!(matches!(synth_generate(&dense), Err(DataError::Infeasible(_))));
    }

    #[test]
    fn ratios_track_targets() {
        for seed in 0..10 {
            let cfg = SynthConfig {
                n: 2000,
                target_hr_c: 0.6,
                target_hr_s: 0.8,
                seed,
                ..Default::default()
            };
            let (ds, _) = synth_generate(&cfg).unwrap();
            let y: Vec<u8> = ds.labels.iter().map(|l| l.unwrap()).collect();
            let census = EdgeCensus::of(&ds.graph, &truth(&ds, &y)).unwrap();
            assert!((census.hr_c().unwrap() - 0.6).abs() < 0.03, "seed {seed}: {census:?}");
            assert!((census.hr_s().unwrap() - 0.8).abs() < 0.03, "seed {seed}: {census:?}");
        }
    }

    #[test]
    fn census_within_three_standard_errors() {
        let cfg = SynthConfig {
            n: 5000,
            mean_degree: 8.0,
            target_hr_c: 0.7,
            target_hr_s: 0.4,
            class_balance: 0.3,
            sensitive_balance: 0.6,
            seed: 3,
            ..Default::default()
        };
        let (ds, summary) = synth_generate(&cfg).unwrap();
        let y: Vec<u8> = ds.labels.iter().map(|l| l.unwrap()).collect();
        let census = EdgeCensus::of(&ds.graph, &truth(&ds, &y)).unwrap();
        for t in 0..4 {
            let got = census.by_type[t] as f64;
            let sd = summary.variance[t].sqrt();
            assert!((got - summary.expected[t]).abs() <= 3.0 * sd.max(1.0), "type {t}: {got} vs {summary:?}");
        }
    }

    #[test]
    fn partial_label_rate() {
        let cfg = SynthConfig {
            n: 200,
            label_rate: 0.25,
            ..Default::default()
        };
        let (ds, _) = synth_generate(&cfg).unwrap();
        assert_eq!(ds.labeled_ids().len(), 50);
    }
}
