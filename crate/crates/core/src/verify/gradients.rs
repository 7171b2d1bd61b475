use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use super::SuiteReport;
use crate::data::{synth_generate, SynthConfig};
use crate::losses::{
    env_loss, inv_loss, pred_loss, sample_negative_edges, sc_loss, select_counterfactuals, suf_loss, DisMetric,
    LossOutput, LossWeights,
};
use crate::model::{encode, init_params};
use crate::numerics::{grad_check, GradCheckConfig, Matrix, Probe};
use crate::pipeline::Objective;
use crate::seed::{derive_seed, rng_for};

/// Relative-error bound every analytic gradient must meet.
pub const GRADIENT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct GradientCase {
    pub seed: u64,
    pub target: String,
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
    pub worst: Option<(usize, usize, f64, f64)>,
}

fn probe(out: Result<LossOutput, impl std::fmt::Display>) -> Probe {
    match out {
        Ok(o) => Probe {
            value: o.value,
            signature: o.signature,
        },
        Err(_) => Probe::smooth(f64::NAN),
    }
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect()).expect("sizes agree")
}

/// Central-difference checks of every loss against its own inputs, then of
/// each term and the composite objective through the encoder with respect
/// to all six parameter matrices.
pub fn gradient_suite(seeds: &[u64]) -> (SuiteReport, Vec<GradientCase>) {
    let start = Instant::now();
    let mut rep = SuiteReport::new("gradients");
    let mut cases = Vec::new();
    for &seed in seeds {
        rep.cases += 1;
        let mut push = |target: &str, result: Result<crate::numerics::GradCheckReport, String>| {
            rep.checks += 1;
            match result {
                Ok(r) => {
                    rep.residual(r.max_rel_error);
                    let case = GradientCase {
                        seed,
                        target: target.to_string(),
                        max_rel_error: r.max_rel_error,
                        checked: r.checked,
                        skipped_kinks: r.skipped_kinks,
                        worst: r.worst,
                    };
                    if r.max_rel_error.is_nan() || r.max_rel_error >= GRADIENT_TOL || r.checked == 0 {
                        rep.fail(serde_json::to_value(&case).unwrap_or_default());
                    }
                    cases.push(case);
                }
                Err(e) => rep.fail(json!({ "seed": seed, "target": target, "error": e })),
            }
        };
        let cfg = GradCheckConfig {
            eps: 1e-6,
            coords_per_param: 30,
            seed,
        };

        let (ds, _) = match synth_generate(&SynthConfig {
            n: 40,
            feature_dim: 5,
            mean_degree: 4.0,
            seed: derive_seed(seed, "grad-data"),
            ..Default::default()
        }) {
            Ok(v) => v,
            Err(e) => {
                push("data", Err(e.to_string()));
                continue;
            }
        };
        let n = ds.n();
        let y: Vec<u8> = ds.labels.iter().map(|l| l.unwrap_or(0)).collect();
        let labels = &ds.labels;
        let s = &ds.sensitive;
        let all: Vec<usize> = (0..n).collect();
        let mut rng = rng_for(seed, "grad-inputs");
        let d = 6;

        // each loss against its own inputs
        let probs = random_matrix(&mut rng, n, 1, 0.05, 0.95);
        let out = pred_loss(&probs, labels, &all);
        push(
            "pred",
            out.map_err(|e| e.to_string()).and_then(|o| {
                grad_check(|p| probe(pred_loss(&p[0], labels, &all)), std::slice::from_ref(&probs), &o.grads, &cfg)
                    .map_err(|e| e.to_string())
            }),
        );

        let c = random_matrix(&mut rng, n, d, -1.0, 1.0);
        let e = random_matrix(&mut rng, n, d, -1.0, 1.0);
        let h = c.concat_cols(&e).expect("same rows");
        let cf = select_counterfactuals(&h, &y, s, 3);
        for metric in [DisMetric::Cosine, DisMetric::L2] {
            let r = inv_loss(&c, &e, &cf, 0.7, metric).map_err(|e| e.to_string()).and_then(|o| {
                grad_check(
                    |p| probe(inv_loss(&p[0], &p[1], &cf, 0.7, metric)),
                    &[c.clone(), e.clone()],
                    &o.grads,
                    &cfg,
                )
                .map_err(|e| e.to_string())
            });
            push(&format!("inv/{metric:?}"), r);
        }

        let negatives = match sample_negative_edges(&ds.graph, ds.graph.m(), derive_seed(seed, "grad-neg")) {
            Ok(v) => v,
            Err(e) => {
                push("negatives", Err(e.to_string()));
                continue;
            }
        };
        let edges = ds.graph.edges();
        let r = suf_loss(&h, edges, &negatives).map_err(|e| e.to_string()).and_then(|o| {
            grad_check(|p| probe(suf_loss(&p[0], edges, &negatives)), std::slice::from_ref(&h), &o.grads, &cfg)
                .map_err(|e| e.to_string())
        });
        push("suf", r);

        for kappa in [0.0, 1.0, 4.0] {
            let r = sc_loss(&c, labels, &all, kappa).map_err(|e| e.to_string()).and_then(|o| {
                grad_check(|p| probe(sc_loss(&p[0], labels, &all, kappa)), std::slice::from_ref(&c), &o.grads, &cfg)
                    .map_err(|e| e.to_string())
            });
            push(&format!("sc/kappa={kappa}"), r);
        }

        let r = env_loss(&e, s, 3).map_err(|e| e.to_string()).and_then(|o| {
            grad_check(|p| probe(env_loss(&p[0], s, 3)), std::slice::from_ref(&e), &o.grads, &cfg).map_err(|e| e.to_string())
        });
        push("env", r);

        // through the encoder
        let params = init_params(ds.features.cols(), 8, 4, derive_seed(seed, "grad-model"));
        let latent = match encode(&params, &ds.graph, &ds.features) {
            Ok(l) => l,
            Err(e) => {
                push("encode", Err(e.to_string()));
                continue;
            }
        };
        let cf = select_counterfactuals(&latent.h, &y, s, 3);
        let train: Vec<usize> = all.iter().copied().filter(|v| v % 2 == 0).collect();
        let full = LossWeights {
            alpha: 0.9,
            beta: 0.5,
            gamma: 0.1,
            omega: 0.3,
            eta: 0.09,
            k: 3,
            k_prime: 3,
            kappa: 1.0,
        };
        let zero = LossWeights {
            alpha: 0.0,
            beta: 0.0,
            omega: 0.0,
            eta: 0.0,
            ..full
        };
        let variants = [
            ("model/pred", zero),
            ("model/inv", LossWeights { alpha: full.alpha, ..zero }),
            ("model/suf", LossWeights { beta: full.beta, ..zero }),
            ("model/sc", LossWeights { omega: full.omega, ..zero }),
            ("model/env", LossWeights { eta: full.eta, ..zero }),
            ("model/composite", full),
        ];
        for (name, weights) in variants {
            let obj = Objective {
                graph: &ds.graph,
                x: &ds.features,
                labels,
                train: &train,
                sensitive: s,
                sc_labels: labels,
                sc_members: &train,
                counterfactuals: Some(&cf),
                negatives: &negatives,
                weights,
                metric: DisMetric::Cosine,
            };
            let r = obj.evaluate(&params).map_err(|e| e.to_string()).and_then(|v| {
                grad_check(
                    |p| match obj.evaluate(&params.with_tensors(p)) {
                        Ok(v) => Probe {
                            value: v.total,
                            signature: v.signature,
                        },
                        Err(_) => Probe::smooth(f64::NAN),
                    },
                    &params.to_vec(),
                    &v.grads,
                    &cfg,
                )
                .map_err(|e| e.to_string())
            });
            push(name, r);
        }
    }
    rep.elapsed_ms = start.elapsed().as_millis();
    (rep, cases)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_at_one_seed() {
        let (rep, cases) = gradient_suite(&[3]);
        assert!(rep.passed, "{rep:?}");
        assert_eq!(cases.len(), 14);
    }
}
