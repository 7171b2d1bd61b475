//! Randomised property suites over the editing theory, the t-vMF similarity,
//! counterfactual search and the analytic gradients. Shared by the command
//! line `verify` command and the acceptance tests.

mod gradients;

use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::graph::oracle::{brute_force_minimal_deletions, oracle_best_deletion_sets};
use crate::graph::theory::{minimal_deletions, predict_ratio_shift, single_edge_effect, Sign};
use crate::graph::{classify_edge, fair_edge_remove, fair_edge_remove_budgeted, EdgeCensus, EdgeType, Graph, NodeLabels};
use crate::losses::{select_counterfactuals, tvmf};
use crate::numerics::Matrix;
use crate::seed::rng_for;

pub use gradients::{gradient_suite, GradientCase};

/// Outcome of one suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub checks: usize,
    pub passed: bool,
    /// Largest absolute deviation met by an identity-style check.
    pub max_residual: f64,
    pub elapsed_ms: u128,
    /// First failing case, serialised.
    pub counterexample: Option<serde_json::Value>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            checks: 0,
            passed: true,
            max_residual: 0.0,
            elapsed_ms: 0,
            counterexample: None,
        }
    }

    fn fail(&mut self, example: serde_json::Value) {
        self.passed = false;
        if self.counterexample.is_none() {
            self.counterexample = Some(example);
        }
    }

    fn residual(&mut self, r: f64) {
        if r > self.max_residual || r.is_nan() {
            self.max_residual = r;
        }
    }
}

/// Identity checks hold to this absolute tolerance.
pub const IDENTITY_TOL: f64 = 1e-12;

fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> (Graph, NodeLabels) {
    loop {
        let n = rng.gen_range(3..=max_n);
        let p: f64 = rng.gen_range(0.1..0.9);
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    pairs.push((u, v));
                }
            }
        }
        if pairs.len() > max_m {
            let keep = sample(rng, pairs.len(), max_m).into_vec();
            let mut keep = keep;
            keep.sort_unstable();
            pairs = keep.into_iter().map(|i| pairs[i]).collect();
        }
        if pairs.len() < 2 {
            continue;
        }
        let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let s: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let g = Graph::new(n, pairs).expect("generated pairs are simple");
        return (g, NodeLabels::fully_labeled(&y, &s));
    }
}

// Homophily counts recomputed edge by edge, independent of the census code.
fn raw_counts(g: &Graph, l: &NodeLabels) -> (i128, i128, i128) {
    let mut nc = 0;
    let mut ns = 0;
    for &(u, v) in g.edges() {
        nc += i128::from(l.class_label[u] == l.class_label[v]);
        ns += i128::from(l.sensitive[u] == l.sensitive[v]);
    }
    (nc, ns, g.m() as i128)
}

fn instance_json(g: &Graph, l: &NodeLabels) -> serde_json::Value {
    json!({
        "n": g.n(),
        "edges": g.edges(),
        "y": l.class_label,
        "s": l.sensitive,
    })
}

fn edge_type(l: &NodeLabels, u: usize, v: usize) -> EdgeType {
    let y = |w: usize| l.class_label[w].expect("complete labels");
    classify_edge(y(u), y(v), l.sensitive[u], l.sensitive[v])
}

fn type_iii_indices(g: &Graph, l: &NodeLabels) -> Vec<usize> {
    g.edges()
        .iter()
        .enumerate()
        .filter(|(_, &(u, v))| edge_type(l, u, v) == EdgeType::III)
        .map(|(i, _)| i)
        .collect()
}

/// Deleting random Type III subsets shifts the ratios exactly as the closed
/// form predicts, and the full edit removes every Type III edge.
/// `inject_fault` makes the full edit leave one Type III edge behind.
pub fn identity_suite(graphs: usize, seed: u64, inject_fault: bool) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("identity");
    let mut rng = rng_for(seed, "verify-identity");
    while rep.cases < graphs {
        let (g, l) = random_instance(&mut rng, 30, usize::MAX);
        let t3 = type_iii_indices(&g, &l);
        if t3.is_empty() {
            continue;
        }
        rep.cases += 1;
        let census = EdgeCensus::of(&g, &l).expect("complete labels");
        let (nc, ns, m) = raw_counts(&g, &l);
        let hi = t3.len().min(g.m() - 1);
        if hi >= 1 {
            let k = rng.gen_range(1..=hi);
            let pick: Vec<usize> = sample(&mut rng, t3.len(), k).into_iter().map(|i| t3[i]).collect();
            let after = g.without_edge_indices(&pick);
            let (nc2, ns2, m2) = raw_counts(&after, &l);
            let obs_c = nc2 as f64 / m2 as f64 - nc as f64 / m as f64;
            let obs_s = ns2 as f64 / m2 as f64 - ns as f64 / m as f64;
            let (pc, ps) = predict_ratio_shift(&census, k as u64).expect("k within range");
            let r = (obs_c - pc).abs().max((obs_s - ps).abs());
            rep.checks += 1;
            rep.residual(r);
            if r.is_nan() || r > IDENTITY_TOL {
                rep.fail(json!({
                    "check": "random Type III subset",
                    "instance": instance_json(&g, &l),
                    "k": k,
                    "observed": [obs_c, obs_s],
                    "predicted": [pc, ps],
                    "residual": r,
                }));
            }
        }
        if t3.len() < g.m() {
            let edited = if inject_fault {
                fair_edge_remove_budgeted(&g, &l, Some(t3.len() - 1))
            } else {
                fair_edge_remove(&g, &l)
            };
            let (after, report) = edited.expect("some edge survives");
            let (nc2, ns2, m2) = raw_counts(&after, &l);
            let obs_c = nc2 as f64 / m2 as f64 - nc as f64 / m as f64;
            let obs_s = ns2 as f64 / m2 as f64 - ns as f64 / m as f64;
            let (pc, ps) = predict_ratio_shift(&census, t3.len() as u64).expect("k < m");
            let r = (obs_c - pc).abs().max((obs_s - ps).abs());
            rep.checks += 1;
            rep.residual(r);
            let leftover = type_iii_indices(&after, &l).len();
            if leftover > 0 || r.is_nan() || r > IDENTITY_TOL {
                rep.fail(json!({
                    "check": "full edit",
                    "instance": instance_json(&g, &l),
                    "type_iii_edges": t3.len(),
                    "removed": report.removed_edges.len(),
                    "type_iii_left": leftover,
                    "observed": [obs_c, obs_s],
                    "predicted": [pc, ps],
                    "residual": r,
                }));
            }
        }
    }
    rep.elapsed_ms = start.elapsed().as_millis();
    rep
}

fn exact_sign(num: i128) -> Sign {
    Sign::of(num)
}

/// Single-edge deletions: only Type III moves the ratios in the fair
/// direction, and it always does when `N_c > 0` and `N_s < m`; plus
/// exhaustive optimality of Type III deletion sets on small graphs.
pub fn sign_suite(graphs: usize, seed: u64) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("single-edge sign");
    let mut rng = rng_for(seed, "verify-sign");
    for _ in 0..graphs {
        let (g, l) = random_instance(&mut rng, 12, 16);
        rep.cases += 1;
        let census = EdgeCensus::of(&g, &l).expect("complete labels");
        let (nc, ns, m) = raw_counts(&g, &l);
        for (i, &(u, v)) in g.edges().iter().enumerate() {
            let after = g.without_edge_indices(&[i]);
            let (nc2, ns2, m2) = raw_counts(&after, &l);
            // sign of a/b − c/d with b, d > 0 is sign(a·d − c·b)
            let dc = exact_sign(nc2 * m - nc * m2);
            let ds = exact_sign(ns2 * m - ns * m2);
            let t = edge_type(&l, u, v);
            rep.checks += 1;
            let fair = dc == Sign::Positive && ds == Sign::Negative;
            let must = t == EdgeType::III && nc > 0 && ns < m;
            let predicted = single_edge_effect(&census, t).ok();
            if (fair && t != EdgeType::III) || (must && !fair) || predicted.is_some_and(|p| p != (dc, ds)) {
                rep.fail(json!({
                    "check": "single edge",
                    "instance": instance_json(&g, &l),
                    "edge": [u, v],
                    "type": format!("{t:?}"),
                    "observed_signs": [format!("{dc:?}"), format!("{ds:?}")],
                    "predicted_signs": predicted.map(|(a, b)| [format!("{a:?}"), format!("{b:?}")]),
                }));
            }
        }
        if g.m() <= 12 {
            let m3 = census.m_iii() as usize;
            for k in 1..=m3.min(g.m() - 1) {
                let s = oracle_best_deletion_sets(&g, &l, k).expect("within enumeration limit");
                rep.checks += 1;
                rep.residual(s.max_identity_residual);
                if !s.achieves_predicted || !s.joint_optimum_all_type_iii || s.max_identity_residual > IDENTITY_TOL {
                    rep.fail(json!({
                        "check": "deletion-set optimality",
                        "instance": instance_json(&g, &l),
                        "k": k,
                        "achieves_predicted": s.achieves_predicted,
                        "joint_optimum_all_type_iii": s.joint_optimum_all_type_iii,
                        "max_identity_residual": s.max_identity_residual,
                    }));
                }
            }
        }
    }
    rep.elapsed_ms = start.elapsed().as_millis();
    rep
}

/// The closed-form minimal deletion count equals exhaustive search on
/// feasible instances.
pub fn minimal_deletion_suite(instances: usize, seed: u64) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("minimal deletions");
    let mut rng = rng_for(seed, "verify-minimal");
    let mut attempts = 0usize;
    while rep.cases < instances && attempts < instances * 1000 {
        attempts += 1;
        let (g, l) = random_instance(&mut rng, 10, 12);
        let census = EdgeCensus::of(&g, &l).expect("complete labels");
        let (Ok(hr_c), Ok(hr_s)) = (census.hr_c(), census.hr_s()) else {
            continue;
        };
        if hr_c >= 1.0 || hr_s <= 0.0 {
            continue;
        }
        let (tau_c, tau_s) = if rng.gen_bool(0.5) {
            (rng.gen_range(hr_c..=1.0), rng.gen_range(0.0..hr_s))
        } else {
            // thresholds sitting exactly on achievable ratios
            let m = census.m;
            let k = rng.gen_range(1..m);
            let tc = census.n_c as f64 / (m - k) as f64;
            let ts = (census.n_s.saturating_sub(k)) as f64 / (m - k) as f64;
            (tc, ts)
        };
        if !(tau_c > hr_c && tau_c <= 1.0 && tau_s >= 0.0 && tau_s < hr_s) {
            continue;
        }
        let Ok(k) = minimal_deletions(&census, tau_c, tau_s) else {
            continue;
        };
        rep.cases += 1;
        rep.checks += 1;
        let brute = brute_force_minimal_deletions(&g, &l, tau_c, tau_s).expect("within enumeration limit");
        if brute != Some(k as usize) {
            rep.fail(json!({
                "instance": instance_json(&g, &l),
                "tau_c": tau_c,
                "tau_s": tau_s,
                "closed_form": k,
                "exhaustive": brute,
            }));
        }
    }
    if rep.cases < instances {
        rep.fail(json!({ "error": format!("only {} feasible instances in {attempts} attempts", rep.cases) }));
    }
    rep.elapsed_ms = start.elapsed().as_millis();
    rep
}

/// Range, monotonicity and the κ = 0 reduction of the t-vMF similarity on an
/// even grid of cosines.
pub fn tvmf_suite(points: usize) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("t-vMF");
    let kappas = [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 16.0, 100.0];
    for &kappa in &kappas {
        rep.cases += 1;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..points {
            let cos = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
            // unit vectors at the requested angle
            let a = [1.0, 0.0];
            let b = [cos, (1.0 - cos * cos).max(0.0).sqrt()];
            let phi = tvmf(&a, &b, kappa);
            let direct = (1.0 + cos) / (1.0 + kappa * (1.0 - cos)) - 1.0;
            rep.checks += 1;
            let err = (phi - direct).abs();
            rep.residual(err);
            let mut bad = Vec::new();
            if !(-1.0 - IDENTITY_TOL..=1.0 + IDENTITY_TOL).contains(&phi) {
                bad.push("range");
            }
            if kappa > 0.0 && i > 0 && direct <= prev {
                bad.push("monotone");
            }
            if kappa == 0.0 && (direct - cos).abs() > IDENTITY_TOL {
                bad.push("kappa=0");
            }
            if err > IDENTITY_TOL {
                bad.push("vector form");
            }
            if !bad.is_empty() {
                rep.fail(json!({ "kappa": kappa, "cos": cos, "phi": phi, "failed": bad }));
            }
            prev = direct;
        }
        for x in [[0.3, -2.0, 5.0], [1e-3, 1e-3, 0.0], [-7.0, 0.1, 0.2]] {
            rep.checks += 1;
            let phi = tvmf(&x, &x, kappa);
            rep.residual((phi - 1.0).abs());
            if (phi - 1.0).abs() > IDENTITY_TOL {
                rep.fail(json!({ "kappa": kappa, "x": x, "phi_xx": phi }));
            }
        }
    }
    rep.elapsed_ms = start.elapsed().as_millis();
    rep
}

/// Counterfactual selection equals a full sort of every candidate.
pub fn counterfactual_suite(instances: usize, seed: u64) -> SuiteReport {
    let start = Instant::now();
    let mut rep = SuiteReport::new("counterfactual selection");
    let mut rng = rng_for(seed, "verify-counterfactual");
    for _ in 0..instances {
        rep.cases += 1;
        let n = rng.gen_range(2..=50);
        let d = rng.gen_range(1..=4);
        let k = rng.gen_range(1..=6);
        // integer coordinates force distance ties
        let h = Matrix::from_vec(n, d, (0..n * d).map(|_| f64::from(rng.gen_range(-3i8..=3))).collect())
            .expect("sizes agree");
        let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let s: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let cf = select_counterfactuals(&h, &y, &s, k);
        for i in 0..n {
            for (want_same_y, got) in [(true, &cf.e_cf[i]), (false, &cf.c_cf[i])] {
                let mut all: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i && (y[j] == y[i]) == want_same_y && (s[j] == s[i]) != want_same_y)
                    .map(|j| {
                        let d2: f64 = (0..d).map(|c| (h.get(i, c) - h.get(j, c)).powi(2)).sum();
                        (d2, j)
                    })
                    .collect();
                all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                all.truncate(k);
                let got_pairs: Vec<(f64, usize)> = got.iter().map(|nb| (nb.dist2, nb.node)).collect();
                rep.checks += 1;
                if got_pairs != all {
                    rep.fail(json!({
                        "node": i,
                        "list": if want_same_y { "e_cf" } else { "c_cf" },
                        "expected": all,
                        "got": got_pairs,
                        "h": h.data(),
                        "n": n,
                        "d": d,
                        "k": k,
                        "y": y,
                        "s": s,
                    }));
                }
            }
        }
    }
    rep.elapsed_ms = start.elapsed().as_millis();
    rep
}

/// The theory suites the `verify` command runs over `graphs` random graphs.
pub fn theory_suites(graphs: usize, seed: u64, inject_fault: bool) -> Vec<SuiteReport> {
    vec![
        identity_suite(graphs, seed, inject_fault),
        sign_suite(graphs, seed),
        minimal_deletion_suite(graphs, seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_small() {
        for r in theory_suites(30, 9, false) {
            assert!(r.passed, "{r:?}");
        }
        assert!(tvmf_suite(101).passed);
        assert!(counterfactual_suite(20, 1).passed);
    }

    #[test]
    fn fault_injection_is_caught() {
        let r = identity_suite(30, 9, true);
        assert!(!r.passed);
        assert!(r.counterexample.is_some());
    }
}
