//! Utility and group-fairness metrics. All percentages are in `[0, 100]`.

use serde::{Deserialize, Serialize};

use crate::error::MetricError;

fn check_len(a: usize, b: usize) -> Result<(), MetricError> {
    if a == b {
        Ok(())
    } else {
        Err(MetricError::Length(a, b))
    }
}

fn undefined(metric: &'static str, reason: impl Into<String>) -> MetricError {
    MetricError::Undefined {
        metric,
        reason: reason.into(),
    }
}

fn rate(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

/// `|P(ŷ=1 | s=0) − P(ŷ=1 | s=1)| × 100`
pub fn stat_parity(pred: &[u8], sensitive: &[u8]) -> Result<f64, MetricError> {
    check_len(pred.len(), sensitive.len())?;
    let mut pos = [0usize; 2];
    let mut tot = [0usize; 2];
    for (&p, &s) in pred.iter().zip(sensitive) {
        let g = usize::from(s != 0);
        tot[g] += 1;
        pos[g] += usize::from(p != 0);
    }
    if let Some(g) = (0..2).find(|&g| tot[g] == 0) {
        return Err(undefined("delta_sp", format!("sensitive group {g} is empty")));
    }
    Ok((rate(pos[0], tot[0]) - rate(pos[1], tot[1])).abs() * 100.0)
}

/// `|P(ŷ=1 | y=1, s=0) − P(ŷ=1 | y=1, s=1)| × 100`
pub fn equal_opportunity(pred: &[u8], labels: &[u8], sensitive: &[u8]) -> Result<f64, MetricError> {
    check_len(pred.len(), labels.len())?;
    check_len(pred.len(), sensitive.len())?;
    let mut tp = [0usize; 2];
    let mut pos = [0usize; 2];
    for ((&p, &y), &s) in pred.iter().zip(labels).zip(sensitive) {
        if y == 0 {
            continue;
        }
        let g = usize::from(s != 0);
        pos[g] += 1;
        tp[g] += usize::from(p != 0);
    }
    if let Some(g) = (0..2).find(|&g| pos[g] == 0) {
        return Err(undefined("delta_eo", format!("sensitive group {g} has no positive labels")));
    }
    Ok((rate(tp[0], pos[0]) - rate(tp[1], pos[1])).abs() * 100.0)
}

/// `(TPR + TNR) / 2 × 100`
pub fn bacc(pred: &[u8], labels: &[u8]) -> Result<f64, MetricError> {
    check_len(pred.len(), labels.len())?;
    let mut hit = [0usize; 2];
    let mut tot = [0usize; 2];
    for (&p, &y) in pred.iter().zip(labels) {
        let c = usize::from(y != 0);
        tot[c] += 1;
        hit[c] += usize::from((p != 0) == (y != 0));
    }
    if let Some(c) = (0..2).find(|&c| tot[c] == 0) {
        return Err(undefined("bacc", format!("no samples of class {c}")));
    }
    Ok((rate(hit[0], tot[0]) + rate(hit[1], tot[1])) / 2.0 * 100.0)
}

/// Area under the ROC curve via the Mann–Whitney statistic, average ranks on
/// ties, × 100.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricError> {
    check_len(scores.len(), labels.len())?;
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(undefined("auc", format!("score {i} is NaN")));
    }
    let n_pos = labels.iter().filter(|&&y| y != 0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(undefined("auc", "ground truth has a single class"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share their mean
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += avg * order[i..=j].iter().filter(|&&k| labels[k] != 0).count() as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64) * 100.0)
}

/// F1 of class 1, × 100. Undefined only when neither labels nor predictions
/// contain a positive.
pub fn f1(pred: &[u8], labels: &[u8]) -> Result<f64, MetricError> {
    check_len(pred.len(), labels.len())?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &y) in pred.iter().zip(labels) {
        match (p != 0, y != 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    if tp + fp + fn_ == 0 {
        return Err(undefined("f1", "no positive labels or predictions"));
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 * 100.0)
}

/// `BACC + ½[(100 − ΔEO) + (100 − ΔSP)]`
pub fn selection_score(bacc: f64, delta_sp: f64, delta_eo: f64) -> f64 {
    bacc + 0.5 * ((100.0 - delta_eo) + (100.0 - delta_sp))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub bacc: f64,
    pub auc: f64,
    pub f1: f64,
    pub delta_sp: f64,
    pub delta_eo: f64,
    pub score: f64,
    pub seed: u64,
    pub split_id: usize,
    /// `cells[s][y][ŷ]`
    pub cells: [[[u64; 2]; 2]; 2],
}

impl MetricsReport {
    /// Evaluate on the nodes in `nodes` (hard predictions at 0.5, ties → 1).
    pub fn evaluate(probs: &[f64], labels: &[u8], sensitive: &[u8], nodes: &[usize]) -> Result<Self, MetricError> {
        check_len(probs.len(), labels.len())?;
        check_len(probs.len(), sensitive.len())?;
        let p: Vec<f64> = nodes.iter().map(|&v| probs[v]).collect();
        let y: Vec<u8> = nodes.iter().map(|&v| labels[v]).collect();
        let s: Vec<u8> = nodes.iter().map(|&v| sensitive[v]).collect();
        let hard = crate::model::hard_labels(&p);
        let mut cells = [[[0u64; 2]; 2]; 2];
        for i in 0..nodes.len() {
            cells[usize::from(s[i] != 0)][usize::from(y[i] != 0)][usize::from(hard[i] != 0)] += 1;
        }
        let bacc = bacc(&hard, &y)?;
        let delta_sp = stat_parity(&hard, &s)?;
        let delta_eo = equal_opportunity(&hard, &y, &s)?;
        Ok(Self {
            bacc,
            auc: auc(&p, &y)?,
            f1: f1(&hard, &y)?,
            delta_sp,
            delta_eo,
            score: selection_score(bacc, delta_sp, delta_eo),
            seed: 0,
            split_id: 0,
            cells,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn auc_pairs(scores: &[f64], labels: &[u8]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] == 1 && labels[j] == 0 {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den * 100.0
    }

    #[test]
    fn parity_examples() {
        assert_eq!(stat_parity(&[1, 0, 1, 0], &[0, 0, 1, 1]).unwrap(), 0.0);
        // 3/5 vs 2/5
        let pred = [1, 1, 1, 0, 0, 1, 1, 0, 0, 0];
        let s = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        assert!((stat_parity(&pred, &s).unwrap() - 20.0).abs() < 1e-12);
        assert!(stat_parity(&[1, 1], &[0, 0]).is_err());
    }

    #[test]
    fn opportunity_eight_nodes() {
        // s=0 positives: nodes 0,1 (both predicted 1); s=1 positives: 4,5 (one predicted 1)
        let pred = [1, 1, 0, 1, 1, 0, 1, 0];
        let y = [1, 1, 0, 0, 1, 1, 0, 0];
        let s = [0, 0, 0, 0, 1, 1, 1, 1];
        assert_eq!(equal_opportunity(&pred, &y, &s).unwrap(), 50.0);
        assert_eq!(equal_opportunity(&[1, 0], &[1, 1], &[0, 1]).unwrap(), 100.0);
        assert!(equal_opportunity(&[1, 0], &[1, 0], &[0, 1]).is_err());
    }

    #[test]
    fn perfect_classifier() {
        let y = [0, 1, 1, 0];
        let p = [0.1, 0.9, 0.8, 0.3];
        let hard = crate::model::hard_labels(&p);
        assert_eq!(bacc(&hard, &y).unwrap(), 100.0);
        assert_eq!(auc(&p, &y).unwrap(), 100.0);
        assert_eq!(f1(&hard, &y).unwrap(), 100.0);
    }

    #[test]
    fn constant_scores_give_half_auc() {
        assert_eq!(auc(&[0.3; 6], &[0, 1, 0, 1, 1, 0]).unwrap(), 50.0);
        assert!(auc(&[0.3, 0.2], &[1, 1]).is_err());
    }

    #[test]
    fn selection_score_examples() {
        assert!((selection_score(60.02, 2.86, 3.39) - 156.895).abs() < 1e-9);
        assert_eq!(selection_score(100.0, 0.0, 0.0), 200.0);
        assert_eq!(selection_score(50.0, 100.0, 100.0), 50.0);
    }

    #[test]
    fn report_is_consistent() {
        let probs = [0.9, 0.2, 0.7, 0.4, 0.6, 0.1, 0.5, 0.3];
        let y = [1, 0, 1, 0, 1, 0, 1, 0];
        let s = [0, 0, 0, 0, 1, 1, 1, 1];
        let r = MetricsReport::evaluate(&probs, &y, &s, &(0..8).collect::<Vec<_>>()).unwrap();
        assert_eq!(r.score, selection_score(r.bacc, r.delta_sp, r.delta_eo));
        let total: u64 = r.cells.iter().flatten().flatten().sum();
        assert_eq!(total, 8);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["bacc", "auc", "f1", "delta_sp", "delta_eo", "score", "seed", "split_id"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    fn labeled_sample() -> impl Strategy<Value = (Vec<f64>, Vec<u8>, Vec<u8>)> {
        (4usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..1.0, n),
                prop::collection::vec(0u8..2, n),
                prop::collection::vec(0u8..2, n),
            )
        })
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise_oracle((p, y, _s) in labeled_sample()) {
            // coarse grid creates ties
            let p: Vec<f64> = p.iter().map(|x| (x * 8.0).floor() / 8.0).collect();
            prop_assume!(y.contains(&0) && y.contains(&1));
            prop_assert!((auc(&p, &y).unwrap() - auc_pairs(&p, &y)).abs() < 1e-9);
        }

        #[test]
        fn auc_monotone_invariant((p, y, _s) in labeled_sample()) {
            prop_assume!(y.contains(&0) && y.contains(&1));
            let q: Vec<f64> = p.iter().map(|x| (3.0 * x).exp() - 7.0).collect();
            prop_assert!((auc(&p, &y).unwrap() - auc(&q, &y).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn fairness_gaps_ignore_group_encoding((p, y, s) in labeled_sample()) {
            let hard = crate::model::hard_labels(&p);
            let flipped: Vec<u8> = s.iter().map(|v| 1 - v).collect();
            if let Ok(a) = stat_parity(&hard, &s) {
                prop_assert!((a - stat_parity(&hard, &flipped).unwrap()).abs() < 1e-12);
            }
            if let Ok(a) = equal_opportunity(&hard, &y, &s) {
                prop_assert!((a - equal_opportunity(&hard, &y, &flipped).unwrap()).abs() < 1e-12);
            }
        }

        #[test]
        fn permutation_invariant((p, y, s) in labeled_sample(), rot in 0usize..40) {
            let n = p.len();
            let idx: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let a = MetricsReport::evaluate(&p, &y, &s, &(0..n).collect::<Vec<_>>());
            let b = MetricsReport::evaluate(&p, &y, &s, &idx);
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    for (u, v) in [(a.bacc, b.bacc), (a.auc, b.auc), (a.f1, b.f1), (a.delta_sp, b.delta_sp), (a.delta_eo, b.delta_eo)] {
                        prop_assert!((u - v).abs() < 1e-9);
                    }
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "definedness changed under permutation"),
            }
        }

        #[test]
        fn bacc_is_accuracy_when_balanced(half in 1usize..20, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<u8> = (0..2 * half).map(|i| u8::from(i < half)).collect();
            let pred: Vec<u8> = (0..2 * half).map(|_| rng.gen_range(0..2)).collect();
            let acc = pred.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / (2 * half) as f64 * 100.0;
            prop_assert!((bacc(&pred, &y).unwrap() - acc).abs() < 1e-9);
        }
    }
}
