//! Exhaustive enumeration of deletion sets. Test oracle only: every count is
//! recomputed from raw label comparisons, without going through the census
//! or the closed forms.

use std::cmp::Ordering;

use super::theory::predict_ratio_shift;
use super::{EdgeCensus, Graph, NodeLabels};
use crate::error::GraphError;

pub const ENUMERATION_LIMIT: usize = 16;

/// Result of enumerating every `k`-subset of the edge set.
#[derive(Debug, Clone, PartialEq)]
pub struct DeletionSetSummary {
    pub k: usize,
    pub subsets: u64,
    pub max_hr_c: f64,
    pub min_hr_s: f64,
    /// Closed-form ratios after deleting `k` Type III edges, when feasible.
    pub predicted: Option<(f64, f64)>,
    /// Some subset lands on the predicted pair (within 1e−12).
    pub achieves_predicted: bool,
    /// Largest |observed − predicted| over subsets made only of Type III edges.
    pub max_identity_residual: f64,
    /// Subsets reaching both `max_hr_c` and `min_hr_s` at once.
    pub joint_optimal_subsets: u64,
    /// Every jointly optimal subset deletes only Type III edges.
    pub joint_optimum_all_type_iii: bool,
}

#[derive(Clone, Copy)]
struct Frac {
    num: u64,
    den: u64,
}

impl Frac {
    fn cmp(self, other: Frac) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }

    fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

struct EdgeFlags {
    same_y: Vec<bool>,
    same_s: Vec<bool>,
}

fn flags(g: &Graph, labels: &NodeLabels) -> Result<EdgeFlags, GraphError> {
    let mut same_y = Vec::with_capacity(g.m());
    let mut same_s = Vec::with_capacity(g.m());
    for &(u, v) in g.edges() {
        let yu = labels.effective_label(u).ok_or(GraphError::MissingLabel(u))?;
        let yv = labels.effective_label(v).ok_or(GraphError::MissingLabel(v))?;
        same_y.push(yu == yv);
        same_s.push(labels.sensitive[u] == labels.sensitive[v]);
    }
    Ok(EdgeFlags { same_y, same_s })
}

/// Counts `(N_c', N_s', m')` after deleting the edges in `mask`.
fn remaining(f: &EdgeFlags, mask: u32) -> (u64, u64, u64) {
    let (mut nc, mut ns, mut m) = (0, 0, 0);
    for i in 0..f.same_y.len() {
        if mask & (1 << i) == 0 {
            m += 1;
            nc += f.same_y[i] as u64;
            ns += f.same_s[i] as u64;
        }
    }
    (nc, ns, m)
}

fn only_type_iii(f: &EdgeFlags, mask: u32) -> bool {
    (0..f.same_y.len()).all(|i| mask & (1 << i) == 0 || (!f.same_y[i] && f.same_s[i]))
}

/// Visit every `k`-subset of `0..m` as a bitmask (Gosper's hack).
fn for_each_subset(m: usize, k: usize, mut visit: impl FnMut(u32)) {
    if k == 0 {
        visit(0);
        return;
    }
    if k > m {
        return;
    }
    let limit = 1u64 << m;
    let mut x: u64 = (1u64 << k) - 1;
    while x < limit {
        visit(x as u32);
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
}

pub fn oracle_best_deletion_sets(
    g: &Graph,
    labels: &NodeLabels,
    k: usize,
) -> Result<DeletionSetSummary, GraphError> {
    if g.m() > ENUMERATION_LIMIT {
        return Err(GraphError::ResourceLimit {
            m: g.m(),
            limit: ENUMERATION_LIMIT,
        });
    }
    if k >= g.m() {
        return Err(GraphError::DivisionByZero {
            k: k as u64,
            m: g.m() as u64,
        });
    }
    let f = flags(g, labels)?;
    let census = EdgeCensus::of(g, labels)?;
    let predicted = predict_ratio_shift(&census, k as u64)
        .ok()
        .map(|(dc, ds)| (census.n_c as f64 / census.m as f64 + dc, census.n_s as f64 / census.m as f64 + ds));

    let mut subsets = 0u64;
    let mut best_c: Option<Frac> = None;
    let mut best_s: Option<Frac> = None;
    let mut achieves = false;
    let mut residual = 0.0f64;
    for_each_subset(g.m(), k, |mask| {
        subsets += 1;
        let (nc, ns, m) = remaining(&f, mask);
        let hc = Frac { num: nc, den: m };
        let hs = Frac { num: ns, den: m };
        if best_c.is_none_or(|b| hc.cmp(b) == Ordering::Greater) {
            best_c = Some(hc);
        }
        if best_s.is_none_or(|b| hs.cmp(b) == Ordering::Less) {
            best_s = Some(hs);
        }
        if let Some((pc, ps)) = predicted {
            let (ec, es) = ((hc.value() - pc).abs(), (hs.value() - ps).abs());
            if ec <= 1e-12 && es <= 1e-12 {
                achieves = true;
            }
            if only_type_iii(&f, mask) {
                residual = residual.max(ec).max(es);
            }
        }
    });
    let (best_c, best_s) = (best_c.expect("k < m"), best_s.expect("k < m"));

    let mut joint = 0u64;
    let mut joint_all_iii = true;
    for_each_subset(g.m(), k, |mask| {
        let (nc, ns, m) = remaining(&f, mask);
        let at_c = Frac { num: nc, den: m }.cmp(best_c) == Ordering::Equal;
        let at_s = Frac { num: ns, den: m }.cmp(best_s) == Ordering::Equal;
        if at_c && at_s {
            joint += 1;
            joint_all_iii &= only_type_iii(&f, mask);
        }
    });

    Ok(DeletionSetSummary {
        k,
        subsets,
        max_hr_c: best_c.value(),
        min_hr_s: best_s.value(),
        predicted,
        achieves_predicted: achieves,
        max_identity_residual: residual,
        joint_optimal_subsets: joint,
        joint_optimum_all_type_iii: joint_all_iii,
    })
}

/// Fewest deletions, of any edge types, after which `hr_c ≥ tau_c` and
/// `hr_s ≤ tau_s`. Scans all `2^m` subsets; `None` when no subset works.
pub fn brute_force_minimal_deletions(
    g: &Graph,
    labels: &NodeLabels,
    tau_c: f64,
    tau_s: f64,
) -> Result<Option<usize>, GraphError> {
    if g.m() > ENUMERATION_LIMIT {
        return Err(GraphError::ResourceLimit {
            m: g.m(),
            limit: ENUMERATION_LIMIT,
        });
    }
    let f = flags(g, labels)?;
    for k in 0..g.m() {
        let mut hit = false;
        for_each_subset(g.m(), k, |mask| {
            if hit {
                return;
            }
            let (nc, ns, m) = remaining(&f, mask);
            if nc as f64 / m as f64 >= tau_c && ns as f64 / m as f64 <= tau_s {
                hit = true;
            }
        });
        if hit {
            return Ok(Some(k));
        }
    }
    Ok(None)
}
