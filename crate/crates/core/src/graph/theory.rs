//! Closed forms for how deleting edges moves the two homophily ratios.
//!
//! With `m` edges, `N_c` class-homophilous and `N_s` sensitive-homophilous,
//! deleting `k` Type III edges leaves `N_c` unchanged and lowers `N_s` and
//! `m` by `k`, so
//!
//! ```text
//! Δhr_c = N_c·k / (m(m−k))        ≥ 0
//! Δhr_s = k(N_s − m) / (m(m−k))   ≤ 0
//! ```

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use super::{EdgeCensus, EdgeType};
use crate::error::GraphError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(x: i128) -> Self {
        match x.cmp(&0) {
            Ordering::Less => Sign::Negative,
            Ordering::Equal => Sign::Zero,
            Ordering::Greater => Sign::Positive,
        }
    }

    pub fn of_f64(x: f64) -> Self {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

/// Exact `(Δhr_c, Δhr_s)` after deleting any `k` Type III edges.
pub fn predict_ratio_shift(census: &EdgeCensus, k: u64) -> Result<(f64, f64), GraphError> {
    let m = census.m;
    if k >= m {
        return Err(GraphError::DivisionByZero { k, m });
    }
    if k > census.m_iii() {
        return Err(GraphError::Infeasible {
            k,
            available: census.m_iii(),
        });
    }
    let (m, k, n_c, n_s) = (m as i128, k as i128, census.n_c as i128, census.n_s as i128);
    let den = (m * (m - k)) as f64;
    Ok(((n_c * k) as f64 / den, (k * (n_s - m)) as f64 / den))
}

/// Numerators of `(Δhr_c, Δhr_s)` over the common denominator `m(m−1)` when a
/// single edge of type `t` is deleted.
pub fn single_edge_numerators(census: &EdgeCensus, t: EdgeType) -> (i128, i128) {
    let (m, n_c, n_s) = (census.m as i128, census.n_c as i128, census.n_s as i128);
    // A deleted edge that was class-homophilous lowers N_c by one:
    // (N_c−1)/(m−1) − N_c/m = (N_c − m)/(m(m−1)); otherwise N_c/(m(m−1)).
    let dc = if t.same_class() { n_c - m } else { n_c };
    let ds = if t.same_sensitive() { n_s - m } else { n_s };
    (dc, ds)
}

/// Signs of `(Δhr_c, Δhr_s)` for deleting one edge of type `t`.
pub fn single_edge_effect(census: &EdgeCensus, t: EdgeType) -> Result<(Sign, Sign), GraphError> {
    if census.m < 2 {
        return Err(GraphError::DivisionByZero { k: 1, m: census.m });
    }
    if census.count(t) == 0 {
        return Err(GraphError::Infeasible {
            k: 1,
            available: 0,
        });
    }
    let (dc, ds) = single_edge_numerators(census, t);
    Ok((Sign::of(dc), Sign::of(ds)))
}

fn hr_c_after(census: &EdgeCensus, k: u64) -> f64 {
    census.n_c as f64 / (census.m - k) as f64
}

fn hr_s_after(census: &EdgeCensus, k: u64) -> f64 {
    (census.n_s - k) as f64 / (census.m - k) as f64
}

/// Smallest `k` in `[lo_guess, hi]` satisfying the monotone predicate, after
/// stepping back from a closed-form guess.
fn settle(mut k: u64, hi: u64, pred: impl Fn(u64) -> bool) -> Option<u64> {
    k = k.min(hi);
    while k > 0 && pred(k - 1) {
        k -= 1;
    }
    while k <= hi {
        if pred(k) {
            return Some(k);
        }
        k += 1;
    }
    None
}

/// Fewest Type III deletions that bring `hr_c` up to `tau_c` and `hr_s` down
/// to `tau_s`.
pub fn minimal_deletions(census: &EdgeCensus, tau_c: f64, tau_s: f64) -> Result<u64, GraphError> {
    let hr_c = census.hr_c()?;
    let hr_s = census.hr_s()?;
    if !(tau_c > hr_c && tau_c <= 1.0) {
        return Err(GraphError::InvalidTarget(format!(
            "tau_c = {tau_c} must lie in ({hr_c}, 1]"
        )));
    }
    if !(tau_s >= 0.0 && tau_s < hr_s) {
        return Err(GraphError::InvalidTarget(format!(
            "tau_s = {tau_s} must lie in [0, {hr_s})"
        )));
    }
    let m = census.m as f64;
    // ratios are undefined once every edge is gone
    let hi = census.m_iii().min(census.m - 1);

    // N_c/(m−k) ≥ τ_c  ⇔  k ≥ m − N_c/τ_c
    let guess_c = (m - census.n_c as f64 / tau_c).ceil().max(0.0) as u64;
    // (N_s−k)/(m−k) ≤ τ_s  ⇔  k ≥ (N_s − τ_s·m)/(1 − τ_s)
    let guess_s = ((census.n_s as f64 - tau_s * m) / (1.0 - tau_s)).ceil().max(0.0) as u64;

    let infeasible = || GraphError::Infeasible {
        k: hi + 1,
        available: census.m_iii(),
    };
    let k_c = settle(guess_c, hi, |k| hr_c_after(census, k) >= tau_c).ok_or_else(infeasible)?;
    let k_s = settle(guess_s, hi, |k| hr_s_after(census, k) <= tau_s).ok_or_else(infeasible)?;
    Ok(k_c.max(k_s))
}
