use serde::{Deserialize, Serialize};

use super::census::edge_type;
use super::{EdgeCensus, EdgeType, Graph, NodeLabels};
use crate::error::GraphError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditReport {
    pub removed_edges: Vec<(usize, usize)>,
    pub census_before: EdgeCensus,
    pub census_after: EdgeCensus,
    pub hr_c_before: f64,
    pub hr_s_before: f64,
    /// NaN only inside a [`GraphError::DegenerateEdit`].
    pub hr_c_after: f64,
    pub hr_s_after: f64,
    /// Set when the edit phase was disabled; the graph was left untouched.
    #[serde(default)]
    pub skipped: bool,
}

impl EditReport {
    /// Report for a run that bypasses editing.
    pub fn skipped(g: &Graph, labels: &NodeLabels) -> Result<Self, GraphError> {
        let c = EdgeCensus::of(g, labels)?;
        let (hc, hs) = (c.hr_c()?, c.hr_s()?);
        Ok(Self {
            removed_edges: Vec::new(),
            census_before: c,
            census_after: c,
            hr_c_before: hc,
            hr_s_before: hs,
            hr_c_after: hc,
            hr_s_after: hs,
            skipped: true,
        })
    }
}

/// Remove every Type III edge (labels differ, sensitive attribute equal) in a
/// single pass over the edge list.
pub fn fair_edge_remove(g: &Graph, labels: &NodeLabels) -> Result<(Graph, EditReport), GraphError> {
    fair_edge_remove_budgeted(g, labels, None)
}

/// Like [`fair_edge_remove`] but stops after `budget` Type III deletions,
/// taken in edge-list order. `None` removes all of them.
pub fn fair_edge_remove_budgeted(
    g: &Graph,
    labels: &NodeLabels,
    budget: Option<usize>,
) -> Result<(Graph, EditReport), GraphError> {
    labels.check_len(g.n())?;
    let mut before = [0u64; 4];
    let mut after = [0u64; 4];
    let mut kept = Vec::with_capacity(g.m());
    let mut removed = Vec::new();
    let cap = budget.unwrap_or(usize::MAX);
    for &(u, v) in g.edges() {
        let t = edge_type(labels, u, v)?;
        before[t.index()] += 1;
        if t == EdgeType::III && removed.len() < cap {
            removed.push((u, v));
        } else {
            after[t.index()] += 1;
            kept.push((u, v));
        }
    }
    let census_before = EdgeCensus::from_counts(before);
    let census_after = EdgeCensus::from_counts(after);
    let edited = Graph::new(g.n(), kept)?;
    let report = EditReport {
        removed_edges: removed,
        census_before,
        census_after,
        hr_c_before: census_before.hr_c()?,
        hr_s_before: census_before.hr_s()?,
        hr_c_after: census_after.hr_c().unwrap_or(f64::NAN),
        hr_s_after: census_after.hr_s().unwrap_or(f64::NAN),
        skipped: false,
    };
    if census_after.m == 0 {
        return Err(GraphError::DegenerateEdit(Box::new(report)));
    }
    Ok((edited, report))
}
