//! The composite training objective evaluated through the tape.

use crate::error::{LossError, PipelineError};
use crate::graph::Graph;
use crate::losses::{
    env_loss, inv_loss, pred_loss, sc_loss, suf_loss, CounterfactualIndex, DisMetric, LossParts, LossWeights,
};
use crate::model::{forward, ModelParams};
use crate::numerics::{Matrix, Tape, Var};

/// Everything the objective needs besides the parameters. Terms whose weight
/// is zero are not evaluated at all, so a zero weight reproduces the smaller
/// objective exactly.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub graph: &'a Graph,
    pub x: &'a Matrix,
    pub labels: &'a [Option<u8>],
    pub train: &'a [usize],
    pub sensitive: &'a [u8],
    /// Labels and node set for the contrastive term.
    pub sc_labels: &'a [Option<u8>],
    pub sc_members: &'a [usize],
    /// `None` drops the invariance term.
    pub counterfactuals: Option<&'a CounterfactualIndex>,
    pub negatives: &'a [(usize, usize)],
    pub weights: LossWeights,
    pub metric: DisMetric,
}

#[derive(Debug, Clone)]
pub struct ObjectiveValue {
    pub total: f64,
    pub parts: LossParts,
    /// Gradients in [`ModelParams::NAMES`] order.
    pub grads: Vec<Matrix>,
    pub signature: u64,
    /// Zero-norm vectors met inside the losses.
    pub degenerate: usize,
    /// Probabilities at this point, one per node.
    pub probs: Vec<f64>,
}

impl Objective<'_> {
    pub fn evaluate(&self, params: &ModelParams) -> Result<ObjectiveValue, PipelineError> {
        let mut tape = Tape::new();
        let fv = forward(&mut tape, params, self.graph.adjacency(), self.x)?;
        let w = &self.weights;
        let mut parts = LossParts::default();
        let mut terms: Vec<(Var, f64)> = Vec::with_capacity(5);
        let mut degenerate = 0;

        let out = pred_loss(tape.value(fv.probs), self.labels, self.train)?;
        parts.pred = out.value;
        degenerate += out.degenerate;
        terms.push((out.record(&mut tape, &[fv.probs])?, 1.0));

        if w.alpha != 0.0 {
            if let Some(cf) = self.counterfactuals {
                let out = inv_loss(tape.value(fv.c), tape.value(fv.e), cf, w.gamma, self.metric)?;
                parts.inv = out.value;
                degenerate += out.degenerate;
                terms.push((out.record(&mut tape, &[fv.c, fv.e])?, w.alpha));
            }
        }
        if w.beta != 0.0 && !self.negatives.is_empty() && self.graph.m() > 0 {
            let out = suf_loss(tape.value(fv.h), self.graph.edges(), self.negatives)?;
            parts.suf = out.value;
            terms.push((out.record(&mut tape, &[fv.h])?, w.beta));
        }
        if w.omega != 0.0 {
            let out = sc_loss(tape.value(fv.c), self.sc_labels, self.sc_members, w.kappa)?;
            parts.sc = out.value;
            degenerate += out.degenerate;
            terms.push((out.record(&mut tape, &[fv.c])?, w.omega));
        }
        if w.eta != 0.0 {
            let out = env_loss(tape.value(fv.e), self.sensitive, w.k_prime)?;
            parts.env = out.value;
            degenerate += out.degenerate;
            terms.push((out.record(&mut tape, &[fv.e])?, w.eta));
        }

        let total = tape.weighted_sum(&terms)?;
        let total_value = tape.value(total).get(0, 0);
        if !total_value.is_finite() {
            return Err(LossError::NonFinite("total").into());
        }
        let grads = tape.grad(total, &fv.params)?;
        Ok(ObjectiveValue {
            total: total_value,
            parts,
            grads,
            signature: tape.kink_signature(),
            degenerate,
            probs: tape.value(fv.probs).data().to_vec(),
        })
    }
}
