//! Density ratios, the U-I and R-E contrastive losses, the BPR baseline and
//! exact gradients of the combined objective.

mod backward;
mod batch;
mod density;
mod loss;

pub use backward::{backward, grad_magnitude, BackwardOutput, Gradients};
pub use batch::{Batch, BatchEntry, BatchSpec};
pub use density::{cosine, density_g, density_h, NORM_EPS};
pub use loss::{
    batch_rows, loss_bpr, loss_re, loss_total, loss_ui, regularizer, softmax, LossBreakdown, LossWeights,
    Representations,
};

use crate::corpus::FeatureMatrix;
use crate::model::{EncoderKind, GraphAdjacency, ParameterSet};
use crate::Result;

/// Forward pass only: encodes, then evaluates every loss component.
pub fn forward_loss(
    params: &ParameterSet,
    encoder: EncoderKind,
    graph: &GraphAdjacency,
    features: &FeatureMatrix,
    batch: &Batch,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    let reps = Representations::compute(params, encoder, graph, features, batch)?;
    Ok(loss_total(batch, params, &reps, weights))
}
