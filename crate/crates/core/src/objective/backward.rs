use std::collections::BTreeMap;

use super::density::cosine_grad_add;
use super::loss::{batch_rows, re_logits, regularizer, softmax, ui_logits, LossBreakdown, LossWeights, Representations};
use super::Batch;
use crate::corpus::FeatureMatrix;
use crate::model::{encode_lightgcn, feature_backward, EncoderKind, GraphAdjacency, MlpGrads, ParameterSet};
use crate::tensor::{axpy, norm, Matrix};
use crate::Result;

/// Gradient of the total loss, shaped like [`ParameterSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embed: Matrix,
    /// Embedding rows with a nonzero gradient, ascending. Every other row is
    /// exactly zero.
    pub touched: Vec<usize>,
    pub mlp: MlpGrads,
}

impl Gradients {
    pub fn zeros(params: &ParameterSet) -> Self {
        Self {
            embed: Matrix::zeros(params.embed.rows(), params.embed.cols()),
            touched: Vec::new(),
            mlp: MlpGrads::zeros(params),
        }
    }

    /// Tensors in the order embed, W1, b1, W2, b2.
    pub fn tensors(&self) -> [&[f64]; 5] {
        [
            self.embed.as_slice(),
            self.mlp.w1.as_slice(),
            &self.mlp.b1,
            self.mlp.w2.as_slice(),
            &self.mlp.b2,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.embed.as_mut_slice(),
            self.mlp.w1.as_mut_slice(),
            &mut self.mlp.b1,
            self.mlp.w2.as_mut_slice(),
            &mut self.mlp.b2,
        ]
    }

    pub fn refresh_touched(&mut self) {
        let embed = &self.embed;
        self.touched = (0..embed.rows())
            .filter(|&r| embed.row(r).iter().any(|&v| v != 0.0))
            .collect();
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone)]
pub struct BackwardOutput {
    pub loss: LossBreakdown,
    pub grads: Gradients,
    /// Per user in the batch: Σ over that user's entries of ∂ℓ_UI/∂z_u,
    /// where ℓ_UI is the unweighted per-entry U-I loss.
    pub ui_user_grads: BTreeMap<usize, Vec<f64>>,
}

/// Mean Euclidean norm of the per-user U-I gradients; 0 when empty.
pub fn grad_magnitude(ui_user_grads: &BTreeMap<usize, Vec<f64>>) -> f64 {
    if ui_user_grads.is_empty() {
        return 0.0;
    }
    ui_user_grads.values().map(|g| norm(g)).sum::<f64>() / ui_user_grads.len() as f64
}

/// Loss and exact gradient with respect to every parameter.
///
/// Gradients on z and f are accumulated first, then pushed through the
/// feature MLP and, for LightGCN, through graph propagation.
pub fn backward(
    params: &ParameterSet,
    encoder: EncoderKind,
    graph: &GraphAdjacency,
    features: &FeatureMatrix,
    batch: &Batch,
    weights: &LossWeights,
) -> Result<BackwardOutput> {
    let reps = Representations::compute(params, encoder, graph, features, batch)?;
    let dims = params.dims;
    let d = dims.dim;
    let mut dz = Matrix::zeros(dims.n_nodes(), d);
    let mut df = vec![vec![0.0; d]; reps.feature_entries().len()];
    let mut ui_user_grads: BTreeMap<usize, Vec<f64>> = BTreeMap::new();

    let n = batch.len().max(1) as f64;
    let w_ui = (1.0 - weights.lambda) / n;
    let w_re = weights.lambda / n;
    let mut logits = Vec::new();
    let mut probs = Vec::new();
    let mut l_ui = 0.0;
    let mut l_re = 0.0;

    for e in &batch.entries {
        // U-I: d(-ln p_0)/d logit_k = p_k - [k = 0], logit_k = q_k·z_u / τ.
        let tau = weights.tau_ui;
        ui_logits(e, &reps, tau, &mut logits);
        softmax(&logits, &mut probs);
        l_ui += super::loss::nll_first(&logits);
        let zu = reps.z_user(e.user).to_vec();
        let mut g_user = vec![0.0; d];
        for (k, item) in e.ui_items().enumerate() {
            let coef = (probs[k] - if k == 0 { 1.0 } else { 0.0 }) / tau;
            axpy(coef, reps.ui_vector(e, k, item), &mut g_user);
            let target = if e.hybrid[k] {
                &mut df[reps.feature_slot(item).expect("hybrid item feature")]
            } else {
                dz.row_mut(reps.item_row(item))
            };
            axpy(w_ui * coef, &zu, target);
        }
        axpy(w_ui, &g_user, dz.row_mut(params.user_row(e.user)));
        let acc = ui_user_grads.entry(e.user).or_insert_with(|| vec![0.0; d]);
        axpy(1.0, &g_user, acc);

        // R-E: logit_k = cos(z_i, f_{j_k}) / τ.
        if e.re_negatives.is_empty() {
            continue;
        }
        let tau = weights.tau_re;
        re_logits(e, &reps, tau, &mut logits);
        softmax(&logits, &mut probs);
        l_re += super::loss::nll_first(&logits);
        let zi = reps.z_item(e.item).to_vec();
        let anchor_row = reps.item_row(e.item);
        for (k, item) in e.re_items().enumerate() {
            let coef = w_re * (probs[k] - if k == 0 { 1.0 } else { 0.0 }) / tau;
            if coef == 0.0 {
                continue;
            }
            let f = reps.f_item(item).to_vec();
            cosine_grad_add(&zi, &f, coef, dz.row_mut(anchor_row));
            let slot = reps.feature_slot(item).expect("re item feature");
            cosine_grad_add(&f, &zi, coef, &mut df[slot]);
        }
    }

    let mut grads = Gradients::zeros(params);
    grads.embed = match encoder {
        EncoderKind::Mf => dz,
        EncoderKind::LightGcn { layers } => encode_lightgcn(&dz, graph, layers)?,
    };
    for ((item, act), d_out) in reps.feature_entries().iter().zip(&df) {
        if d_out.iter().any(|&v| v != 0.0) {
            feature_backward(params, features.row(*item), act, d_out, &mut grads.mlp);
        }
    }

    let l_reg = regularizer(batch, params);
    if weights.eta != 0.0 {
        let two_eta = 2.0 * weights.eta;
        for r in batch_rows(batch, params) {
            axpy(two_eta, params.embed.row(r), grads.embed.row_mut(r));
        }
        axpy(two_eta, params.w1.as_slice(), grads.mlp.w1.as_mut_slice());
        axpy(two_eta, &params.b1, &mut grads.mlp.b1);
        axpy(two_eta, params.w2.as_slice(), grads.mlp.w2.as_mut_slice());
        axpy(two_eta, &params.b2, &mut grads.mlp.b2);
    }
    grads.refresh_touched();

    let loss = LossBreakdown::combine(l_ui / n, l_re / n, l_reg, weights);
    Ok(BackwardOutput {
        loss,
        grads,
        ui_user_grads,
    })
}
