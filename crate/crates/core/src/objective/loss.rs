use std::borrow::Cow;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::density::cosine;
use super::{Batch, BatchEntry};
use crate::corpus::FeatureMatrix;
use crate::model::{collaborative, feature_forward, EncoderKind, FeatureActivation, GraphAdjacency, ParameterSet};
use crate::tensor::{dot, Matrix};
use crate::{Error, Result};

/// Encoder outputs needed to score one batch: z for every node and f for the
/// items the batch reads through the feature encoder.
#[derive(Debug, Clone)]
pub struct Representations<'a> {
    pub z: Cow<'a, Matrix>,
    n_users: usize,
    slot: Vec<Option<usize>>,
    features: Vec<(usize, FeatureActivation)>,
}

impl<'a> Representations<'a> {
    pub fn compute(
        params: &'a ParameterSet,
        encoder: EncoderKind,
        graph: &GraphAdjacency,
        features: &FeatureMatrix,
        batch: &Batch,
    ) -> Result<Self> {
        let dims = params.dims;
        if features.n_items() != dims.n_items || features.dim() != dims.feat_dim {
            return Err(Error::Shape(format!(
                "feature matrix is {}x{}, model expects {}x{}",
                features.n_items(),
                features.dim(),
                dims.n_items,
                dims.feat_dim
            )));
        }
        let z = collaborative(params, encoder, graph)?;
        let mut slot = vec![None; dims.n_items];
        let mut out = Vec::new();
        for item in feature_items(batch) {
            if item >= dims.n_items {
                return Err(Error::OutOfBounds { index: item, len: dims.n_items });
            }
            slot[item] = Some(out.len());
            out.push((item, feature_forward(params, features.row(item))));
        }
        Ok(Self {
            z,
            n_users: dims.n_users,
            slot,
            features: out,
        })
    }

    /// Builds representations from explicit z rows (users first) and item
    /// feature vectors.
    pub fn from_parts(z: Matrix, n_users: usize, item_features: &[(usize, Vec<f64>)]) -> Self {
        let n_items = z.rows() - n_users;
        let mut slot = vec![None; n_items];
        let features = item_features
            .iter()
            .enumerate()
            .map(|(k, (item, f))| {
                slot[*item] = Some(k);
                let act = FeatureActivation {
                    pre: Vec::new(),
                    hidden: Vec::new(),
                    out: f.clone(),
                };
                (*item, act)
            })
            .collect();
        Self {
            z: Cow::Owned(z),
            n_users,
            slot,
            features,
        }
    }

    pub fn z_user(&self, user: usize) -> &[f64] {
        self.z.row(user)
    }

    pub fn z_item(&self, item: usize) -> &[f64] {
        self.z.row(self.n_users + item)
    }

    pub fn item_row(&self, item: usize) -> usize {
        self.n_users + item
    }

    pub fn feature_slot(&self, item: usize) -> Option<usize> {
        self.slot[item]
    }

    /// f for `item`; panics if the batch did not request it.
    pub fn f_item(&self, item: usize) -> &[f64] {
        let k = self.slot[item].unwrap_or_else(|| panic!("feature representation of item {item} not computed"));
        &self.features[k].1.out
    }

    pub(crate) fn feature_entries(&self) -> &[(usize, FeatureActivation)] {
        &self.features
    }

    /// The item-side vector used in the U-I term for occurrence `k` of `entry`.
    pub(crate) fn ui_vector(&self, entry: &BatchEntry, k: usize, item: usize) -> &[f64] {
        if entry.hybrid[k] {
            self.f_item(item)
        } else {
            self.z_item(item)
        }
    }
}

/// Items whose feature representation the batch needs, in first-use order.
fn feature_items(batch: &Batch) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    let mut order = Vec::new();
    let mut push = |i: usize| {
        if seen.insert(i) {
            order.push(i);
        }
    };
    for e in &batch.entries {
        for (k, item) in e.ui_items().enumerate() {
            if e.hybrid[k] {
                push(item);
            }
        }
        if !e.re_negatives.is_empty() {
            e.re_items().for_each(&mut push);
        }
    }
    order
}

pub(crate) fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    // Summed in ascending order so the result is independent of logit order.
    let mut terms: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    terms.sort_unstable_by(f64::total_cmp);
    max + terms.iter().sum::<f64>().ln()
}

/// Softmax responsibilities, written into `out`.
pub fn softmax(logits: &[f64], out: &mut Vec<f64>) {
    let lse = log_sum_exp(logits);
    out.clear();
    out.extend(logits.iter().map(|&l| (l - lse).exp()));
}

/// `-ln softmax(logits)[0]`.
pub(crate) fn nll_first(logits: &[f64]) -> f64 {
    log_sum_exp(logits) - logits[0]
}

pub(crate) fn ui_logits(entry: &BatchEntry, reps: &Representations<'_>, tau: f64, out: &mut Vec<f64>) {
    let zu = reps.z_user(entry.user);
    out.clear();
    for (k, item) in entry.ui_items().enumerate() {
        out.push(dot(reps.ui_vector(entry, k, item), zu) / tau);
    }
}

pub(crate) fn re_logits(entry: &BatchEntry, reps: &Representations<'_>, tau: f64, out: &mut Vec<f64>) {
    let zi = reps.z_item(entry.item);
    out.clear();
    for item in entry.re_items() {
        out.push(cosine(zi, reps.f_item(item)) / tau);
    }
}

fn batch_mean(batch: &Batch, mut term: impl FnMut(&BatchEntry) -> f64) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    batch.entries.iter().map(&mut term).sum::<f64>() / batch.len() as f64
}

/// U-I contrastive loss: mean over entries of
/// `-ln g(u,i) / (g(u,i) + Σ_k g(u,j_k))`, with hybrid-flagged occurrences
/// scored through f instead of z.
pub fn loss_ui(batch: &Batch, reps: &Representations<'_>, tau: f64) -> f64 {
    let mut buf = Vec::new();
    batch_mean(batch, |e| {
        ui_logits(e, reps, tau, &mut buf);
        nll_first(&buf)
    })
}

/// R-E contrastive loss: mean over entries of
/// `-ln h(z_i,f_i) / (h(z_i,f_i) + Σ_k h(z_i,f_{j_k}))`. Entries without R-E
/// negatives contribute zero.
pub fn loss_re(batch: &Batch, reps: &Representations<'_>, tau: f64) -> f64 {
    let mut buf = Vec::new();
    batch_mean(batch, |e| {
        if e.re_negatives.is_empty() {
            return 0.0;
        }
        re_logits(e, reps, tau, &mut buf);
        nll_first(&buf)
    })
}

/// `softplus(-x) = -ln σ(x)`, stable for large |x|.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// BPR loss: mean of `-ln σ(z_u·z_i - z_u·z_j)` with exactly one negative per
/// entry. Scores use z only.
pub fn loss_bpr(batch: &Batch, reps: &Representations<'_>) -> Result<f64> {
    if let Some(e) = batch.entries.iter().find(|e| e.ui_negatives.len() != 1) {
        return Err(Error::Input(format!(
            "BPR needs exactly one negative per entry, got {}",
            e.ui_negatives.len()
        )));
    }
    Ok(batch_mean(batch, |e| {
        let zu = reps.z_user(e.user);
        let diff = dot(zu, reps.z_item(e.item)) - dot(zu, reps.z_item(e.ui_negatives[0]));
        neg_log_sigmoid(diff)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda: f64,
    pub eta: f64,
    pub tau_ui: f64,
    pub tau_re: f64,
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::Config(format!("eta must be >= 0, got {}", self.eta)));
        }
        if !(self.tau_ui > 0.0 && self.tau_re > 0.0) {
            return Err(Error::Config("temperatures must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_ui: f64,
    pub l_re: f64,
    pub l_reg: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn combine(l_ui: f64, l_re: f64, l_reg: f64, w: &LossWeights) -> Self {
        Self {
            l_ui,
            l_re,
            l_reg,
            total: w.lambda * l_re + (1.0 - w.lambda) * l_ui + w.eta * l_reg,
        }
    }
}

/// Embedding rows the batch touches: users, positives, and every sampled
/// negative (U-I and R-E), sorted.
pub fn batch_rows(batch: &Batch, params: &ParameterSet) -> Vec<usize> {
    let mut rows = BTreeSet::new();
    for e in &batch.entries {
        rows.insert(params.user_row(e.user));
        for item in e.ui_items().chain(e.re_negatives.iter().copied()) {
            rows.insert(params.item_row(item));
        }
    }
    rows.into_iter().collect()
}

/// Batch-scoped squared L2 norm: touched embedding rows plus all MLP tensors.
pub fn regularizer(batch: &Batch, params: &ParameterSet) -> f64 {
    let rows: f64 = batch_rows(batch, params)
        .into_iter()
        .map(|r| params.embed.row(r).iter().map(|v| v * v).sum::<f64>())
        .sum();
    let mlp = params.w1.squared_norm()
        + params.w2.squared_norm()
        + params.b1.iter().map(|v| v * v).sum::<f64>()
        + params.b2.iter().map(|v| v * v).sum::<f64>();
    rows + mlp
}

/// `λ·L_RE + (1-λ)·L_UI + η·‖Θ‖²`.
pub fn loss_total(batch: &Batch, params: &ParameterSet, reps: &Representations<'_>, w: &LossWeights) -> LossBreakdown {
    LossBreakdown::combine(
        loss_ui(batch, reps, w.tau_ui),
        loss_re(batch, reps, w.tau_re),
        regularizer(batch, params),
        w,
    )
}
