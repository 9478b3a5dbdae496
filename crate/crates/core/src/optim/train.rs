//! Mini-batch training with per-epoch validation and early stopping.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use crate::config::TrainConfig;
use crate::corpus::{FeatureMatrix, SplitBundle};
use crate::eval::{evaluate, ScenarioKind, ScenarioSpec, Scorer, SplitKind};
use crate::model::{xavier_init, GraphAdjacency, ParameterSet};
use crate::objective::{backward, grad_magnitude, Batch, LossBreakdown};
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// One optimizer step, as written to the metrics stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: usize,
    pub l_ui: f64,
    pub l_re: f64,
    pub l_reg: f64,
    pub total: f64,
    pub grad_mag: f64,
}

/// Epoch means of the step records plus validation recall@K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub l_ui: f64,
    pub l_re: f64,
    pub l_reg: f64,
    pub total: f64,
    pub grad_mag: f64,
    pub val_recall_warm: Option<f64>,
    pub val_recall_cold: Option<f64>,
    pub val_recall_all: f64,
}

/// Outcome of a training run.
///
/// Epochs are numbered from 1; epoch 0 denotes the initial parameters, whose
/// validation recall is `baseline_val_recall`. `history[k]` is epoch `k + 1`
/// and `stopped_epoch` is the last epoch run, so `history.len() ==
/// stopped_epoch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config_hash: String,
    pub baseline_val_recall: f64,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_recall: f64,
    pub stopped_epoch: usize,
    #[serde(skip)]
    pub best: Option<ParameterSet>,
}

fn validation_recall(
    params: &ParameterSet,
    graph: &GraphAdjacency,
    bundle: &SplitBundle,
    features: &FeatureMatrix,
    config: &TrainConfig,
) -> Result<(Option<f64>, Option<f64>, f64)> {
    let scorer = Scorer::with_graph(params, config.encoder(), graph, bundle, features, config.eval.cold_scoring)?;
    let recall = |kind| -> Result<Option<f64>> {
        let spec = ScenarioSpec {
            kind,
            split: SplitKind::Val,
            k: config.eval.k,
        };
        match evaluate(&scorer, bundle, &spec) {
            Ok(r) => Ok(Some(r.recall_at_k)),
            Err(Error::EmptyScenario(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let warm = recall(ScenarioKind::Warm)?;
    let cold = recall(ScenarioKind::Cold)?;
    let all = recall(ScenarioKind::All)?.ok_or_else(|| Error::EmptyScenario("all/val (early stopping)".into()))?;
    Ok((warm, cold, all))
}

pub fn train(bundle: &SplitBundle, features: &FeatureMatrix, config: &TrainConfig) -> Result<TrainReport> {
    train_with(bundle, features, config, |_| {})
}

/// Trains from a fresh Xavier initialization, calling `on_step` after every
/// optimizer step. Keeps the parameters with the best all-item validation
/// recall@K (earliest on ties) and stops after `patience` epochs without
/// improvement.
pub fn train_with(
    bundle: &SplitBundle,
    features: &FeatureMatrix,
    config: &TrainConfig,
    mut on_step: impl FnMut(&StepRecord),
) -> Result<TrainReport> {
    config.validate()?;
    if features.n_items() != bundle.n_items {
        return Err(Error::Shape(format!(
            "{} feature rows for {} items",
            features.n_items(),
            bundle.n_items
        )));
    }
    let encoder = config.encoder();
    let weights = config.weights();
    let spec = config.batch_spec();
    let dims = config.dims(bundle.n_users, bundle.n_items, features.dim());

    let mut params = xavier_init(dims, &mut rng::stream(config.seed, Stream::Init))?;
    let mut adam = AdamState::new(&params);
    let graph = GraphAdjacency::from_bundle(bundle);
    let mut order_rng = rng::stream(config.seed, Stream::Batch);
    let mut neg_rng = rng::stream(config.seed, Stream::Negatives);
    let mut hybrid_rng = rng::stream(config.seed, Stream::Hybrid);

    let (_, _, baseline) = validation_recall(&params, &graph, bundle, features, config)?;
    let mut best_epoch = 0;
    let mut best_recall = baseline;
    let mut best = params.clone();
    let mut history = Vec::new();
    let mut order = bundle.train.clone();
    let mut step = 0;

    for epoch in 1..=config.optim.max_epochs {
        order.shuffle(&mut order_rng);
        let mut sums = LossBreakdown::default();
        let mut mag_sum = 0.0;
        let mut n_steps = 0usize;
        for chunk in order.chunks(config.optim.batch_size) {
            let batch = Batch::sample(bundle, chunk, spec, &mut neg_rng, &mut hybrid_rng)?;
            let out = backward(&params, encoder, &graph, features, &batch, &weights)?;
            let loss = out.loss;
            if !loss.total.is_finite() || !out.grads.is_finite() {
                return Err(Error::NonFinite { epoch, step });
            }
            adam_step(&mut params, &out.grads, &mut adam, config.optim.lr)?;
            let record = StepRecord {
                epoch,
                step,
                l_ui: loss.l_ui,
                l_re: loss.l_re,
                l_reg: loss.l_reg,
                total: loss.total,
                grad_mag: grad_magnitude(&out.ui_user_grads),
            };
            on_step(&record);
            sums.l_ui += loss.l_ui;
            sums.l_re += loss.l_re;
            sums.l_reg += loss.l_reg;
            sums.total += loss.total;
            mag_sum += record.grad_mag;
            n_steps += 1;
            step += 1;
        }

        let (warm, cold, all) = validation_recall(&params, &graph, bundle, features, config)?;
        let n = n_steps.max(1) as f64;
        history.push(EpochRecord {
            epoch,
            l_ui: sums.l_ui / n,
            l_re: sums.l_re / n,
            l_reg: sums.l_reg / n,
            total: sums.total / n,
            grad_mag: mag_sum / n,
            val_recall_warm: warm,
            val_recall_cold: cold,
            val_recall_all: all,
        });
        if all > best_recall {
            best_recall = all;
            best_epoch = epoch;
            best.clone_from(&params);
        } else if epoch - best_epoch >= config.optim.patience {
            break;
        }
    }

    Ok(TrainReport {
        config_hash: config.config_hash(),
        baseline_val_recall: baseline,
        stopped_epoch: history.len(),
        history,
        best_epoch,
        best_val_recall: best_recall,
        best: Some(best),
    })
}
