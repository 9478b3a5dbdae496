//! Central finite-difference verification of `backward`.

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use serde::Serialize;

use crate::config::TrainConfig;
use crate::corpus::{gen_synthetic, make_split_with_cold, FeatureMatrix, SplitBundle, SyntheticConfig};
use crate::model::{feature_forward, xavier_init, GraphAdjacency, ParameterSet, TENSOR_NAMES};
use crate::objective::{backward, forward_loss, Batch, Gradients};
use crate::rng::{self, Stream};
use crate::{Error, Result};

pub const FD_STEP: f64 = 1e-5;
const REL_FLOOR: f64 = 1e-8;
/// Parameter points whose MLP pre-activations come this close to the
/// leaky-ReLU kink are redrawn; the central difference would straddle it.
const KINK_MARGIN: f64 = 1e3 * FD_STEP;
const MAX_BATCH: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub tensor: &'static str,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub trials: usize,
    pub parameters_checked: usize,
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

fn near_kink(params: &ParameterSet, features: &FeatureMatrix) -> bool {
    (0..features.n_items()).any(|i| {
        feature_forward(params, features.row(i))
            .pre
            .iter()
            .any(|p| p.abs() < KINK_MARGIN)
    })
}

fn draw_point(
    config: &TrainConfig,
    bundle: &SplitBundle,
    features: &FeatureMatrix,
    rng: &mut rng::Rng,
) -> Result<ParameterSet> {
    let dims = config.dims(bundle.n_users, bundle.n_items, features.dim());
    let mut last = None;
    for _ in 0..100 {
        let mut p = xavier_init(dims, rng)?;
        for b in p.b1.iter_mut().chain(p.b2.iter_mut()) {
            *b = rng.gen_range(-0.5..0.5);
        }
        if !near_kink(&p, features) {
            return Ok(p);
        }
        last = Some(p);
    }
    Ok(last.expect("at least one draw"))
}

/// A 10-user / 16-item synthetic corpus (12 warm, 4 cold) with the cold
/// items forced, plus a configuration scaled down to match.
pub fn tiny_instance(seed: u64) -> Result<(SplitBundle, FeatureMatrix, TrainConfig)> {
    let syn = SyntheticConfig {
        n_users: 10,
        n_warm: 12,
        n_cold: 4,
        latent: 3,
        feat_dim: 5,
        per_user: 4,
        noise: 0.3,
        seed,
    };
    let (log, features, truth) = gen_synthetic(&syn)?;
    let bundle = make_split_with_cold(&log, &truth.cold_items, seed)?;
    let mut cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    cfg.model.dim = 4;
    cfg.model.hidden = 8;
    cfg.objective.k_ui = 4;
    cfg.objective.k_re = 4;
    cfg.objective.tau_ui = 0.5;
    cfg.objective.tau_re = 0.5;
    cfg.objective.eta = 0.01;
    Ok((bundle, features, cfg))
}

pub fn finite_diff_check(
    bundle: &SplitBundle,
    features: &FeatureMatrix,
    config: &TrainConfig,
    trials: usize,
) -> Result<GradCheckReport> {
    finite_diff_check_with(bundle, features, config, trials, |_| {})
}

/// Like [`finite_diff_check`], with `tamper` applied to every analytic
/// gradient before comparison.
pub fn finite_diff_check_with(
    bundle: &SplitBundle,
    features: &FeatureMatrix,
    config: &TrainConfig,
    trials: usize,
    tamper: impl Fn(&mut Gradients),
) -> Result<GradCheckReport> {
    config.validate()?;
    if bundle.train.is_empty() {
        return Err(Error::Input("gradient check needs at least one training pair".into()));
    }
    let encoder = config.encoder();
    let weights = config.weights();
    let spec = config.batch_spec();
    let graph = GraphAdjacency::from_bundle(bundle);
    let mut rng = rng::stream(config.seed, Stream::GradCheck);
    let batch_len = config.optim.batch_size.min(MAX_BATCH).min(bundle.train.len());

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        tensor: TENSOR_NAMES[0],
        index: 0,
        analytic: 0.0,
        numeric: 0.0,
        trials,
        parameters_checked: 0,
    };
    for _ in 0..trials {
        let mut params = draw_point(config, bundle, features, &mut rng)?;
        let pairs: Vec<(usize, usize)> = bundle.train.choose_multiple(&mut rng, batch_len).copied().collect();
        let mut hybrid = rng::Rng::seed_from_u64(rng.gen());
        let batch = Batch::sample(bundle, &pairs, spec, &mut rng, &mut hybrid)?;
        let mut grads = backward(&params, encoder, &graph, features, &batch, &weights)?.grads;
        tamper(&mut grads);

        for k in 0..TENSOR_NAMES.len() {
            for j in 0..grads.tensors()[k].len() {
                let orig = params.tensors()[k][j];
                params.tensors_mut()[k][j] = orig + FD_STEP;
                let up = forward_loss(&params, encoder, &graph, features, &batch, &weights)?.total;
                params.tensors_mut()[k][j] = orig - FD_STEP;
                let down = forward_loss(&params, encoder, &graph, features, &batch, &weights)?.total;
                params.tensors_mut()[k][j] = orig;

                let numeric = (up - down) / (2.0 * FD_STEP);
                let analytic = grads.tensors()[k][j];
                let err = relative_error(analytic, numeric);
                report.parameters_checked += 1;
                if err > report.max_rel_error || err.is_nan() {
                    report.max_rel_error = err;
                    report.tensor = TENSOR_NAMES[k];
                    report.index = j;
                    report.analytic = analytic;
                    report.numeric = numeric;
                }
            }
        }
    }
    Ok(report)
}
