use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, IdMap, InteractionLog};
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_users: usize,
    pub n_warm: usize,
    pub n_cold: usize,
    /// Latent dimension k.
    pub latent: usize,
    /// Feature dimension D.
    pub feat_dim: usize,
    pub per_user: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_users: 200,
            n_warm: 300,
            n_cold: 100,
            latent: 8,
            feat_dim: 32,
            per_user: 20,
            noise: 0.3,
            seed: 0,
        }
    }
}

/// Ground truth behind a synthetic corpus.
///
/// Items `0..n_warm` are warm and `n_warm..n_warm + n_cold` are cold. Features
/// are `x_i = projectionᵀ · v_i + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub user_factors: Vec<Vec<f64>>,
    pub item_factors: Vec<Vec<f64>>,
    /// k × D.
    pub projection: Vec<Vec<f64>>,
    pub cold_items: Vec<usize>,
}

impl SyntheticTruth {
    pub fn affinity(&self, user: usize, item: usize) -> f64 {
        dot(&self.user_factors[user], &self.item_factors[item])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normal_rows<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

/// Generates a corpus whose interactions come from latent user/item factors.
///
/// Each user logs their top `per_user` items (warm and cold alike) by latent
/// inner product plus Gaussian noise of standard deviation `noise`; features
/// receive independent noise of the same scale. Interactions with cold items
/// stay in the log; [`super::make_split_with_cold`] routes them to ground truth.
pub fn gen_synthetic(cfg: &SyntheticConfig) -> Result<(InteractionLog, FeatureMatrix, SyntheticTruth)> {
    let n_items = cfg.n_warm + cfg.n_cold;
    if cfg.n_users == 0 || cfg.n_warm == 0 || cfg.n_cold == 0 || cfg.latent == 0 || cfg.per_user == 0 {
        return Err(Error::Input("synthetic counts must all be >= 1".into()));
    }
    if cfg.latent > cfg.feat_dim {
        return Err(Error::Input(format!(
            "latent dimension {} exceeds feature dimension {}",
            cfg.latent, cfg.feat_dim
        )));
    }
    if cfg.per_user > n_items {
        return Err(Error::Input("per_user exceeds the number of items".into()));
    }
    if !(cfg.noise >= 0.0 && cfg.noise.is_finite()) {
        return Err(Error::Input("noise must be finite and non-negative".into()));
    }

    let mut rng = rng::stream(cfg.seed, Stream::Synthetic);
    let user_factors = normal_rows(&mut rng, cfg.n_users, cfg.latent, 1.0);
    let item_factors = normal_rows(&mut rng, n_items, cfg.latent, 1.0);
    let projection = normal_rows(&mut rng, cfg.latent, cfg.feat_dim, (cfg.latent as f64).powf(-0.5));

    let mut interactions = Vec::with_capacity(cfg.n_users * cfg.per_user);
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(n_items);
    for (u, uf) in user_factors.iter().enumerate() {
        scored.clear();
        for (i, vf) in item_factors.iter().enumerate() {
            let eps: f64 = rng.sample(StandardNormal);
            scored.push((dot(uf, vf) + cfg.noise * eps, i));
        }
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        interactions.extend(scored[..cfg.per_user].iter().map(|&(_, i)| (u, i)));
    }

    let mut data = Vec::with_capacity(n_items * cfg.feat_dim);
    for vf in &item_factors {
        for j in 0..cfg.feat_dim {
            let eps: f64 = rng.sample(StandardNormal);
            let clean: f64 = (0..cfg.latent).map(|k| vf[k] * projection[k][j]).sum();
            data.push(clean + cfg.noise * eps);
        }
    }

    let log = InteractionLog {
        interactions,
        users: IdMap::from_ids((0..cfg.n_users).map(|u| format!("u{u}")).collect()),
        items: IdMap::from_ids((0..n_items).map(|i| format!("i{i}")).collect()),
    };
    let truth = SyntheticTruth {
        user_factors,
        item_factors,
        projection,
        cold_items: (cfg.n_warm..n_items).collect(),
    };
    Ok((log, FeatureMatrix::new(cfg.feat_dim, data)?, truth))
}
