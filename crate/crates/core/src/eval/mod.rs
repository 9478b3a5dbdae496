//! Full-ranking evaluation in the warm, cold and all-item scenarios.

mod metrics;

use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use metrics::{rank_metrics, top_k};

use crate::corpus::{FeatureMatrix, SplitBundle};
use crate::model::{collaborative, encode_feature, EncoderKind, GraphAdjacency, ParameterSet};
use crate::objective::cosine;
use crate::tensor::{dot, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Warm,
    Cold,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub split: SplitKind,
    pub k: usize,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, split: SplitKind) -> Self {
        Self { kind, split, k: 10 }
    }

    /// All six scenario × split combinations at cutoff `k`.
    pub fn all(k: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for split in [SplitKind::Val, SplitKind::Test] {
            for kind in [ScenarioKind::Warm, ScenarioKind::Cold, ScenarioKind::All] {
                out.push(Self { kind, split, k });
            }
        }
        out
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{:?}@{}", self.kind, self.split, self.k)
    }
}

/// How cold items are scored against a user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColdScoring {
    /// z_u · f_i, the same bilinear form the hybrid U-I term trains.
    #[default]
    Raw,
    /// cos(z_u, f_i).
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub user: usize,
    pub recall: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: ScenarioSpec,
    pub recall_at_k: f64,
    pub ndcg_at_k: f64,
    pub n_users_evaluated: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_user: Option<Vec<UserMetrics>>,
}

/// Frozen user/item representations for ranking.
pub struct Scorer {
    n_users: usize,
    z: Matrix,
    /// f for cold items; rows of warm items are unused.
    f: Matrix,
    is_cold: Vec<bool>,
    cold_scoring: ColdScoring,
}

impl Scorer {
    pub fn new(
        params: &ParameterSet,
        encoder: EncoderKind,
        bundle: &SplitBundle,
        features: &FeatureMatrix,
        cold_scoring: ColdScoring,
    ) -> Result<Self> {
        let graph = GraphAdjacency::from_bundle(bundle);
        Self::with_graph(params, encoder, &graph, bundle, features, cold_scoring)
    }

    pub fn with_graph(
        params: &ParameterSet,
        encoder: EncoderKind,
        graph: &GraphAdjacency,
        bundle: &SplitBundle,
        features: &FeatureMatrix,
        cold_scoring: ColdScoring,
    ) -> Result<Self> {
        let z = collaborative(params, encoder, graph)?.into_owned();
        let mut f = Matrix::zeros(bundle.n_items, params.dims.dim);
        for &i in &bundle.cold_items {
            f.row_mut(i).copy_from_slice(&encode_feature(params, features.row(i))?);
        }
        let is_cold = (0..bundle.n_items).map(|i| bundle.is_cold(i)).collect();
        Ok(Self {
            n_users: params.dims.n_users,
            z,
            f,
            is_cold,
            cold_scoring,
        })
    }

    /// Builds a scorer directly from z rows (users first) and item feature
    /// representations.
    pub fn from_parts(n_users: usize, z: Matrix, f: Matrix, is_cold: Vec<bool>, cold_scoring: ColdScoring) -> Self {
        Self {
            n_users,
            z,
            f,
            is_cold,
            cold_scoring,
        }
    }

    pub fn score(&self, user: usize, item: usize) -> f64 {
        let zu = self.z.row(user);
        if self.is_cold[item] {
            let fi = self.f.row(item);
            match self.cold_scoring {
                ColdScoring::Raw => dot(zu, fi),
                ColdScoring::Cosine => cosine(zu, fi),
            }
        } else {
            dot(zu, self.z.row(self.n_users + item))
        }
    }

    pub fn score_items(&self, user: usize, candidates: &[usize]) -> Vec<f64> {
        candidates.iter().map(|&i| self.score(user, i)).collect()
    }
}

/// Candidate items for `user`: warm items outside the user's training
/// positives, and/or the cold items of the requested split.
pub fn candidates(bundle: &SplitBundle, user: usize, spec: &ScenarioSpec) -> Vec<usize> {
    let mut out = Vec::new();
    if spec.kind != ScenarioKind::Cold {
        out.extend(
            bundle
                .warm_items
                .iter()
                .copied()
                .filter(|&i| !bundle.is_train_positive(user, i)),
        );
    }
    if spec.kind != ScenarioKind::Warm {
        out.extend_from_slice(cold_split_items(bundle, spec.split));
    }
    out
}

fn cold_split_items(bundle: &SplitBundle, split: SplitKind) -> &[usize] {
    match split {
        SplitKind::Val => &bundle.cold_val_items,
        SplitKind::Test => &bundle.cold_test_items,
    }
}

/// Sorted relevant items per user for the scenario.
pub fn relevant_sets(bundle: &SplitBundle, spec: &ScenarioSpec) -> Vec<Vec<usize>> {
    let mut rel = vec![Vec::new(); bundle.n_users];
    if spec.kind != ScenarioKind::Cold {
        let warm = match spec.split {
            SplitKind::Val => &bundle.warm_val,
            SplitKind::Test => &bundle.warm_test,
        };
        for &(u, i) in warm {
            rel[u].push(i);
        }
    }
    if spec.kind != ScenarioKind::Warm {
        let items = cold_split_items(bundle, spec.split);
        for &(u, i) in &bundle.cold_interactions {
            if items.binary_search(&i).is_ok() {
                rel[u].push(i);
            }
        }
    }
    for r in &mut rel {
        r.sort_unstable();
        r.dedup();
    }
    rel
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Per-user metrics, averaged over users with at least one relevant item.
pub fn evaluate(scorer: &Scorer, bundle: &SplitBundle, spec: &ScenarioSpec) -> Result<MetricsReport> {
    if spec.k == 0 {
        return Err(Error::Config("cutoff K must be >= 1".into()));
    }
    let relevant = relevant_sets(bundle, spec);
    let per_user: Vec<UserMetrics> = (0..bundle.n_users)
        .into_par_iter()
        .filter(|&u| !relevant[u].is_empty())
        .map(|u| {
            let cands = candidates(bundle, u, spec);
            let scores = scorer.score_items(u, &cands);
            let (recall, ndcg) = rank_metrics(&cands, &scores, &relevant[u], spec.k)?;
            Ok(UserMetrics { user: u, recall, ndcg })
        })
        .collect::<Result<_>>()?;
    if per_user.is_empty() {
        return Err(Error::EmptyScenario(spec.to_string()));
    }
    let n = per_user.len() as f64;
    Ok(MetricsReport {
        scenario: *spec,
        recall_at_k: compensated_sum(per_user.iter().map(|m| m.recall)) / n,
        ndcg_at_k: compensated_sum(per_user.iter().map(|m| m.ndcg)) / n,
        n_users_evaluated: per_user.len(),
        per_user: Some(per_user),
    })
}

/// Writes `user_id,recall,ndcg` rows.
pub fn write_per_user_csv(path: &Path, report: &MetricsReport, user_ids: &[String]) -> Result<()> {
    let rows = report
        .per_user
        .as_ref()
        .ok_or_else(|| Error::Input("report carries no per-user metrics".into()))?;
    let mut out = Vec::new();
    writeln!(out, "user_id,recall,ndcg").unwrap();
    for m in rows {
        writeln!(out, "{},{},{}", user_ids[m.user], m.recall, m.ndcg).unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Expected recall@K of a uniformly random ranking: for a user with C
/// candidates, each relevant item lands in the top K with probability
/// min(K, C)/C.
pub fn random_recall_expectation(bundle: &SplitBundle, spec: &ScenarioSpec) -> Result<f64> {
    let relevant = relevant_sets(bundle, spec);
    let values: Vec<f64> = (0..bundle.n_users)
        .filter(|&u| !relevant[u].is_empty())
        .map(|u| {
            let c = candidates(bundle, u, spec).len() as f64;
            (spec.k as f64).min(c) / c
        })
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyScenario(spec.to_string()));
    }
    Ok(compensated_sum(values.iter().copied()) / values.len() as f64)
}
