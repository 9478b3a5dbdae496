use std::cmp::Ordering;

use crate::{Error, Result};

/// Descending score, ties broken by ascending item index.
#[inline]
pub(crate) fn rank_order(a: (usize, f64), b: (usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Top-`k` candidates under [`rank_order`].
pub fn top_k(candidates: &[usize], scores: &[f64], k: usize) -> Vec<usize> {
    let mut ranked: Vec<(usize, f64)> = candidates.iter().copied().zip(scores.iter().copied()).collect();
    let k = k.min(ranked.len());
    if k == 0 {
        return Vec::new();
    }
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, |a, b| rank_order(*a, *b));
        ranked.truncate(k);
    }
    ranked.sort_unstable_by(|a, b| rank_order(*a, *b));
    ranked.into_iter().map(|(i, _)| i).collect()
}

/// recall@K and NDCG@K for one user.
///
/// `relevant` must be sorted. recall = hits / |relevant|;
/// NDCG = Σ_{hits at rank r ≤ K} 1/log₂(r+1) divided by the ideal DCG over
/// min(K, |relevant|) hits.
pub fn rank_metrics(candidates: &[usize], scores: &[f64], relevant: &[usize], k: usize) -> Result<(f64, f64)> {
    if relevant.is_empty() {
        return Err(Error::Input("rank_metrics called with no relevant items".into()));
    }
    if candidates.len() != scores.len() {
        return Err(Error::Shape(format!(
            "{} candidates but {} scores",
            candidates.len(),
            scores.len()
        )));
    }
    let top = top_k(candidates, scores, k);
    let mut hits = 0usize;
    let mut dcg = 0.0;
    for (r, item) in top.iter().enumerate() {
        if relevant.binary_search(item).is_ok() {
            hits += 1;
            dcg += 1.0 / ((r + 2) as f64).log2();
        }
    }
    let idcg: f64 = (0..k.min(relevant.len())).map(|r| 1.0 / ((r + 2) as f64).log2()).sum();
    Ok((hits as f64 / relevant.len() as f64, dcg / idcg))
}
