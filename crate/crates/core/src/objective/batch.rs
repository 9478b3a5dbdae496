use rand::Rng;

use crate::corpus::{sample_negatives, SplitBundle};
use crate::Result;

/// One positive (user, item) pair with its sampled contrastive partners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchEntry {
    pub user: usize,
    pub item: usize,
    /// Items paired with `user` as U-I negatives.
    pub ui_negatives: Vec<usize>,
    /// Items whose feature representations serve as R-E negatives for the
    /// anchor `item`.
    pub re_negatives: Vec<usize>,
    /// One flag per U-I item occurrence: index 0 is the positive, 1.. the
    /// negatives. A set flag swaps that item's z for its feature
    /// representation f.
    pub hybrid: Vec<bool>,
}

impl BatchEntry {
    /// The U-I item occurrences, positive first.
    pub fn ui_items(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.item).chain(self.ui_negatives.iter().copied())
    }

    /// The R-E feature targets, the anchor itself first.
    pub fn re_items(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.item).chain(self.re_negatives.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Batch {
    pub entries: Vec<BatchEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSpec {
    pub k_ui: usize,
    pub k_re: usize,
    /// Hybrid substitution probability ρ.
    pub rho: f64,
}

impl Batch {
    /// Samples negatives and hybrid flags for each positive pair.
    pub fn sample<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        bundle: &SplitBundle,
        pairs: &[(usize, usize)],
        spec: BatchSpec,
        negatives: &mut R1,
        hybrid: &mut R2,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(pairs.len());
        for &(user, item) in pairs {
            let ui_negatives = sample_negatives(bundle, user, spec.k_ui, negatives)?;
            let re_negatives = if spec.k_re > 0 {
                sample_negatives(bundle, user, spec.k_re, negatives)?
            } else {
                Vec::new()
            };
            let flags = (0..=spec.k_ui).map(|_| hybrid.gen_bool(spec.rho)).collect();
            entries.push(BatchEntry {
                user,
                item,
                ui_negatives,
                re_negatives,
                hybrid: flags,
            });
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
