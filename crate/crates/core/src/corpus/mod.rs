//! Interaction logs, content features, warm/cold splits and negative sampling.

pub(crate) mod io;
mod sampling;
mod split;
mod synthetic;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use io::{load_features, load_interactions, parse_features, parse_interactions};
pub use sampling::sample_negatives;
pub use split::{load_split, make_split, make_split_with_cold, save_split, SplitBundle, SplitManifest};
pub use synthetic::{gen_synthetic, SyntheticConfig, SyntheticTruth};

/// Bidirectional map between external string IDs and contiguous indices,
/// assigned in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for IdMap {
    fn from(ids: Vec<String>) -> Self {
        Self::from_ids(ids)
    }
}

impl From<IdMap> for Vec<String> {
    fn from(map: IdMap) -> Self {
        map.ids
    }
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids(ids: Vec<String>) -> Self {
        let index = ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { ids, index }
    }

    pub fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), i);
        i
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// A deduplicated set of observed (user, item) interactions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionLog {
    pub interactions: Vec<(usize, usize)>,
    pub users: IdMap,
    pub items: IdMap,
}

impl InteractionLog {
    /// Builds a log from raw pairs, dropping exact repeats while keeping
    /// first-appearance order.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut users = IdMap::new();
        let mut items = IdMap::new();
        let mut seen = std::collections::HashSet::new();
        let mut interactions = Vec::new();
        for (u, i) in pairs {
            let pair = (users.intern(u), items.intern(i));
            if seen.insert(pair) {
                interactions.push(pair);
            }
        }
        Self {
            interactions,
            users,
            items,
        }
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }
}

/// Item content vectors, one row per item index.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> crate::Result<Self> {
        if dim == 0 {
            return Err(crate::Error::Input("feature dimension must be >= 1".into()));
        }
        if data.len() % dim != 0 {
            return Err(crate::Error::Shape(format!(
                "{} values do not divide into rows of {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(crate::Error::Input(format!(
                "non-finite feature value in row {}",
                pos / dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_items(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, item: usize) -> &[f64] {
        &self.data[item * self.dim..(item + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}
