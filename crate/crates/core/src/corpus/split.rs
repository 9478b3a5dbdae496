use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::io::write_interactions;
use super::{load_interactions, InteractionLog};
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Warm/cold partition of an interaction log.
///
/// Cold items have no training interactions; their logged interactions are
/// kept in `cold_interactions` as ground truth for the cold scenarios. Warm
/// interactions are divided per user 8:1:1 into train, warm_val and
/// warm_test. Users with fewer than three warm interactions keep all of them
/// in train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitBundle {
    pub n_users: usize,
    pub n_items: usize,
    pub seed: u64,
    pub cold_fraction: f64,
    pub train: Vec<(usize, usize)>,
    pub warm_val: Vec<(usize, usize)>,
    pub warm_test: Vec<(usize, usize)>,
    /// Sorted.
    pub cold_items: Vec<usize>,
    pub cold_val_items: Vec<usize>,
    pub cold_test_items: Vec<usize>,
    /// Log interactions on cold items, in log order.
    pub cold_interactions: Vec<(usize, usize)>,
    /// N_u: sorted training items per user.
    pub user_pos: Vec<Vec<usize>>,
    /// N_i: sorted training users per item.
    pub item_pos: Vec<Vec<usize>>,
    pub warm_items: Vec<usize>,
    is_cold: Vec<bool>,
}

impl SplitBundle {
    pub fn is_cold(&self, item: usize) -> bool {
        self.is_cold[item]
    }

    pub fn is_train_positive(&self, user: usize, item: usize) -> bool {
        self.user_pos[user].binary_search(&item).is_ok()
    }

    fn assemble(
        n_users: usize,
        n_items: usize,
        seed: u64,
        cold_fraction: f64,
        parts: Parts,
        cold_interactions: Vec<(usize, usize)>,
    ) -> Self {
        let mut is_cold = vec![false; n_items];
        for &i in &parts.cold_items {
            is_cold[i] = true;
        }
        let mut user_pos = vec![Vec::new(); n_users];
        let mut item_pos = vec![Vec::new(); n_items];
        for &(u, i) in &parts.train {
            user_pos[u].push(i);
            item_pos[i].push(u);
        }
        user_pos.iter_mut().for_each(|v| v.sort_unstable());
        item_pos.iter_mut().for_each(|v| v.sort_unstable());
        let warm_items = (0..n_items).filter(|&i| !is_cold[i]).collect();
        Self {
            n_users,
            n_items,
            seed,
            cold_fraction,
            train: parts.train,
            warm_val: parts.warm_val,
            warm_test: parts.warm_test,
            cold_items: parts.cold_items,
            cold_val_items: parts.cold_val_items,
            cold_test_items: parts.cold_test_items,
            cold_interactions,
            user_pos,
            item_pos,
            warm_items,
            is_cold,
        }
    }
}

struct Parts {
    train: Vec<(usize, usize)>,
    warm_val: Vec<(usize, usize)>,
    warm_test: Vec<(usize, usize)>,
    cold_items: Vec<usize>,
    cold_val_items: Vec<usize>,
    cold_test_items: Vec<usize>,
}

/// Samples ⌊cold_fraction · n_items⌋ cold items uniformly, then splits the
/// remaining interactions per user.
pub fn make_split(log: &InteractionLog, cold_fraction: f64, seed: u64) -> Result<SplitBundle> {
    if !(cold_fraction > 0.0 && cold_fraction < 1.0) {
        return Err(Error::Config(format!(
            "--cold-fraction must lie in (0, 1), got {cold_fraction}"
        )));
    }
    if log.is_empty() {
        return Err(Error::Input("cannot split an empty interaction log".into()));
    }
    let n_items = log.n_items();
    let n_cold = (cold_fraction * n_items as f64).floor() as usize;
    if n_cold >= n_items {
        return Err(Error::Config(format!(
            "--cold-fraction {cold_fraction} leaves no warm items"
        )));
    }
    let mut rng = rng::stream(seed, Stream::Split);
    let cold = rand::seq::index::sample(&mut rng, n_items, n_cold).into_vec();
    Ok(split_with(log, cold, cold_fraction, seed, &mut rng))
}

/// Like [`make_split`] but with a caller-chosen cold item set.
pub fn make_split_with_cold(log: &InteractionLog, cold: &[usize], seed: u64) -> Result<SplitBundle> {
    if log.is_empty() {
        return Err(Error::Input("cannot split an empty interaction log".into()));
    }
    let n_items = log.n_items();
    if let Some(&bad) = cold.iter().find(|&&i| i >= n_items) {
        return Err(Error::OutOfBounds { index: bad, len: n_items });
    }
    let mut cold = cold.to_vec();
    cold.sort_unstable();
    cold.dedup();
    if cold.len() >= n_items {
        return Err(Error::Config("forced cold set leaves no warm items".into()));
    }
    let fraction = cold.len() as f64 / n_items as f64;
    let mut rng = rng::stream(seed, Stream::Split);
    Ok(split_with(log, cold, fraction, seed, &mut rng))
}

fn split_with(
    log: &InteractionLog,
    mut cold: Vec<usize>,
    cold_fraction: f64,
    seed: u64,
    rng: &mut rng::Rng,
) -> SplitBundle {
    let n_users = log.n_users();
    let n_items = log.n_items();

    cold.shuffle(rng);
    let half = cold.len().div_ceil(2);
    let mut cold_val_items = cold[..half].to_vec();
    let mut cold_test_items = cold[half..].to_vec();
    cold_val_items.sort_unstable();
    cold_test_items.sort_unstable();
    cold.sort_unstable();

    let mut is_cold = vec![false; n_items];
    for &i in &cold {
        is_cold[i] = true;
    }

    let mut per_user: Vec<Vec<usize>> = vec![Vec::new(); n_users];
    let mut cold_interactions = Vec::new();
    for &(u, i) in &log.interactions {
        if is_cold[i] {
            cold_interactions.push((u, i));
        } else {
            per_user[u].push(i);
        }
    }

    let mut train = Vec::new();
    let mut warm_val = Vec::new();
    let mut warm_test = Vec::new();
    for (u, items) in per_user.iter_mut().enumerate() {
        if items.len() < 3 {
            train.extend(items.iter().map(|&i| (u, i)));
            continue;
        }
        items.shuffle(rng);
        let holdout = ((items.len() as f64 * 0.1).round() as usize).max(1);
        let (test, rest) = items.split_at(holdout);
        let (val, tr) = rest.split_at(holdout);
        warm_test.extend(test.iter().map(|&i| (u, i)));
        warm_val.extend(val.iter().map(|&i| (u, i)));
        train.extend(tr.iter().map(|&i| (u, i)));
    }

    let parts = Parts {
        train,
        warm_val,
        warm_test,
        cold_items: cold,
        cold_val_items,
        cold_test_items,
    };
    SplitBundle::assemble(n_users, n_items, seed, cold_fraction, parts, cold_interactions)
}

/// On-disk description of a split: enough, together with the source
/// interaction file, to rebuild the [`SplitBundle`] exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub cold_fraction: f64,
    pub interactions: PathBuf,
    pub cold_items: Vec<String>,
    pub cold_val_items: Vec<String>,
    pub cold_test_items: Vec<String>,
    pub train: PathBuf,
    pub warm_val: PathBuf,
    pub warm_test: PathBuf,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `manifest.json`, `train.tsv`, `warm_val.tsv` and `warm_test.tsv`
/// into `dir`. Returns the manifest path.
pub fn save_split(
    dir: &Path,
    interactions_path: &Path,
    log: &InteractionLog,
    bundle: &SplitBundle,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ids = |items: &[usize]| -> Vec<String> {
        items.iter().map(|&i| log.items.id(i).to_owned()).collect()
    };
    let manifest = SplitManifest {
        seed: bundle.seed,
        cold_fraction: bundle.cold_fraction,
        interactions: interactions_path.to_owned(),
        cold_items: ids(&bundle.cold_items),
        cold_val_items: ids(&bundle.cold_val_items),
        cold_test_items: ids(&bundle.cold_test_items),
        train: "train.tsv".into(),
        warm_val: "warm_val.tsv".into(),
        warm_test: "warm_test.tsv".into(),
    };
    write_interactions(&dir.join(&manifest.train), log, &bundle.train)?;
    write_interactions(&dir.join(&manifest.warm_val), log, &bundle.warm_val)?;
    write_interactions(&dir.join(&manifest.warm_test), log, &bundle.warm_test)?;
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() || p.exists() {
        p.to_owned()
    } else {
        base.join(p)
    }
}

/// Reloads a split written by [`save_split`], together with its source log.
pub fn load_split(manifest_path: &Path) -> Result<(InteractionLog, SplitBundle)> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: SplitManifest = serde_json::from_str(&text)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let log = load_interactions(resolve(base, &manifest.interactions))?;

    let item_ids = |ids: &[String]| -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                log.items.get(id).ok_or_else(|| {
                    Error::ArtifactMismatch(format!("manifest item {id} absent from interactions"))
                })
            })
            .collect()
    };
    let cold_items = item_ids(&manifest.cold_items)?;
    let cold_val_items = item_ids(&manifest.cold_val_items)?;
    let cold_test_items = item_ids(&manifest.cold_test_items)?;

    let read_pairs = |file: &Path| -> Result<Vec<(usize, usize)>> {
        let path = base.join(file);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (u, i) = line.split_once('\t').ok_or_else(|| Error::Parse {
                path: path.clone(),
                line: n + 1,
                msg: "expected `user_id<TAB>item_id`".into(),
            })?;
            match (log.users.get(u), log.items.get(i)) {
                (Some(u), Some(i)) => pairs.push((u, i)),
                _ => {
                    return Err(Error::ArtifactMismatch(format!(
                        "{}:{}: pair ({u}, {i}) absent from interactions",
                        path.display(),
                        n + 1
                    )))
                }
            }
        }
        Ok(pairs)
    };
    let parts = Parts {
        train: read_pairs(&manifest.train)?,
        warm_val: read_pairs(&manifest.warm_val)?,
        warm_test: read_pairs(&manifest.warm_test)?,
        cold_items,
        cold_val_items,
        cold_test_items,
    };
    let mut is_cold = vec![false; log.n_items()];
    for &i in &parts.cold_items {
        is_cold[i] = true;
    }
    let cold_interactions = log
        .interactions
        .iter()
        .copied()
        .filter(|&(_, i)| is_cold[i])
        .collect();
    let bundle = SplitBundle::assemble(
        log.n_users(),
        log.n_items(),
        manifest.seed,
        manifest.cold_fraction,
        parts,
        cold_interactions,
    );
    Ok((log, bundle))
}
