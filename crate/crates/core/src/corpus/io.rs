use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{FeatureMatrix, InteractionLog};
use crate::{Error, Result};

/// Reads a `user<TAB>item` file (any ASCII whitespace separates the two tokens).
/// Blank lines are ignored.
pub fn load_interactions(path: impl AsRef<Path>) -> Result<InteractionLog> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_interactions(&text, path)
}

pub fn parse_interactions(text: &str, origin: &Path) -> Result<InteractionLog> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(u), Some(i), None) => pairs.push((u, i)),
            _ => {
                return Err(Error::Parse {
                    path: origin.to_owned(),
                    line: n + 1,
                    msg: format!("expected `user_id<TAB>item_id`, got {line:?}"),
                })
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus(origin.to_owned()));
    }
    Ok(InteractionLog::from_pairs(pairs))
}

/// Reads an `item_id<TAB>v1,v2,...,vD` file and orders rows by the log's item
/// indices. Rows for items absent from the log are ignored.
pub fn load_features(path: impl AsRef<Path>, log: &InteractionLog) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_features(&text, path, log)
}

pub fn parse_features(text: &str, origin: &Path, log: &InteractionLog) -> Result<FeatureMatrix> {
    let mut rows: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut dim: Option<usize> = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: origin.to_owned(),
            line: n + 1,
            msg,
        };
        let (id, values) = line
            .split_once(|c: char| c.is_ascii_whitespace())
            .ok_or_else(|| parse_err(format!("expected `item_id<TAB>v1,...`, got {line:?}")))?;
        let values = values
            .trim()
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("bad value {v:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(parse_err(format!("non-finite value {bad}")));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::DimensionMismatch {
                    item: id.to_owned(),
                    expected: d,
                    got: values.len(),
                })
            }
            Some(_) => {}
        }
        if let Some(item) = log.items.get(id) {
            rows.insert(item, values);
        }
    }

    let missing: Vec<String> = (0..log.n_items())
        .filter(|i| !rows.contains_key(i))
        .map(|i| log.items.id(i).to_owned())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingFeature(missing));
    }
    let dim = dim.unwrap_or(0);
    let mut data = Vec::with_capacity(dim * log.n_items());
    for i in 0..log.n_items() {
        data.extend_from_slice(&rows[&i]);
    }
    FeatureMatrix::new(dim, data)
}

pub(crate) fn write_interactions(
    path: &Path,
    log: &InteractionLog,
    pairs: &[(usize, usize)],
) -> Result<()> {
    let mut out = String::new();
    for &(u, i) in pairs {
        out.push_str(log.users.id(u));
        out.push('\t');
        out.push_str(log.items.id(i));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_features(path: &Path, log: &InteractionLog, features: &FeatureMatrix) -> Result<()> {
    let mut out = String::new();
    for item in 0..features.n_items() {
        out.push_str(log.items.id(item));
        out.push('\t');
        let row: Vec<String> = features.row(item).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
