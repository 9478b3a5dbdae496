use std::borrow::Cow;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ParameterSet;
use crate::corpus::SplitBundle;
use crate::tensor::{axpy, Matrix};
use crate::{Error, Result};

/// Collaborative-filtering encoder mapping ID embeddings to z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum EncoderKind {
    Mf,
    LightGcn { layers: usize },
}

impl EncoderKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EncoderKind::LightGcn { layers: 0 } => {
                Err(Error::Config("lightgcn needs at least one layer".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn layers(&self) -> usize {
        match *self {
            EncoderKind::Mf => 0,
            EncoderKind::LightGcn { layers } => layers,
        }
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncoderKind::Mf => f.write_str("mf"),
            EncoderKind::LightGcn { layers } => write!(f, "lightgcn(L={layers})"),
        }
    }
}

/// Symmetric user–item graph over training interactions, stored as CSR over
/// embedding rows (users first, then items). Each edge carries the weight
/// 1/√(|N_u|·|N_i|).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphAdjacency {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

impl GraphAdjacency {
    pub fn from_train(n_users: usize, n_items: usize, train: &[(usize, usize)]) -> Self {
        let n = n_users + n_items;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, i) in train {
            adj[u].push(n_users + i);
            adj[n_users + i].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for (node, list) in adj.iter().enumerate() {
            for &m in list {
                neighbors.push(m);
                weights.push(1.0 / ((adj[node].len() * adj[m].len()) as f64).sqrt());
            }
            offsets.push(neighbors.len());
        }
        Self {
            offsets,
            neighbors,
            weights,
        }
    }

    pub fn from_bundle(bundle: &SplitBundle) -> Self {
        Self::from_train(bundle.n_users, bundle.n_items, &bundle.train)
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[node]..self.offsets[node + 1];
        self.neighbors[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// One propagation step `Â · x`.
    pub fn propagate(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for node in 0..self.n_nodes() {
            let dst = out.row_mut(node);
            for (m, w) in self.neighbors(node) {
                axpy(w, x.row(m), dst);
            }
        }
        out
    }
}

/// MF encoder: z is the ID embedding itself.
pub fn encode_mf(params: &ParameterSet, row: usize) -> Result<Vec<f64>> {
    if row >= params.embed.rows() {
        return Err(Error::OutOfBounds {
            index: row,
            len: params.embed.rows(),
        });
    }
    Ok(params.embed.row(row).to_vec())
}

/// LightGCN readout: the mean of layers 0..=L, where layer 0 is `embed` and
/// layer l+1 is `Â ·` layer l.
///
/// The map is linear and `Â` is symmetric, so the same function also
/// back-propagates a gradient on z to a gradient on the embeddings.
pub fn encode_lightgcn(embed: &Matrix, graph: &GraphAdjacency, layers: usize) -> Result<Matrix> {
    if layers == 0 {
        return Err(Error::Config("lightgcn needs at least one layer".into()));
    }
    if embed.rows() != graph.n_nodes() {
        return Err(Error::Shape(format!(
            "embedding table has {} rows, graph has {} nodes",
            embed.rows(),
            graph.n_nodes()
        )));
    }
    let mut sum = embed.clone();
    let mut layer = Cow::Borrowed(embed);
    for _ in 0..layers {
        let next = graph.propagate(&layer);
        axpy(1.0, next.as_slice(), sum.as_mut_slice());
        layer = Cow::Owned(next);
    }
    let scale = 1.0 / (layers + 1) as f64;
    sum.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
    Ok(sum)
}

/// Collaborative embeddings z for every node.
pub fn collaborative<'a>(
    params: &'a ParameterSet,
    encoder: EncoderKind,
    graph: &GraphAdjacency,
) -> Result<Cow<'a, Matrix>> {
    match encoder {
        EncoderKind::Mf => Ok(Cow::Borrowed(&params.embed)),
        EncoderKind::LightGcn { layers } => {
            Ok(Cow::Owned(encode_lightgcn(&params.embed, graph, layers)?))
        }
    }
}
