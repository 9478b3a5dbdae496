use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::Matrix;
use crate::{Error, Result};

/// Shapes of every trainable tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub n_users: usize,
    pub n_items: usize,
    /// Collaborative embedding size d.
    pub dim: usize,
    /// MLP hidden width H.
    pub hidden: usize,
    /// Content feature dimension D.
    pub feat_dim: usize,
}

impl ModelDims {
    pub fn n_nodes(&self) -> usize {
        self.n_users + self.n_items
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.hidden == 0 || self.feat_dim == 0 || self.n_nodes() == 0 {
            return Err(Error::Config(format!("model dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// All trainable parameters.
///
/// `embed` holds the ID embeddings: rows `0..n_users` are users and rows
/// `n_users..n_users + n_items` are items. The feature encoder is
/// `f = w2 · φ(w1 · x + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub dims: ModelDims,
    pub embed: Matrix,
    /// H × D.
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// d × H.
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

pub const TENSOR_NAMES: [&str; 5] = ["embed", "W1", "b1", "W2", "b2"];

impl ParameterSet {
    pub fn zeros(dims: ModelDims) -> Self {
        Self {
            dims,
            embed: Matrix::zeros(dims.n_nodes(), dims.dim),
            w1: Matrix::zeros(dims.hidden, dims.feat_dim),
            b1: vec![0.0; dims.hidden],
            w2: Matrix::zeros(dims.dim, dims.hidden),
            b2: vec![0.0; dims.dim],
        }
    }

    #[inline]
    pub fn user_row(&self, user: usize) -> usize {
        user
    }

    #[inline]
    pub fn item_row(&self, item: usize) -> usize {
        self.dims.n_users + item
    }

    /// Tensors in the fixed order embed, W1, b1, W2, b2.
    pub fn tensors(&self) -> [&[f64]; 5] {
        [
            self.embed.as_slice(),
            self.w1.as_slice(),
            &self.b1,
            self.w2.as_slice(),
            &self.b2,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.embed.as_mut_slice(),
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w2.as_mut_slice(),
            &mut self.b2,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

fn fill_uniform<R: Rng + ?Sized>(values: &mut [f64], bound: f64, rng: &mut R) {
    for v in values {
        *v = rng.gen_range(-bound..=bound);
    }
}

/// Xavier-uniform bound for a weight of shape (out, in).
pub fn xavier_bound(fan_out: usize, fan_in: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Xavier-uniform weights, zero biases. The embedding table uses
/// in = out = d for its bound.
pub fn xavier_init<R: Rng + ?Sized>(dims: ModelDims, rng: &mut R) -> Result<ParameterSet> {
    dims.validate()?;
    let mut p = ParameterSet::zeros(dims);
    fill_uniform(p.embed.as_mut_slice(), xavier_bound(dims.dim, dims.dim), rng);
    fill_uniform(p.w1.as_mut_slice(), xavier_bound(dims.hidden, dims.feat_dim), rng);
    fill_uniform(p.w2.as_mut_slice(), xavier_bound(dims.dim, dims.hidden), rng);
    Ok(p)
}
