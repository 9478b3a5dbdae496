use super::ParameterSet;
use crate::tensor::Matrix;
use crate::{Error, Result};

pub const LEAKY_SLOPE: f64 = 0.2;

#[inline]
pub fn leaky_relu(v: f64) -> f64 {
    if v >= 0.0 {
        v
    } else {
        LEAKY_SLOPE * v
    }
}

#[inline]
pub fn leaky_relu_grad(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Intermediate values of one MLP forward pass, kept for back-propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureActivation {
    /// W1·x + b1.
    pub pre: Vec<f64>,
    /// φ(pre).
    pub hidden: Vec<f64>,
    /// f = W2·hidden + b2.
    pub out: Vec<f64>,
}

pub(crate) fn feature_forward(params: &ParameterSet, x: &[f64]) -> FeatureActivation {
    let mut pre = params.b1.clone();
    let mut tmp = vec![0.0; params.w1.rows()];
    params.w1.matvec(x, &mut tmp);
    pre.iter_mut().zip(&tmp).for_each(|(p, t)| *p += t);
    let hidden: Vec<f64> = pre.iter().map(|&v| leaky_relu(v)).collect();
    let mut out = vec![0.0; params.w2.rows()];
    params.w2.matvec(&hidden, &mut out);
    out.iter_mut().zip(&params.b2).for_each(|(o, b)| *o += b);
    FeatureActivation { pre, hidden, out }
}

/// Feature representation `f = W2·φ(W1·x + b1) + b2`, φ = leaky ReLU (slope 0.2).
pub fn encode_feature(params: &ParameterSet, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != params.w1.cols() {
        return Err(Error::Shape(format!(
            "feature vector has length {}, encoder expects {}",
            x.len(),
            params.w1.cols()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite feature value".into()));
    }
    Ok(feature_forward(params, x).out)
}

/// Gradient accumulators for the MLP tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl MlpGrads {
    pub fn zeros(params: &ParameterSet) -> Self {
        Self {
            w1: Matrix::zeros(params.w1.rows(), params.w1.cols()),
            b1: vec![0.0; params.b1.len()],
            w2: Matrix::zeros(params.w2.rows(), params.w2.cols()),
            b2: vec![0.0; params.b2.len()],
        }
    }
}

/// Accumulates ∂/∂(W1, b1, W2, b2) given `d_out = ∂L/∂f`, and returns ∂L/∂x.
pub(crate) fn feature_backward(
    params: &ParameterSet,
    x: &[f64],
    act: &FeatureActivation,
    d_out: &[f64],
    grads: &mut MlpGrads,
) -> Vec<f64> {
    grads.b2.iter_mut().zip(d_out).for_each(|(g, d)| *g += d);
    grads.w2.add_outer(1.0, d_out, &act.hidden);
    let mut d_hidden = vec![0.0; act.hidden.len()];
    params.w2.matvec_t_add(d_out, &mut d_hidden);
    let d_pre: Vec<f64> = d_hidden
        .iter()
        .zip(&act.pre)
        .map(|(d, &p)| d * leaky_relu_grad(p))
        .collect();
    grads.b1.iter_mut().zip(&d_pre).for_each(|(g, d)| *g += d);
    grads.w1.add_outer(1.0, &d_pre, x);
    let mut d_x = vec![0.0; x.len()];
    params.w1.matvec_t_add(&d_pre, &mut d_x);
    d_x
}
