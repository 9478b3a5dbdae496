//! Bias-corrected Adam with lazy updates for embedding rows.

use crate::model::ParameterSet;
use crate::objective::Gradients;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    /// First moments, one buffer per tensor in ParameterSet order.
    pub m: [Vec<f64>; 5],
    /// Second moments.
    pub v: [Vec<f64>; 5],
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &ParameterSet) -> Self {
        let zeros = |k: usize| vec![0.0; params.tensors()[k].len()];
        Self {
            m: std::array::from_fn(zeros),
            v: std::array::from_fn(zeros),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

struct Moments {
    beta1: f64,
    beta2: f64,
    /// lr · √(1-β2^t) / (1-β1^t)
    step: f64,
    /// ε · √(1-β2^t), so the update equals lr·m̂/(√v̂ + ε) exactly.
    eps_hat: f64,
}

impl Moments {
    #[inline]
    fn apply(&self, x: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]) {
        for (((xi, &gi), mi), vi) in x.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
            *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
            *xi -= self.step * *mi / (vi.sqrt() + self.eps_hat);
        }
    }
}

/// One Adam step. Embedding rows outside `grads.touched` keep their values
/// and moments; the MLP tensors update densely. `t` advances once per call.
pub fn adam_step(params: &mut ParameterSet, grads: &Gradients, state: &mut AdamState, lr: f64) -> Result<()> {
    if !(lr > 0.0) {
        return Err(Error::Config(format!("learning rate must be > 0, got {lr}")));
    }
    let g = grads.tensors();
    for (k, p) in params.tensors().iter().enumerate() {
        if p.len() != g[k].len() || p.len() != state.m[k].len() {
            return Err(Error::Shape(format!(
                "tensor {k}: params {}, grads {}, state {}",
                p.len(),
                g[k].len(),
                state.m[k].len()
            )));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let moments = Moments {
        beta1: state.beta1,
        beta2: state.beta2,
        step: lr * bc2.sqrt() / bc1,
        eps_hat: state.eps * bc2.sqrt(),
    };

    let d = params.embed.cols();
    let [m_embed, m_w1, m_b1, m_w2, m_b2] = &mut state.m;
    let [v_embed, v_w1, v_b1, v_w2, v_b2] = &mut state.v;
    for &r in &grads.touched {
        let span = r * d..(r + 1) * d;
        moments.apply(
            params.embed.row_mut(r),
            grads.embed.row(r),
            &mut m_embed[span.clone()],
            &mut v_embed[span],
        );
    }
    moments.apply(params.w1.as_mut_slice(), g[1], m_w1, v_w1);
    moments.apply(&mut params.b1, g[2], m_b1, v_b1);
    moments.apply(params.w2.as_mut_slice(), g[3], m_w2, v_w2);
    moments.apply(&mut params.b2, g[4], m_b2, v_b2);
    Ok(())
}
