use crate::tensor::{dot, norm};

/// Added to vector norms before dividing, so zero vectors give cosine 0.
pub const NORM_EPS: f64 = 1e-12;

/// U-I density ratio `exp(z_i·z_u / τ)`.
///
/// Saturates to `+inf` for large scores; the losses never call this and work
/// with log-scores instead.
pub fn density_g(z_u: &[f64], z_i: &[f64], tau: f64) -> f64 {
    (dot(z_i, z_u) / tau).exp()
}

/// ε-guarded cosine similarity.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / ((norm(a) + NORM_EPS) * (norm(b) + NORM_EPS))
}

/// R-E density ratio `exp(cos(z_i, f_j) / τ)`, bounded in `[e^{-1/τ}, e^{1/τ}]`.
pub fn density_h(z_i: &[f64], f_j: &[f64], tau: f64) -> f64 {
    (cosine(z_i, f_j) / tau).exp()
}

/// Gradient of the ε-guarded cosine with respect to `a`, scaled by `scale`
/// and added into `out`.
pub(crate) fn cosine_grad_add(a: &[f64], b: &[f64], scale: f64, out: &mut [f64]) {
    let na = norm(a);
    let nb = norm(b);
    let da = na + NORM_EPS;
    let db = nb + NORM_EPS;
    let ab = dot(a, b);
    let c1 = scale / (da * db);
    let c2 = if na > 0.0 {
        scale * ab / (da * da * db * na)
    } else {
        0.0
    };
    for ((o, &ai), &bi) in out.iter_mut().zip(a).zip(b) {
        *o += c1 * bi - c2 * ai;
    }
}
