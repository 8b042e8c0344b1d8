use serde::{Deserialize, Serialize};

use super::mlp::MlpParams;

/// Running average of squared gradients, one entry per network parameter in
/// [`MlpParams::params`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsPropState {
    pub rho: f64,
    pub eps: f64,
    pub sq_avg: Vec<f64>,
}

impl RmsPropState {
    pub fn new(n_params: usize, rho: f64, eps: f64) -> Self {
        Self {
            rho,
            eps,
            sq_avg: vec![0.0; n_params],
        }
    }
}

/// One scalar RMSProp update; returns `(w', v')`.
pub fn rmsprop_update(w: f64, v: f64, g: f64, lr: f64, rho: f64, eps: f64) -> (f64, f64) {
    let v = rho * v + (1.0 - rho) * g * g;
    (w - lr * g / (v.sqrt() + eps), v)
}

/// Applies RMSProp to every parameter, returning fresh values.
pub fn apply(
    params: &MlpParams,
    state: &RmsPropState,
    grad: &MlpParams,
    lr: f64,
) -> (MlpParams, RmsPropState) {
    let mut next = params.clone();
    let mut next_state = state.clone();
    for ((w, v), g) in next
        .params_mut()
        .zip(next_state.sq_avg.iter_mut())
        .zip(grad.params())
    {
        (*w, *v) = rmsprop_update(*w, *v, *g, lr, state.rho, state.eps);
    }
    (next, next_state)
}
