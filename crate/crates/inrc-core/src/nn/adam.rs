//! Adam optimizer with bias correction.

use super::{MlpParams, Scalar};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState<F = f32> {
    pub first_moment: MlpParams<F>,
    pub second_moment: MlpParams<F>,
    pub step_count: u64,
    pub hyper: AdamParams,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(arch: &super::MlpArch, hyper: AdamParams) -> Self {
        Self {
            first_moment: MlpParams::zeros(arch),
            second_moment: MlpParams::zeros(arch),
            step_count: 0,
            hyper,
        }
    }
}

/// One Adam update in place. Refuses non-finite gradients so a divergent
/// training run can be reported with its iteration index.
pub fn adam_step<F: Scalar>(
    state: &mut AdamState<F>,
    params: &mut MlpParams<F>,
    grads: &MlpParams<F>,
) -> Result<()> {
    if !grads.all_finite() {
        return Err(Error::Diverged {
            iteration: state.step_count + 1,
            detail: "non-finite gradient".into(),
        });
    }
    state.step_count += 1;
    let t = state.step_count;
    let h = state.hyper;
    let b1 = F::from_f64(h.beta1);
    let b2 = F::from_f64(h.beta2);
    let one_m_b1 = F::from_f64(1.0 - h.beta1);
    let one_m_b2 = F::from_f64(1.0 - h.beta2);
    // Bias-corrected step size, folded into a single scalar per step.
    let corr1 = 1.0 - h.beta1.powi(t as i32);
    let corr2 = 1.0 - h.beta2.powi(t as i32);
    let step = F::from_f64(h.lr / corr1);
    let inv_sqrt_corr2 = F::from_f64(1.0 / corr2.sqrt());
    let eps = F::from_f64(h.epsilon);

    for (li, layer) in params.layers.iter_mut().enumerate() {
        let g = &grads.layers[li];
        let m = &mut state.first_moment.layers[li];
        let v = &mut state.second_moment.layers[li];
        for ((p, &gv), (mv, vv)) in layer
            .weights
            .iter_mut()
            .chain(layer.biases.iter_mut())
            .zip(g.weights.iter().chain(g.biases.iter()))
            .zip(
                m.weights
                    .iter_mut()
                    .chain(m.biases.iter_mut())
                    .zip(v.weights.iter_mut().chain(v.biases.iter_mut())),
            )
        {
            *mv = b1 * *mv + one_m_b1 * gv;
            *vv = b2 * *vv + one_m_b2 * (gv * gv);
            let denom = (*vv).sqrt() * inv_sqrt_corr2 + eps;
            *p = *p - step * (*mv / denom);
        }
    }
    Ok(())
}
