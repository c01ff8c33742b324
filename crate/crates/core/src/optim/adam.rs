use super::TrainConfig;
use crate::scene::{FieldGrad, VoxelField};
use crate::{Error, Result};

/// Moment accumulators for every voxel parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    m_density: Vec<f64>,
    v_density: Vec<f64>,
    m_color: Vec<f64>,
    v_color: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(field: &VoxelField) -> Self {
        AdamState {
            m_density: vec![0.0; field.len()],
            v_density: vec![0.0; field.len()],
            m_color: vec![0.0; 3 * field.len()],
            v_color: vec![0.0; 3 * field.len()],
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    b1: f64,
    b2: f64,
    c1: f64,
    c2: f64,
    eps: f64,
) {
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// One bias-corrected Adam update followed by the field clamps. Densities use
/// `density_learning_rate`, colors `learning_rate`.
pub fn adam_step(
    field: &mut VoxelField,
    grads: &FieldGrad,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    if grads.density.len() != field.len()
        || grads.color.len() != 3 * field.len()
        || state.m_density.len() != field.len()
    {
        return Err(Error::InvalidConfig(
            "gradient shape does not match the field".into(),
        ));
    }
    if !grads.is_finite() {
        return Err(Error::Divergence("non-finite gradient".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    update(
        field.density_mut(),
        &grads.density,
        &mut state.m_density,
        &mut state.v_density,
        cfg.density_learning_rate,
        b1,
        b2,
        c1,
        c2,
        cfg.adam_eps,
    );
    update(
        field.colors_mut(),
        &grads.color,
        &mut state.m_color,
        &mut state.v_color,
        cfg.learning_rate,
        b1,
        b2,
        c1,
        c2,
        cfg.adam_eps,
    );
    field.clamp();
    Ok(())
}
