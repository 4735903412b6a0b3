use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Component, ModelParameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    /// Learning-rate multiplier per layer of distance from the output.
    pub layer_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Mixed into the shuffle stream name; lets sweeps vary order alone.
    pub shuffle_seed: u64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.0005,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
            layer_decay: 0.7,
            epochs: 10,
            batch_size: 1,
            shuffle_seed: 0,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        for (field, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(field, "must lie in [0, 1)"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::config("epsilon", "must be positive"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::config("weight_decay", "must be non-negative"));
        }
        if !(self.layer_decay > 0.0 && self.layer_decay <= 1.0) {
            return Err(Error::config("layer_decay", "must lie in (0, 1]"));
        }
        if self.batch_size != 1 {
            return Err(Error::config("batch_size", "only per-instance updates (1) are supported"));
        }
        Ok(())
    }
}

/// AdamW moment accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub step_count: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimState {
    pub fn new(num_params: usize) -> Self {
        Self { step_count: 0, m: vec![0.0; num_params], v: vec![0.0; num_params] }
    }
}

/// Learning-rate multiplier per component, indexed by `Component as usize`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentScales(pub [f64; 6]);

impl ComponentScales {
    pub fn uniform() -> Self {
        Self([1.0; 6])
    }

    pub fn get(&self, c: Component) -> f64 {
        self.0[c as usize]
    }
}

/// `layer_decay ^ depth` per component: head 1, GAT `decay`, embeddings `decay²`.
pub fn layer_lr_scales(layer_decay: f64) -> ComponentScales {
    let mut scales = [0.0; 6];
    for c in Component::ALL {
        scales[c as usize] = layer_decay.powi(c.depth() as i32);
    }
    ComponentScales(scales)
}

/// One AdamW update of a parameter slice at (already incremented) step `t`.
#[allow(clippy::too_many_arguments)]
pub fn adamw_update(
    theta: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    grad: &[f64],
    t: u64,
    lr: f64,
    config: &OptimConfig,
) {
    let (b1, b2) = (config.beta1, config.beta2);
    let bc1 = 1.0 - b1.powf(t as f64);
    let bc2 = 1.0 - b2.powf(t as f64);
    let (eps, wd) = (config.epsilon, config.weight_decay);
    for (((p, mi), vi), &gi) in theta.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(grad) {
        *mi = b1 * *mi + (1.0 - b1) * gi;
        *vi = b2 * *vi + (1.0 - b2) * gi * gi;
        let m_hat = *mi / bc1;
        let v_hat = *vi / bc2;
        *p -= lr * (m_hat / (v_hat.sqrt() + eps) + wd * *p);
    }
}

/// Applies one AdamW step to every component. The step is rejected, with
/// parameters and state untouched, if any gradient entry is non-finite.
pub fn adamw_step(
    params: &mut ModelParameters,
    state: &mut OptimState,
    grad: &[f64],
    config: &OptimConfig,
    scales: &ComponentScales,
) -> Result<()> {
    let n = params.len();
    if grad.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(Error::LengthMismatch { what: "gradient/state vs parameters", left: grad.len(), right: n });
    }
    let layout = params.layout().clone();
    for c in Component::ALL {
        if grad[layout.range(c)].iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { component: c.name() });
        }
    }
    state.step_count += 1;
    let t = state.step_count;
    let theta = params.flat_mut();
    for c in Component::ALL {
        let r = layout.range(c);
        adamw_update(
            &mut theta[r.clone()],
            &mut state.m[r.clone()],
            &mut state.v[r.clone()],
            &grad[r],
            t,
            config.learning_rate * scales.get(c),
            config,
        );
    }
    Ok(())
}

/// Embedding rows whose AdamW moments may be non-zero.
///
/// A row that has never received a gradient keeps `m = v = 0`, so its AdamW
/// update reduces to the decay term. [`adamw_step_rows`] applies exactly that
/// arithmetic to inactive rows and skips their moment buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct RowActivity {
    active: Vec<bool>,
}

impl RowActivity {
    pub fn new(rows: usize) -> Self {
        Self { active: vec![false; rows] }
    }

    pub fn num_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// Same result as [`adamw_step`], bit for bit, given that `grad` is zero
/// outside the non-embedding components and the embedding rows in `touched`.
pub fn adamw_step_rows(
    params: &mut ModelParameters,
    state: &mut OptimState,
    grad: &[f64],
    config: &OptimConfig,
    scales: &ComponentScales,
    activity: &mut RowActivity,
    touched: &[usize],
) -> Result<()> {
    let n = params.len();
    if grad.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(Error::LengthMismatch { what: "gradient/state vs parameters", left: grad.len(), right: n });
    }
    let layout = params.layout().clone();
    let d = layout.embed_dim;
    let emb = layout.range(Component::Embeddings);
    for c in Component::ALL.into_iter().filter(|&c| c != Component::Embeddings) {
        if grad[layout.range(c)].iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { component: c.name() });
        }
    }
    for &row in touched {
        let r = emb.start + row * d..emb.start + (row + 1) * d;
        if grad[r].iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { component: Component::Embeddings.name() });
        }
    }
    for &row in touched {
        activity.active[row] = true;
    }
    state.step_count += 1;
    let t = state.step_count;
    let theta = params.flat_mut();
    for c in Component::ALL.into_iter().filter(|&c| c != Component::Embeddings) {
        let r = layout.range(c);
        adamw_update(
            &mut theta[r.clone()],
            &mut state.m[r.clone()],
            &mut state.v[r.clone()],
            &grad[r],
            t,
            config.learning_rate * scales.get(c),
            config,
        );
    }
    let lr = config.learning_rate * scales.get(Component::Embeddings);
    let wd = config.weight_decay;
    for (row, &active) in activity.active.iter().enumerate() {
        let r = emb.start + row * d..emb.start + (row + 1) * d;
        if active {
            adamw_update(
                &mut theta[r.clone()],
                &mut state.m[r.clone()],
                &mut state.v[r.clone()],
                &grad[r],
                t,
                lr,
                config,
            );
        } else {
            // m_hat / (sqrt(v_hat) + eps) is exactly 0 here.
            for p in &mut theta[r] {
                *p -= lr * (0.0 + wd * *p);
            }
        }
    }
    Ok(())
}
