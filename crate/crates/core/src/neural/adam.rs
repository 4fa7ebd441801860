use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators, one buffer per parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, block_sizes: &[usize]) -> Self {
        AdamState {
            config,
            step: 0,
            m: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

/// One named parameter block and its gradient.
pub struct ParamBlock<'a> {
    pub name: &'a str,
    pub values: &'a mut [f64],
    pub grads: &'a [f64],
}

/// One bias-corrected Adam step over every block. Nothing is modified if any
/// gradient is non-finite or a shape disagrees with the state.
pub fn adam_update(blocks: &mut [ParamBlock<'_>], state: &mut AdamState) -> Result<()> {
    if blocks.len() != state.m.len() {
        return Err(Error::invalid(format!("{} parameter blocks, optimizer tracks {}", blocks.len(), state.m.len())));
    }
    for (b, m) in blocks.iter().zip(&state.m) {
        if b.values.len() != b.grads.len() || b.values.len() != m.len() {
            return Err(Error::invalid(format!("shape mismatch in parameter block {}", b.name)));
        }
        if b.grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient(b.name.to_string()));
        }
    }
    let AdamConfig { lr, beta1, beta2, epsilon } = state.config;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for ((b, m), v) in blocks.iter_mut().zip(&mut state.m).zip(&mut state.v) {
        for (((p, &g), mi), vi) in b.values.iter_mut().zip(b.grads).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mi = beta1 * *mi + (1.0 - beta1) * g;
            *vi = beta2 * *vi + (1.0 - beta2) * g * g;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}
