use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ModelParams,
    pub v: ModelParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update; advances `state.t`.
pub fn adam_step(params: &mut ModelParams, grads: &ModelParams, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    let shapes = params.shapes();
    if grads.shapes() != shapes || state.m.shapes() != shapes || state.v.shapes() != shapes {
        return Err(Error::invalid("parameters, gradients and optimizer state disagree"));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let moments = state.m.iter_mut().zip(state.v.iter_mut());
    for (((_, p), (_, g)), ((_, m), (_, v))) in params.iter_mut().zip(grads.iter()).zip(moments) {
        let p = p.data_mut();
        let (m, v) = (m.data_mut(), v.data_mut());
        for i in 0..p.len() {
            let gi = g.data()[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            let mhat = m[i] / c1;
            let vhat = v[i] / c2;
            p[i] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Tensor;

    fn params(vals: &[(&str, Vec<f64>)]) -> ModelParams {
        let mut p = ModelParams::new();
        for (n, v) in vals {
            p.insert(*n, Tensor::new(vec![v.len()], v.clone()).unwrap());
        }
        p
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = params(&[("a", vec![1.0, -2.0])]);
        let before = p.clone();
        let mut st = AdamState::new(&p);
        let zero = p.zeros_like();
        adam_step(&mut p, &zero, &mut st, &AdamConfig::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.t, 1);
        assert_eq!(st.m, before.zeros_like());
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        let cfg = AdamConfig::default();
        let mut p = params(&[("a", vec![0.0, 0.0, 0.0]), ("b", vec![5.0])]);
        let g = params(&[("a", vec![0.3, -7.0, 0.0]), ("b", vec![2.0])]);
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        // At t = 1 the bias-corrected moments are g and g^2.
        let want = |g: f64| -cfg.learning_rate * g / (g.abs() + cfg.eps);
        let a = p.get("a").unwrap().data();
        assert!((a[0] - want(0.3)).abs() < 1e-15);
        assert!((a[1] - want(-7.0)).abs() < 1e-15);
        assert_eq!(a[2], 0.0);
        assert!((p.get("b").unwrap().data()[0] - (5.0 + want(2.0))).abs() < 1e-15);
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let mut p = params(&[("a", vec![0.0])]);
        let mut st = AdamState::new(&p);
        let g = params(&[("b", vec![0.0])]);
        assert!(adam_step(&mut p, &g, &mut st, &AdamConfig::default()).is_err());
    }
}
