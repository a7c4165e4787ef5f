use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::params::Init;
use super::tape::{Tape, Var};
use super::{bind_params, param, ModelParams, Tensor};
use crate::error::{Error, Result};

/// Two-convolution baseline: conv5x5, pool, conv3x3, pool, dense, head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    /// 1 for the normalized grid, 3 for its Viridis rendering.
    pub in_channels: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub conv1_channels: usize,
    pub conv2_channels: usize,
    pub hidden: usize,
    pub n_classes: usize,
    pub leaky_slope: f64,
}

impl CnnConfig {
    pub fn new(n_classes: usize) -> Self {
        Self {
            in_channels: 1,
            grid_rows: 64,
            grid_cols: 144,
            conv1_channels: 16,
            conv2_channels: 32,
            hidden: 128,
            n_classes,
            leaky_slope: 0.01,
        }
    }

    /// Spatial size after the second pooling stage.
    pub fn feature_dims(&self) -> (usize, usize) {
        let stage = |n: usize| (n.saturating_sub(4) / 2).saturating_sub(2) / 2;
        (stage(self.grid_rows), stage(self.grid_cols))
    }

    pub fn flat_len(&self) -> usize {
        let (h, w) = self.feature_dims();
        self.conv2_channels * h * w
    }

    pub fn validate(&self) -> Result<()> {
        if ![1, 3].contains(&self.in_channels) {
            return Err(Error::invalid("CNN input must have 1 or 3 channels"));
        }
        let (h, w) = self.feature_dims();
        if h == 0 || w == 0 {
            return Err(Error::invalid(format!(
                "{}x{} grid is too small for the convolution stack",
                self.grid_rows, self.grid_cols
            )));
        }
        if self.conv1_channels == 0 || self.conv2_channels == 0 || self.hidden == 0 || self.n_classes < 2 {
            return Err(Error::invalid("CNN widths must be positive with at least 2 classes"));
        }
        if !(self.leaky_slope.is_finite() && self.leaky_slope >= 0.0) {
            return Err(Error::invalid("leaky slope must be finite and nonnegative"));
        }
        Ok(())
    }

    pub(crate) fn param_specs(&self) -> Vec<(String, Vec<usize>, Init)> {
        let (c, c1, c2) = (self.in_channels, self.conv1_channels, self.conv2_channels);
        let xavier = |i, o| Init::Xavier { fan_in: i, fan_out: o };
        vec![
            ("conv1.w".into(), vec![c1, c, 5, 5], xavier(c * 25, c1 * 25)),
            ("conv1.b".into(), vec![c1], Init::Zeros),
            ("conv2.w".into(), vec![c2, c1, 3, 3], xavier(c1 * 9, c2 * 9)),
            ("conv2.b".into(), vec![c2], Init::Zeros),
            ("fc1.w".into(), vec![self.flat_len(), self.hidden], xavier(self.flat_len(), self.hidden)),
            ("fc1.b".into(), vec![self.hidden], Init::Zeros),
            ("head.w".into(), vec![self.hidden, self.n_classes], xavier(self.hidden, self.n_classes)),
            ("head.b".into(), vec![self.n_classes], Init::Zeros),
        ]
    }
}

pub(crate) fn cnn_graph(tape: &mut Tape, input: &Tensor, vars: &BTreeMap<String, Var>, cfg: &CnnConfig) -> Result<Var> {
    let want = [cfg.in_channels, cfg.grid_rows, cfg.grid_cols];
    let x = match input.shape() {
        s if s == want => tape.leaf(input.clone()),
        &[r, c] if cfg.in_channels == 1 && [1, r, c] == want => tape.leaf(input.clone().reshaped(want.to_vec())?),
        s => return Err(Error::invalid(format!("CNN input {s:?}, expected {want:?}"))),
    };
    let slope = cfg.leaky_slope;
    let h = tape.conv2d(x, param(vars, "conv1.w")?, param(vars, "conv1.b")?)?;
    let h = tape.leaky_relu(h, slope);
    let h = tape.max_pool2(h)?;
    tape.check(|| "convolution layer 0".into())?;
    let h = tape.conv2d(h, param(vars, "conv2.w")?, param(vars, "conv2.b")?)?;
    let h = tape.leaky_relu(h, slope);
    let h = tape.max_pool2(h)?;
    tape.check(|| "convolution layer 1".into())?;
    let flat = tape.reshape(h, vec![1, cfg.flat_len()])?;
    let h = tape.matmul(flat, param(vars, "fc1.w")?)?;
    let h = tape.add_bias(h, param(vars, "fc1.b")?)?;
    let h = tape.leaky_relu(h, slope);
    let logits = tape.matmul(h, param(vars, "head.w")?)?;
    let logits = tape.add_bias(logits, param(vars, "head.b")?)?;
    tape.check(|| "dense layers".into())?;
    Ok(logits)
}

pub fn baseline_cnn_forward(input: &Tensor, params: &ModelParams, cfg: &CnnConfig) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let vars = bind_params(&mut tape, params);
    let logits = cnn_graph(&mut tape, input, &vars, cfg)?;
    Ok(tape.value(logits).data().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry() {
        let cfg = CnnConfig::new(2);
        cfg.validate().unwrap();
        // 64x144 -> conv5 60x140 -> pool 30x70 -> conv3 28x68 -> pool 14x34.
        assert_eq!(cfg.feature_dims(), (14, 34));
        assert_eq!(cfg.flat_len(), 32 * 14 * 34);
        assert!(CnnConfig { grid_rows: 8, ..cfg.clone() }.validate().is_err());
        assert!(CnnConfig { in_channels: 2, ..cfg }.validate().is_err());
    }

    #[test]
    fn zero_input_zero_bias_gives_zero_logits() {
        let cfg = CnnConfig::new(4);
        let params = ModelParams::initialize(&cfg.param_specs(), 1).unwrap();
        let logits = baseline_cnn_forward(&Tensor::zeros(vec![64, 144]), &params, &cfg).unwrap();
        assert_eq!(logits, vec![0.0; 4]);
        let three = CnnConfig { in_channels: 3, ..cfg };
        let params = ModelParams::initialize(&three.param_specs(), 1).unwrap();
        assert!(baseline_cnn_forward(&Tensor::zeros(vec![64, 144]), &params, &three).is_err());
        let logits = baseline_cnn_forward(&Tensor::filled(vec![3, 64, 144], 0.5), &params, &three).unwrap();
        assert!(logits.iter().any(|&v| v != 0.0));
    }
}
