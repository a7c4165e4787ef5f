//! Classifiers over normalized time-frequency grids: an encoder-only vision
//! transformer and a small convolutional baseline, on a tape autograd.

mod checkpoint;
mod cnn;
mod gemm;
mod params;
mod tape;
mod tensor;
mod vit;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CheckpointMeta};
pub use cnn::{baseline_cnn_forward, CnnConfig};
pub use params::{Init, ModelParams};
pub use tape::{softmax_cross_entropy, Gradients, Tape, Var};
pub use tensor::Tensor;
pub use vit::{multi_head_self_attention, patchify, unpatchify, vit_forward, ViTConfig, LAYER_NORM_EPS};

use crate::error::{Error, Result};

/// Registers every parameter on the tape, borrowed.
pub fn bind_params<'p>(tape: &mut Tape<'p>, params: &'p ModelParams) -> BTreeMap<String, Var> {
    params.iter().map(|(name, t)| (name.to_string(), tape.param(t))).collect()
}

pub(crate) fn param(vars: &BTreeMap<String, Var>, name: &str) -> Result<Var> {
    vars.get(name)
        .copied()
        .ok_or_else(|| Error::invalid(format!("missing parameter {name:?}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Vit,
    BaselineCnn,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Vit => "vit",
            ModelKind::BaselineCnn => "baseline-cnn",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [ModelKind::Vit, ModelKind::BaselineCnn]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    Vit(ViTConfig),
    BaselineCnn(CnnConfig),
}

impl ModelConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Vit(_) => ModelKind::Vit,
            ModelConfig::BaselineCnn(_) => ModelKind::BaselineCnn,
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            ModelConfig::Vit(c) => c.n_classes,
            ModelConfig::BaselineCnn(c) => c.n_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::Vit(c) => c.validate(),
            ModelConfig::BaselineCnn(c) => c.validate(),
        }
    }

    pub fn param_specs(&self) -> Vec<(String, Vec<usize>, Init)> {
        match self {
            ModelConfig::Vit(c) => c.param_specs(),
            ModelConfig::BaselineCnn(c) => c.param_specs(),
        }
    }

    fn graph(&self, tape: &mut Tape, input: &Tensor, vars: &BTreeMap<String, Var>) -> Result<Var> {
        match self {
            ModelConfig::Vit(c) => vit::vit_graph(tape, input, vars, c),
            ModelConfig::BaselineCnn(c) => cnn::cnn_graph(tape, input, vars, c),
        }
    }
}

/// What training and evaluation need from a model.
pub trait Classifier: Sync {
    fn n_classes(&self) -> usize;
    fn params(&self) -> &ModelParams;
    fn params_mut(&mut self) -> &mut ModelParams;
    fn logits(&self, input: &Tensor) -> Result<Vec<f64>>;
    /// Cross-entropy loss for one example and its gradient for every parameter.
    fn loss_and_grad(&self, input: &Tensor, class: usize) -> Result<(f64, ModelParams)>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    params: ModelParams,
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = ModelParams::initialize(&config.param_specs(), seed)?;
        Ok(Self { config, params })
    }

    pub fn from_parts(config: ModelConfig, params: ModelParams) -> Result<Self> {
        config.validate()?;
        let want: BTreeMap<String, Vec<usize>> = config.param_specs().into_iter().map(|(n, s, _)| (n, s)).collect();
        if want != params.shapes() {
            return Err(Error::invalid("parameters do not match the model configuration"));
        }
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn into_params(self) -> ModelParams {
        self.params
    }
}

impl Classifier for Model {
    fn n_classes(&self) -> usize {
        self.config.n_classes()
    }

    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ModelParams {
        &mut self.params
    }

    fn logits(&self, input: &Tensor) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let vars = bind_params(&mut tape, &self.params);
        let out = self.config.graph(&mut tape, input, &vars)?;
        Ok(tape.value(out).data().to_vec())
    }

    fn loss_and_grad(&self, input: &Tensor, class: usize) -> Result<(f64, ModelParams)> {
        let mut tape = Tape::new();
        let vars = bind_params(&mut tape, &self.params);
        let logits = self.config.graph(&mut tape, input, &vars)?;
        let n = tape.value(logits).len();
        let flat = tape.reshape(logits, vec![n])?;
        let loss = tape.cross_entropy(flat, class)?;
        let loss_value = tape.value(loss).data()[0];
        if !loss_value.is_finite() {
            return Err(Error::NumericFailure { context: "loss".into() });
        }
        let mut grads = tape.backward(loss)?;
        let mut out = ModelParams::new();
        for (name, t) in self.params.iter() {
            let g = match grads.take(vars[name]) {
                Some(g) => Tensor::new(t.shape().to_vec(), g)?,
                None => Tensor::zeros(t.shape().to_vec()),
            };
            out.insert(name, g);
        }
        Ok((loss_value, out))
    }
}
