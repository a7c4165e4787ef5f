use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Representation;
use crate::data::Task;
use crate::error::{Error, Result};
use crate::models::{CnnConfig, ModelConfig, ModelKind, ViTConfig};
use crate::train::TrainConfig;

fn default_folds() -> usize {
    10
}

/// One cell of the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus_dir: PathBuf,
    pub representation: Representation,
    pub model: ModelKind,
    pub task: Task,
    #[serde(default)]
    pub train: TrainConfig,
    pub output_dir: PathBuf,
    /// Drives folds, initialization and shuffling; replaces `train.seed`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Architecture override; defaults to the desk-scale model for `model`.
    #[serde(default)]
    pub model_config: Option<ModelConfig>,
    /// Directory written by the `features` step; extraction runs inline when absent.
    #[serde(default)]
    pub features_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus_dir.as_os_str().is_empty() || self.output_dir.as_os_str().is_empty() {
            return Err(Error::invalid("corpus_dir and output_dir must be set"));
        }
        if self.folds < 3 {
            return Err(Error::invalid("at least 3 folds are needed"));
        }
        self.effective_train().validate()?;
        let m = self.model_config()?;
        m.validate()
    }

    /// Training settings with the run seed applied.
    pub fn effective_train(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    /// The architecture to train, checked against the task's class count.
    pub fn model_config(&self) -> Result<ModelConfig> {
        let n = self.task.n_classes();
        let cfg = match &self.model_config {
            Some(c) => c.clone(),
            None => match self.model {
                ModelKind::Vit => ModelConfig::Vit(ViTConfig::tiny(n)),
                ModelKind::BaselineCnn => ModelConfig::BaselineCnn(CnnConfig::new(n)),
            },
        };
        if cfg.kind() != self.model {
            return Err(Error::invalid(format!(
                "model is {} but model_config describes {}",
                self.model,
                cfg.kind()
            )));
        }
        if cfg.n_classes() != n {
            return Err(Error::invalid(format!("{} needs {n} classes, model has {}", self.task, cfg.n_classes())));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "corpus_dir": "data", "representation": "cochleogram", "model": "vit",
        "task": "wheeze-binary", "output_dir": "run"
    }"#;

    #[test]
    fn minimal_json_gets_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.folds, 10);
        assert_eq!(c.train, TrainConfig::default());
        assert_eq!(c.model_config().unwrap(), ModelConfig::Vit(ViTConfig::tiny(2)));
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_json(&MINIMAL.replace("vit", "resnet")).is_err());
        assert!(RunConfig::from_json(&MINIMAL.replace("\"run\"", "\"run\", \"bogus\": 1")).is_err());
        let mut c = RunConfig::from_json(MINIMAL).unwrap();
        c.model_config = Some(ModelConfig::Vit(ViTConfig::tiny(4)));
        assert!(c.validate().is_err());
        c.model_config = None;
        c.train.patience = 40;
        assert!(c.validate().is_err());
    }
}
