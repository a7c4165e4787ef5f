use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::{adam_step, AdamConfig, AdamState};
use super::ConfusionMatrix;
use crate::error::{Error, Result};
use crate::models::{Classifier, ModelParams, Tensor};

/// One labeled model input.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Tensor,
    pub label: usize,
    pub patient_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            epochs: 30,
            batch_size: 16,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            patience: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::invalid("epochs, batch size and patience must be positive"));
        }
        if self.patience > self.epochs {
            return Err(Error::invalid("patience cannot exceed the epoch count"));
        }
        let positive = [self.learning_rate, self.eps].iter().all(|v| v.is_finite() && *v > 0.0);
        let betas = [self.beta1, self.beta2].iter().all(|b| (0.0..1.0).contains(b));
        if !positive || !betas {
            return Err(Error::invalid("learning rate and eps must be positive, betas in [0, 1)"));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub epochs_ran: usize,
}

/// Mean loss and mean gradient over `batch`, reduced in example order so the
/// result does not depend on the worker count.
pub fn batch_gradient<C: Classifier>(model: &C, batch: &[&Example]) -> Result<(f64, ModelParams)> {
    let mut sum = model.params().zeros_like();
    let mut loss = 0.0;
    let width = rayon::current_num_threads().max(1);
    for chunk in batch.chunks(width) {
        let parts: Vec<(f64, ModelParams)> = chunk
            .par_iter()
            .map(|ex| model.loss_and_grad(&ex.input, ex.label))
            .collect::<Result<_>>()?;
        for (l, g) in parts {
            loss += l;
            sum.add_scaled(&g, 1.0)?;
        }
    }
    let n = batch.len() as f64;
    let mut mean = sum.zeros_like();
    mean.add_scaled(&sum, 1.0 / n)?;
    Ok((loss / n, mean))
}

/// Mean cross-entropy over a set, in example order.
pub fn mean_loss<C: Classifier>(model: &C, set: &[Example]) -> Result<f64> {
    let losses: Vec<f64> = set
        .par_iter()
        .map(|ex| {
            let logits = model.logits(&ex.input)?;
            Ok(crate::models::softmax_cross_entropy(&logits, ex.label)?.0)
        })
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / set.len() as f64)
}

fn diverged(epoch: usize, e: Error) -> Error {
    if e.is_numeric() {
        Error::TrainingFailure {
            epoch,
            msg: e.to_string(),
        }
    } else {
        e
    }
}

/// Adam with a seeded per-epoch shuffle and early stopping on validation loss.
///
/// On return `model` holds the parameters of the best validation epoch (the
/// last epoch when `val` is empty).
pub fn train<C: Classifier>(model: &mut C, train: &[Example], val: &[Example], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let n_classes = model.n_classes();
    if let Some(bad) = train.iter().chain(val).find(|e| e.label >= n_classes) {
        return Err(Error::invalid(format!("label {} for a {n_classes}-class model", bad.label)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = AdamState::new(model.params());
    let adam = cfg.adam();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<&Example> = idx.iter().map(|&i| &train[i]).collect();
            let (loss, grads) = batch_gradient(model, &batch).map_err(|e| diverged(epoch, e))?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::TrainingFailure {
                    epoch,
                    msg: "non-finite loss or gradient".into(),
                });
            }
            total += loss * batch.len() as f64;
            adam_step(model.params_mut(), &grads, &mut state, &adam)?;
        }
        let train_loss = total / train.len() as f64;
        let val_loss = if val.is_empty() {
            None
        } else {
            let l = mean_loss(model, val).map_err(|e| diverged(epoch, e))?;
            if !l.is_finite() {
                return Err(Error::TrainingFailure {
                    epoch,
                    msg: "non-finite validation loss".into(),
                });
            }
            Some(l)
        };
        debug!("epoch {epoch}: train loss {train_loss:.5}, val loss {val_loss:?}");
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if let Some(l) = val_loss {
            if best.as_ref().is_none_or(|(b, _, _)| l < *b) {
                best = Some((l, epoch, model.params().clone()));
            } else if epoch - best.as_ref().map_or(0, |b| b.1) >= cfg.patience {
                info!("early stop after epoch {epoch}");
                break;
            }
        }
    }
    let epochs_ran = history.len();
    let best_epoch = match best {
        Some((_, e, params)) => {
            *model.params_mut() = params;
            e
        }
        None => epochs_ran,
    };
    Ok(TrainReport {
        history,
        best_epoch,
        epochs_ran,
    })
}

/// Index of the largest logit; ties go to the lower class.
pub fn predict(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

pub fn evaluate<C: Classifier>(model: &C, set: &[Example]) -> Result<ConfusionMatrix> {
    let preds: Vec<usize> = set
        .par_iter()
        .map(|ex| model.logits(&ex.input).map(|l| predict(&l)))
        .collect::<Result<_>>()?;
    let mut cm = ConfusionMatrix::new(model.n_classes());
    for (ex, p) in set.iter().zip(preds) {
        if ex.label >= model.n_classes() {
            return Err(Error::invalid(format!("label {} out of range", ex.label)));
        }
        cm.record(ex.label, p);
    }
    Ok(cm)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Two-class model with one weight `w`: logits `[0, w * x]`, where x is
    /// the first input value. Gradients are exact.
    #[derive(Clone)]
    pub struct Scalar {
        pub params: ModelParams,
    }

    impl Scalar {
        pub fn new(w: f64) -> Self {
            let mut params = ModelParams::new();
            params.insert("w", Tensor::new(vec![1], vec![w]).unwrap());
            Self { params }
        }
        fn w(&self) -> f64 {
            self.params.get("w").unwrap().data()[0]
        }
    }

    impl Classifier for Scalar {
        fn n_classes(&self) -> usize {
            2
        }
        fn params(&self) -> &ModelParams {
            &self.params
        }
        fn params_mut(&mut self) -> &mut ModelParams {
            &mut self.params
        }
        fn logits(&self, input: &Tensor) -> Result<Vec<f64>> {
            Ok(vec![0.0, self.w() * input.data()[0]])
        }
        fn loss_and_grad(&self, input: &Tensor, class: usize) -> Result<(f64, ModelParams)> {
            let x = input.data()[0];
            let (loss, g) = crate::models::softmax_cross_entropy(&self.logits(input)?, class)?;
            let mut grads = ModelParams::new();
            grads.insert("w", Tensor::new(vec![1], vec![g[1] * x]).unwrap());
            Ok((loss, grads))
        }
    }

    pub fn ex(x: f64, label: usize) -> Example {
        Example {
            input: Tensor::new(vec![1], vec![x]).unwrap(),
            label,
            patient_id: "p".into(),
        }
    }

    #[test]
    fn runs_all_epochs_when_validation_keeps_improving() {
        let mut m = Scalar::new(0.0);
        let set: Vec<Example> = (0..20).map(|i| ex(if i % 2 == 0 { 1.0 } else { -1.0 }, (i % 2 == 0) as usize)).collect();
        let r = train(&mut m, &set, &set, &TrainConfig::default()).unwrap();
        assert_eq!(r.epochs_ran, 30);
        assert_eq!(r.best_epoch, 30);
        assert!(m.w() > 0.0);
    }

    #[test]
    fn rising_validation_loss_stops_after_patience() {
        let mut m = Scalar::new(0.0);
        // Training pushes w up; validation wants w down.
        let tr = vec![ex(1.0, 1)];
        let val = vec![ex(1.0, 0)];
        let cfg = TrainConfig::default();
        let r = train(&mut m, &tr, &val, &cfg).unwrap();
        assert_eq!(r.epochs_ran, 11);
        assert_eq!(r.best_epoch, 1);
        let losses: Vec<f64> = r.history.iter().map(|h| h.val_loss.unwrap()).collect();
        assert!(losses.windows(2).all(|w| w[1] > w[0]));
        // Epoch-1 weights: one Adam step of about +lr from zero.
        assert!((m.w() - cfg.learning_rate).abs() < 1e-9);
    }

    #[test]
    fn deterministic_history() {
        let set: Vec<Example> = (0..37).map(|i| ex((i as f64 * 0.37).sin(), i % 2)).collect();
        let cfg = TrainConfig {
            epochs: 5,
            patience: 5,
            seed: 9,
            ..Default::default()
        };
        let run = || {
            let mut m = Scalar::new(0.1);
            (train(&mut m, &set, &set[..5], &cfg).unwrap(), m.w())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn divergence_is_a_training_failure() {
        let mut m = Scalar::new(f64::NAN);
        let err = train(&mut m, &[ex(1.0, 1)], &[], &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::TrainingFailure { epoch: 1, .. }), "{err}");
    }

    #[test]
    fn evaluation_counts() {
        let perfect = Scalar::new(1.0);
        let set = vec![ex(1.0, 1), ex(-1.0, 0), ex(2.0, 1)];
        let cm = evaluate(&perfect, &set).unwrap();
        let b = cm.one_vs_rest(1);
        assert_eq!((b.fp, b.fn_), (0, 0));
        // w = 0 ties every logit pair, so the lower class wins.
        let constant = Scalar::new(0.0);
        let cm = evaluate(&constant, &[ex(1.0, 1), ex(1.0, 0)]).unwrap();
        let b = cm.one_vs_rest(1);
        assert_eq!((b.tp, b.tn, b.fp, b.fn_), (0, 1, 0, 1));
        assert_eq!(predict(&[0.5, 0.5, 0.1]), 0);
    }
}
