//! Optimization, evaluation and patient-wise cross-validation.

mod cv;
mod metrics;
mod optim;
mod trainer;

pub use cv::{cross_validate, fold_seed, split_for_fold, CvReport, FoldResult};
pub use metrics::{compute_metrics, mean_metrics, BinaryCounts, ConfusionMatrix, MetricSet};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use trainer::{batch_gradient, evaluate, mean_loss, predict, train, EpochRecord, Example, TrainConfig, TrainReport};
