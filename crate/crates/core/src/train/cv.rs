use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::{compute_metrics, evaluate, mean_metrics, train, ConfusionMatrix, Example, MetricSet, TrainConfig};
use crate::data::FoldPlan;
use crate::error::{Error, Result};
use crate::models::Classifier;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    pub epochs_ran: usize,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    /// Per-metric mean over folds.
    pub mean: MetricSet,
    /// Metrics of the summed confusion matrix.
    pub pooled: MetricSet,
}

/// Train/validation/test partition for fold `i`: test = fold i, validation =
/// fold (i + 1) mod k, training = the rest.
pub fn split_for_fold<'a>(
    examples: &'a [Example],
    plan: &FoldPlan,
    fold: usize,
) -> Result<(Vec<Example>, Vec<Example>, Vec<Example>)> {
    let k = plan.k();
    let val_fold = (fold + 1) % k;
    let (mut tr, mut va, mut te) = (Vec::new(), Vec::new(), Vec::new());
    for ex in examples {
        let f = plan
            .fold_of(&ex.patient_id)
            .ok_or_else(|| Error::invalid(format!("patient {} is not in the fold plan", ex.patient_id)))?;
        match f {
            f if f == fold => te.push(ex.clone()),
            f if f == val_fold => va.push(ex.clone()),
            _ => tr.push(ex.clone()),
        }
    }
    Ok((tr, va, te))
}

/// Per-fold seed: the run seed mixed with the fold index.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    let mut z = seed ^ (fold as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs every fold of `plan` as the test fold once. `make_model(seed)` builds
/// a freshly initialized model for a fold.
pub fn cross_validate<C, F>(examples: &[Example], plan: &FoldPlan, cfg: &TrainConfig, make_model: F) -> Result<CvReport>
where
    C: Classifier + Send,
    F: Fn(u64) -> Result<C> + Sync,
{
    if plan.k() < 3 {
        return Err(Error::invalid("cross-validation needs at least 3 folds"));
    }
    let folds: Vec<FoldResult> = (0..plan.k())
        .into_par_iter()
        .map(|fold| {
            let (tr, va, te) = split_for_fold(examples, plan, fold)?;
            if tr.is_empty() || te.is_empty() {
                return Err(Error::invalid(format!("fold {fold} has an empty train or test set")));
            }
            let seed = fold_seed(cfg.seed, fold);
            let mut model = make_model(seed)?;
            let fold_cfg = TrainConfig { seed, ..cfg.clone() };
            let report = train(&mut model, &tr, &va, &fold_cfg)?;
            let confusion = evaluate(&model, &te)?;
            let metrics = compute_metrics(&confusion)?;
            info!(
                "fold {fold}: {} train / {} val / {} test, acc {:?}, {} epochs",
                tr.len(),
                va.len(),
                te.len(),
                metrics.acc,
                report.epochs_ran
            );
            Ok(FoldResult {
                fold,
                confusion,
                metrics,
                epochs_ran: report.epochs_ran,
                best_epoch: report.best_epoch,
            })
        })
        .collect::<Result<_>>()?;
    let mean = mean_metrics(&folds.iter().map(|f| f.metrics).collect::<Vec<_>>());
    let mut pooled_cm = folds[0].confusion.clone();
    for f in &folds[1..] {
        pooled_cm = pooled_cm.merged(&f.confusion)?;
    }
    let pooled = compute_metrics(&pooled_cm)?;
    Ok(CvReport { folds, mean, pooled })
}

#[cfg(test)]
mod tests {
    use super::super::trainer::tests::{ex, Scalar};
    use super::*;
    use crate::data::patient_folds;
    use std::collections::BTreeSet;

    fn dataset() -> Vec<Example> {
        (0..60)
            .map(|i| {
                let label = i % 2;
                let mut e = ex(if label == 1 { 1.0 + (i % 7) as f64 * 0.1 } else { -1.0 }, label);
                e.patient_id = format!("p{}", i % 12);
                e
            })
            .collect()
    }

    #[test]
    fn every_fold_tested_once_without_leakage() {
        let data = dataset();
        let plan = patient_folds(data.iter().map(|e| e.patient_id.as_str()), 4, 3).unwrap();
        for fold in 0..4 {
            let (tr, va, te) = split_for_fold(&data, &plan, fold).unwrap();
            assert_eq!(tr.len() + va.len() + te.len(), data.len());
            let test_patients: BTreeSet<&str> = te.iter().map(|e| e.patient_id.as_str()).collect();
            assert!(tr.iter().chain(&va).all(|e| !test_patients.contains(e.patient_id.as_str())));
        }
        let cfg = TrainConfig {
            epochs: 5,
            patience: 3,
            ..Default::default()
        };
        let r = cross_validate(&data, &plan, &cfg, |_| Ok(Scalar::new(0.0))).unwrap();
        assert_eq!(r.folds.iter().map(|f| f.fold).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let tested: u64 = r.folds.iter().map(|f| f.confusion.total()).sum();
        assert_eq!(tested, data.len() as u64);
        // A positive weight separates the classes perfectly.
        assert_eq!(r.mean.acc, Some(1.0));
        assert_eq!(r.pooled.acc, Some(1.0));
        let again = cross_validate(&data, &plan, &cfg, |_| Ok(Scalar::new(0.0))).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn fold_seeds_are_distinct() {
        let seeds: BTreeSet<u64> = (0..10).map(|f| fold_seed(42, f)).collect();
        assert_eq!(seeds.len(), 10);
    }
}
