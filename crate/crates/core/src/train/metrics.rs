use serde::Serialize;

use crate::error::{Error, Result};

/// Counts indexed `[truth][prediction]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

/// One-vs-rest counts for a single class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BinaryCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl BinaryCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    /// Binary matrix from its four counts; class 1 is the positive class.
    pub fn from_binary(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self {
            n_classes: 2,
            counts: vec![tn, fp, fn_, tp],
        }
    }

    pub fn from_counts(n_classes: usize, counts: Vec<u64>) -> Result<Self> {
        if n_classes < 2 || counts.len() != n_classes * n_classes {
            return Err(Error::invalid("confusion matrix needs n x n counts with n >= 2"));
        }
        Ok(Self { n_classes, counts })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.n_classes + predicted] += 1;
    }

    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.n_classes).map(|p| self.count(truth, p)).sum()
    }

    /// One-vs-rest counts treating `class` as positive.
    pub fn one_vs_rest(&self, class: usize) -> BinaryCounts {
        let tp = self.count(class, class);
        let fn_ = self.row_sum(class) - tp;
        let fp = (0..self.n_classes).map(|t| self.count(t, class)).sum::<u64>() - tp;
        BinaryCounts {
            tp,
            fn_,
            fp,
            tn: self.total() - tp - fn_ - fp,
        }
    }

    pub fn merged(&self, other: &ConfusionMatrix) -> Result<ConfusionMatrix> {
        if self.n_classes != other.n_classes {
            return Err(Error::invalid("cannot merge confusion matrices of different sizes"));
        }
        let counts = self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect();
        Ok(Self {
            n_classes: self.n_classes,
            counts,
        })
    }
}

/// Accuracy, sensitivity, specificity, precision and score; `None` where a
/// denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MetricSet {
    pub acc: Option<f64>,
    pub sen: Option<f64>,
    pub spe: Option<f64>,
    pub prec: Option<f64>,
    pub sco: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn score(sen: Option<f64>, spe: Option<f64>) -> Option<f64> {
    Some((sen? + spe?) / 2.0)
}

fn mean_defined(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.into_iter().flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Binary matrices use class 1 as positive; larger ones macro-average the
/// one-vs-rest rates over the classes where each is defined.
pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricSet> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::invalid("metrics need at least one evaluated example"));
    }
    let correct: u64 = (0..cm.n_classes()).map(|c| cm.count(c, c)).sum();
    let acc = ratio(correct, total);
    let (sen, spe, prec) = if cm.n_classes() == 2 {
        let b = cm.one_vs_rest(1);
        (ratio(b.tp, b.tp + b.fn_), ratio(b.tn, b.tn + b.fp), ratio(b.tp, b.tp + b.fp))
    } else {
        let per: Vec<BinaryCounts> = (0..cm.n_classes()).map(|c| cm.one_vs_rest(c)).collect();
        (
            mean_defined(per.iter().map(|b| ratio(b.tp, b.tp + b.fn_))),
            mean_defined(per.iter().map(|b| ratio(b.tn, b.tn + b.fp))),
            mean_defined(per.iter().map(|b| ratio(b.tp, b.tp + b.fp))),
        )
    };
    Ok(MetricSet {
        acc,
        sen,
        spe,
        prec,
        sco: score(sen, spe),
    })
}

/// Per-metric mean over the sets where that metric is defined.
pub fn mean_metrics(sets: &[MetricSet]) -> MetricSet {
    MetricSet {
        acc: mean_defined(sets.iter().map(|m| m.acc)),
        sen: mean_defined(sets.iter().map(|m| m.sen)),
        spe: mean_defined(sets.iter().map(|m| m.spe)),
        prec: mean_defined(sets.iter().map(|m| m.prec)),
        sco: mean_defined(sets.iter().map(|m| m.sco)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 1e-12)
    }

    #[test]
    fn binary_worked_example() {
        let m = compute_metrics(&ConfusionMatrix::from_binary(50, 40, 10, 0)).unwrap();
        assert!(close(m.acc, 90.0 / 100.0));
        assert!(close(m.sen, 50.0 / 50.0));
        assert!(close(m.prec, 50.0 / 60.0));
        assert!(close(m.spe, 40.0 / 50.0));
        assert!(close(m.sco, (1.0 + 0.8) / 2.0));
    }

    #[test]
    fn symmetric_and_perfect() {
        let m = compute_metrics(&ConfusionMatrix::from_binary(25, 25, 25, 25)).unwrap();
        for v in [m.acc, m.sen, m.spe, m.sco, m.prec] {
            assert!(close(v, 0.5));
        }
        let m = compute_metrics(&ConfusionMatrix::from_binary(3, 4, 0, 0)).unwrap();
        for v in [m.acc, m.sen, m.spe, m.sco, m.prec] {
            assert!(close(v, 1.0));
        }
    }

    #[test]
    fn undefined_is_not_zero() {
        let m = compute_metrics(&ConfusionMatrix::from_binary(0, 5, 0, 0)).unwrap();
        assert_eq!((m.sen, m.prec, m.sco), (None, None, None));
        assert!(close(m.spe, 1.0));
        let m = compute_metrics(&ConfusionMatrix::from_binary(0, 5, 1, 0)).unwrap();
        assert_eq!((m.sen, m.prec), (None, Some(0.0)));
        assert!(compute_metrics(&ConfusionMatrix::new(2)).is_err());
    }

    #[test]
    fn four_class_one_vs_rest() {
        let mut cm = ConfusionMatrix::new(4);
        let pairs = [(0, 0), (0, 0), (0, 1), (1, 1), (2, 2), (2, 3), (3, 3), (3, 0)];
        for (t, p) in pairs {
            cm.record(t, p);
        }
        assert_eq!((0..4).map(|c| cm.row_sum(c)).collect::<Vec<_>>(), vec![3, 1, 2, 2]);
        let b = cm.one_vs_rest(0);
        assert_eq!((b.tp, b.fn_, b.fp, b.tn), (2, 1, 1, 4));
        let m = compute_metrics(&cm).unwrap();
        assert!(close(m.acc, 5.0 / 8.0));
        let sen = (2.0 / 3.0 + 1.0 + 0.5 + 0.5) / 4.0;
        let spe = (4.0 / 5.0 + 6.0 / 7.0 + 1.0 + 5.0 / 6.0) / 4.0;
        assert!(close(m.sen, sen) && close(m.spe, spe));
        assert_eq!(m.sco, Some((m.sen.unwrap() + m.spe.unwrap()) / 2.0));
    }

    #[test]
    fn pooled_and_mean_differ_on_unbalanced_folds() {
        let a = ConfusionMatrix::from_binary(9, 1, 0, 0);
        let b = ConfusionMatrix::from_binary(1, 10, 5, 4);
        let (ma, mb) = (compute_metrics(&a).unwrap(), compute_metrics(&b).unwrap());
        let mean = mean_metrics(&[ma, mb]);
        let pooled = compute_metrics(&a.merged(&b).unwrap()).unwrap();
        // Fold accuracies 10/10 and 11/20; pooled 21/30.
        assert!(close(mean.acc, (1.0 + 0.55) / 2.0));
        assert!(close(pooled.acc, 21.0 / 30.0));
        assert!(close(mean.sen, (1.0 + 0.2) / 2.0));
        assert!(close(pooled.sen, 10.0 / 14.0));
        assert_eq!(mean_metrics(&[ma, ma]), ma);
    }
}
