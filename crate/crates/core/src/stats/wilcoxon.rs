use super::{check_alpha, check_finite, midranks, normal_two_sided, ExactP, TestMethod, TestReport};
use crate::error::{Error, Result};

/// Largest number of nonzero differences that takes the exact path by default.
pub const WILCOXON_EXACT_MAX_N: usize = 20;

/// Wilcoxon signed-rank test on paired samples; zero differences are dropped.
pub fn wilcoxon_signed_rank(xs: &[f64], ys: &[f64], alpha: f64) -> Result<TestReport> {
    wilcoxon_signed_rank_with(xs, ys, alpha, None)
}

pub fn wilcoxon_signed_rank_with(xs: &[f64], ys: &[f64], alpha: f64, method: Option<TestMethod>) -> Result<TestReport> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::invalid("signed-rank test needs equal-length nonempty samples"));
    }
    check_alpha(alpha)?;
    check_finite(xs)?;
    check_finite(ys)?;
    let diffs: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(Error::DegenerateSample("every paired difference is zero".into()));
    }
    let n = diffs.len();
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = midranks(&abs);
    let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r) as u64).collect();
    let total2: u64 = doubled.iter().sum();
    let plus2: u64 = diffs.iter().zip(&doubled).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w2 = plus2.min(total2 - plus2);
    let statistic = w2 as f64 / 2.0;
    let method = method.unwrap_or(if n <= WILCOXON_EXACT_MAX_N {
        TestMethod::Exact
    } else {
        TestMethod::NormalApproximation
    });
    match method {
        TestMethod::Exact => {
            if n > 120 {
                return Err(Error::invalid("exact signed-rank enumeration limited to 120 differences"));
            }
            // counts[s]: sign patterns whose positive doubled ranks sum to s.
            let mut counts = vec![0u128; total2 as usize + 1];
            counts[0] = 1;
            for &r in &doubled {
                let r = r as usize;
                for s in (r..counts.len()).rev() {
                    counts[s] += counts[s - r];
                }
            }
            let count: u128 = counts
                .iter()
                .enumerate()
                .filter(|&(s, _)| (s as u64).min(total2 - s as u64) <= w2)
                .map(|(_, &c)| c)
                .sum();
            let exact = ExactP {
                count,
                total: 1u128 << n,
            };
            Ok(TestReport::new(statistic, exact.value(), method, alpha, Some(exact)))
        }
        TestMethod::NormalApproximation => {
            let nf = n as f64;
            let tie_sum: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
            let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_sum / 48.0;
            let p = normal_two_sided(statistic, nf * (nf + 1.0) / 4.0, var);
            Ok(TestReport::new(statistic, p, method, alpha, None))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn all_positive_five() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5], 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.exact, Some(ExactP { count: 2, total: 32 }));
        assert_eq!(r.p_value, 0.0625);
        assert!(!r.significant);
    }

    #[test]
    fn identical_pairs_are_degenerate() {
        let err = wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0], 0.05).unwrap_err();
        assert!(matches!(err, Error::DegenerateSample(_)));
    }

    #[test]
    fn negation_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert_eq!(
            wilcoxon_signed_rank(&xs, &ys, 0.05).unwrap(),
            wilcoxon_signed_rank(&ys, &xs, 0.05).unwrap()
        );
    }

    #[test]
    fn large_sample_uses_approximation() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 + 0.5).collect();
        let ys: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let r = wilcoxon_signed_rank(&xs, &ys, 0.05).unwrap();
        assert_eq!(r.method, TestMethod::NormalApproximation);
        assert!(r.significant);
    }
}
