use super::{check_alpha, check_finite, midranks, normal_two_sided, ExactP, TestMethod, TestReport};
use crate::error::{Error, Result};

/// Largest `n * m` that takes the exact path by default.
pub const MW_EXACT_MAX_CELLS: usize = 400;

/// Counts of `n`-subsets of the doubled ranks by sum; index = doubled rank sum.
fn subset_sum_counts(doubled: &[u64], n: usize) -> Result<Vec<u128>> {
    let max: u64 = doubled.iter().sum();
    let width = max as usize + 1;
    let mut dp = vec![vec![0u128; width]; n + 1];
    dp[0][0] = 1;
    for &r in doubled {
        let r = r as usize;
        for k in (1..=n).rev() {
            let (lo, hi) = dp.split_at_mut(k);
            for s in (r..width).rev() {
                if lo[k - 1][s - r] != 0 {
                    hi[0][s] = hi[0][s]
                        .checked_add(lo[k - 1][s - r])
                        .ok_or_else(|| Error::invalid("exact enumeration overflows; use the approximation"))?;
                }
            }
        }
    }
    Ok(dp.swap_remove(n))
}

/// Mann-Whitney U with the default method choice: exact when `n * m <= 400`
/// and there are no ties, normal approximation otherwise.
pub fn mann_whitney_u(xs: &[f64], ys: &[f64], alpha: f64) -> Result<TestReport> {
    mann_whitney_u_with(xs, ys, alpha, None)
}

/// As [`mann_whitney_u`], optionally forcing the method. The forced exact
/// path enumerates the permutation distribution of the midranks.
pub fn mann_whitney_u_with(xs: &[f64], ys: &[f64], alpha: f64, method: Option<TestMethod>) -> Result<TestReport> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::invalid("Mann-Whitney U needs two nonempty samples"));
    }
    check_alpha(alpha)?;
    check_finite(xs)?;
    check_finite(ys)?;
    let (n, m) = (xs.len(), ys.len());
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    // Doubled midranks are integers.
    let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r) as u64).collect();
    let rx2: u64 = doubled[..n].iter().sum();
    let base2 = (n * (n + 1)) as u64;
    let nm2 = 2 * (n * m) as u64;
    let ux2 = rx2 - base2;
    let u2 = ux2.min(nm2 - ux2);
    let statistic = u2 as f64 / 2.0;
    let method = method.unwrap_or(if n * m <= MW_EXACT_MAX_CELLS && ties.is_empty() {
        TestMethod::Exact
    } else {
        TestMethod::NormalApproximation
    });
    match method {
        TestMethod::Exact => {
            let counts = subset_sum_counts(&doubled, n)?;
            let mut count = 0u128;
            let mut total = 0u128;
            for (s, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                total += c;
                let ux = s as u64 - base2;
                if ux.min(nm2 - ux) <= u2 {
                    count += c;
                }
            }
            let exact = ExactP { count, total };
            Ok(TestReport::new(statistic, exact.value(), method, alpha, Some(exact)))
        }
        TestMethod::NormalApproximation => {
            let big_n = (n + m) as f64;
            let tie_sum: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
            let var = (n * m) as f64 / 12.0 * ((big_n + 1.0) - tie_sum / (big_n * (big_n - 1.0)));
            let p = normal_two_sided(statistic, (n * m) as f64 / 2.0, var);
            Ok(TestReport::new(statistic, p, method, alpha, None))
        }
    }
}
