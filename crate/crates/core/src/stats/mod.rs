//! Rank-based two-sample and paired tests with exact small-sample p-values.

mod mann_whitney;
mod wilcoxon;

use std::fmt;

use serde::Serialize;

pub use mann_whitney::{mann_whitney_u, mann_whitney_u_with, MW_EXACT_MAX_CELLS};
pub use wilcoxon::{wilcoxon_signed_rank, wilcoxon_signed_rank_with, WILCOXON_EXACT_MAX_N};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMethod {
    Exact,
    NormalApproximation,
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestMethod::Exact => "exact",
            TestMethod::NormalApproximation => "normal-approximation",
        })
    }
}

/// Two-sided exact p as `count / total` arrangements, unreduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExactP {
    pub count: u128,
    pub total: u128,
}

impl ExactP {
    pub fn value(&self) -> f64 {
        self.count as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestReport {
    /// U or W.
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub alpha: f64,
    pub significant: bool,
    /// Present for the exact method.
    pub exact: Option<ExactP>,
}

impl TestReport {
    fn new(statistic: f64, p_value: f64, method: TestMethod, alpha: f64, exact: Option<ExactP>) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            statistic,
            p_value,
            method,
            alpha,
            significant: p_value < alpha,
            exact,
        }
    }
}

impl fmt::Display for TestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "statistic {} p {:.6e} ({}) {} at alpha {}",
            self.statistic,
            self.p_value,
            self.method,
            if self.significant { "significant" } else { "not significant" },
            self.alpha
        )
    }
}

/// Midranks (1-based) and the tie-group sizes.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Two-sided normal tail with continuity correction, capped at 1.
fn normal_two_sided(stat: f64, mean: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((stat - mean).abs() - 0.5).max(0.0) / var.sqrt();
    libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

fn check_alpha(alpha: f64) -> crate::Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(crate::Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn check_finite(xs: &[f64]) -> crate::Result<()> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::invalid("samples must be finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks_with_ties() {
        let (r, t) = midranks(&[3.0, 1.0, 3.0, 2.0, 3.0]);
        assert_eq!(r, vec![4.0, 1.0, 4.0, 2.0, 4.0]);
        assert_eq!(t, vec![3]);
    }

    #[test]
    fn normal_tail_reference() {
        // Two-sided tail at z = 1.959963984540054 is 0.05.
        let p = normal_two_sided(1.959963984540054 + 0.5, 0.0, 1.0);
        assert!((p - 0.05).abs() < 1e-12);
        assert_eq!(normal_two_sided(0.2, 0.0, 1.0), 1.0);
    }
}
