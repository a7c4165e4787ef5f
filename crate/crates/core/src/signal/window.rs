use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    #[default]
    Hann,
    Rectangular,
    BlackmanHarris,
}

impl WindowKind {
    /// Window shape at normalized position `x` in `[0, 1]`; zero outside.
    pub fn shape(self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let c = |m: f64| (2.0 * PI * m * x).cos();
        match self {
            WindowKind::Hann => 0.5 * (1.0 - c(1.0)),
            WindowKind::Rectangular => 1.0,
            // 4-term, -92 dB sidelobes
            WindowKind::BlackmanHarris => {
                0.35875 - 0.48829 * c(1.0) + 0.14128 * c(2.0) - 0.01168 * c(3.0)
            }
        }
    }

    /// `n` DFT-even coefficients, `w[i] = shape(i / n)`; the form used for spectral analysis.
    pub fn periodic(self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.shape(i as f64 / n as f64)).collect()
    }

    /// `n` symmetric coefficients, `w[i] = shape(i / (n - 1))`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![1.0],
            _ => {
                let denom = (n - 1) as f64;
                (0..n).map(|i| self.shape(i as f64 / denom)).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hann_endpoints_and_symmetry() {
        let w = WindowKind::Hann.coefficients(9);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
        for i in 0..9 {
            assert!((w[i] - w[8 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn blackman_harris_peak_is_one() {
        let w = WindowKind::BlackmanHarris.coefficients(11);
        assert!((w[5] - 1.0).abs() < 1e-12);
        assert!(w[0].abs() < 1e-4);
    }

    #[test]
    fn rectangular_is_flat() {
        assert!(WindowKind::Rectangular
            .coefficients(5)
            .iter()
            .all(|&v| v == 1.0));
    }
}
