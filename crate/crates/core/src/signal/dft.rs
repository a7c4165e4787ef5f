use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Direct-summation DFT, `X(k) = sum_n x(n) exp(-j 2 pi k n / N)`.
///
/// O(N^2). This is the reference every faster spectral path is tested against;
/// the phase index `k*n` is reduced mod `N` before conversion to an angle so
/// large `N` does not lose precision.
pub fn dft(frame: &[f64]) -> Vec<Complex64> {
    let n = frame.len();
    (0..n)
        .map(|k| {
            frame
                .iter()
                .enumerate()
                .fold(Complex64::new(0.0, 0.0), |acc, (i, &x)| {
                    let phase = ((k * i) % n) as f64 / n as f64;
                    acc + Complex64::from_polar(x, -2.0 * PI * phase)
                })
        })
        .collect()
}

/// Inverse of [`dft`], including the `1/N` factor.
pub fn idft(spectrum: &[Complex64]) -> Vec<Complex64> {
    let n = spectrum.len();
    let scale = 1.0 / n as f64;
    (0..n)
        .map(|i| {
            spectrum
                .iter()
                .enumerate()
                .fold(Complex64::new(0.0, 0.0), |acc, (k, &x)| {
                    let phase = ((k * i) % n) as f64 / n as f64;
                    acc + x * Complex64::from_polar(1.0, 2.0 * PI * phase)
                })
                * scale
        })
        .collect()
}

/// Planned FFT for real frames of one fixed length.
#[derive(Clone)]
pub struct RealFft {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for RealFft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFft").field("len", &self.len).finish()
    }
}

impl RealFft {
    pub fn new(len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len);
        Self { len, fft }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Full complex spectrum; `frame` must have the planned length.
    pub fn spectrum(&self, frame: &[f64]) -> Vec<Complex64> {
        assert_eq!(frame.len(), self.len, "frame length does not match plan");
        let mut buf: Vec<Complex64> = frame.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.process(&mut buf);
        buf
    }

    /// Magnitudes of bins `0..=N/2`.
    pub fn magnitudes(&self, frame: &[f64]) -> Vec<f64> {
        let spec = self.spectrum(frame);
        spec[..self.len / 2 + 1].iter().map(|c| c.norm()).collect()
    }
}
