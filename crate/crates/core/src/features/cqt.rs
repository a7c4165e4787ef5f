use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{TfKind, TfMatrix};
use crate::error::{Error, Result};
use crate::signal::{Waveform, WindowKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqtConfig {
    pub f1_hz: f64,
    pub bins_per_octave: usize,
    pub n_bins: usize,
    #[serde(default)]
    pub window_kind: WindowKind,
    pub hop_samples: usize,
}

impl Default for CqtConfig {
    /// 100 Hz upward, 12 bins per octave, 52 bins (top bin ~1.9 kHz).
    fn default() -> Self {
        Self {
            f1_hz: 100.0,
            bins_per_octave: 12,
            n_bins: 52,
            window_kind: WindowKind::Hann,
            hop_samples: 128,
        }
    }
}

impl CqtConfig {
    /// `f_k = f_1 2^(k/b)` for zero-based `k`.
    pub fn center_frequency(&self, k: usize) -> f64 {
        self.f1_hz * 2f64.powf(k as f64 / self.bins_per_octave as f64)
    }

    /// Constant ratio of center frequency to bin spacing, `1 / (2^(1/b) - 1)`.
    pub fn q(&self) -> f64 {
        1.0 / (2f64.powf(1.0 / self.bins_per_octave as f64) - 1.0)
    }

    pub fn validate(&self, sample_rate_hz: u32) -> Result<()> {
        if !(self.f1_hz > 0.0) || self.bins_per_octave == 0 || self.n_bins == 0 || self.hop_samples == 0 {
            return Err(Error::invalid("need f1 > 0, bins_per_octave >= 1, n_bins >= 1, hop >= 1"));
        }
        let top = self.center_frequency(self.n_bins - 1);
        if top > sample_rate_hz as f64 / 2.0 {
            return Err(Error::invalid(format!(
                "top bin at {top:.1} Hz exceeds Nyquist for {sample_rate_hz} Hz"
            )));
        }
        Ok(())
    }
}

/// Precomputed atoms `a_k(n) = w(n / N_k) exp(-i 2 pi n f_k / f_s) / N_k`
/// with real lengths `N_k = Q f_s / f_k`.
#[derive(Debug, Clone)]
pub struct CqtKernel {
    cfg: CqtConfig,
    sample_rate_hz: u32,
    freqs: Vec<f64>,
    lengths: Vec<f64>,
    atoms: Vec<Vec<Complex64>>,
}

impl CqtKernel {
    pub fn new(cfg: &CqtConfig, sample_rate_hz: u32) -> Result<Self> {
        cfg.validate(sample_rate_hz)?;
        let fs = sample_rate_hz as f64;
        let q = cfg.q();
        let freqs: Vec<f64> = (0..cfg.n_bins).map(|k| cfg.center_frequency(k)).collect();
        let lengths: Vec<f64> = freqs.iter().map(|f| q * fs / f).collect();
        let atoms = freqs
            .iter()
            .zip(&lengths)
            .map(|(&f, &nk)| {
                let taps = nk.ceil() as usize;
                (0..taps)
                    .map(|n| {
                        let amp = cfg.window_kind.shape(n as f64 / nk) / nk;
                        Complex64::from_polar(amp, -2.0 * PI * n as f64 * f / fs)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            cfg: *cfg,
            sample_rate_hz,
            freqs,
            lengths,
            atoms,
        })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Real-valued window length of each bin.
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn atom(&self, k: usize) -> &[Complex64] {
        &self.atoms[k]
    }

    /// `|X(k, c)|` for an atom centered on sample `c`, zero outside the signal.
    pub fn coefficient(&self, x: &[f64], k: usize, center: usize) -> f64 {
        let atom = &self.atoms[k];
        let start = center as i64 - (self.lengths[k] / 2.0).floor() as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, a) in atom.iter().enumerate() {
            let j = start + n as i64;
            if j >= 0 && (j as usize) < x.len() {
                acc += a.conj() * x[j as usize];
            }
        }
        acc.norm()
    }

    pub fn transform(&self, w: &Waveform) -> Result<TfMatrix> {
        if w.sample_rate_hz() != self.sample_rate_hz {
            return Err(Error::invalid(format!(
                "kernel built for {} Hz, signal at {} Hz",
                self.sample_rate_hz,
                w.sample_rate_hz()
            )));
        }
        let longest = self.atoms.iter().map(Vec::len).max().unwrap_or(0);
        if longest > w.len() {
            return Err(Error::AtomTooLong {
                atom_len: longest,
                signal_len: w.len(),
            });
        }
        let x = w.samples();
        let hop = self.cfg.hop_samples;
        let cols = (x.len() - 1) / hop + 1;
        let rows = self.freqs.len();
        let mut values = vec![0.0; rows * cols];
        for k in 0..rows {
            for m in 0..cols {
                values[k * cols + m] = self.coefficient(x, k, m * hop);
            }
        }
        TfMatrix::new(
            values,
            rows,
            cols,
            self.freqs.clone(),
            hop as f64 / self.sample_rate_hz as f64,
            TfKind::Cqt,
        )
    }
}

pub fn cqt(w: &Waveform, cfg: &CqtConfig) -> Result<TfMatrix> {
    CqtKernel::new(cfg, w.sample_rate_hz())?.transform(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, len: usize) -> Waveform {
        Waveform::new(
            (0..len).map(|n| (2.0 * PI * f * n as f64 / 4000.0).sin()).collect(),
            4000,
        )
        .unwrap()
    }

    #[test]
    fn octave_doubles_frequency() {
        let cfg = CqtConfig::default();
        let k = CqtKernel::new(&cfg, 4000).unwrap();
        assert!((k.freqs()[12] - 200.0).abs() < 1e-12);
        for i in 0..k.freqs().len() - 12 {
            assert!((k.freqs()[i + 12] - 2.0 * k.freqs()[i]).abs() <= 1e-12 * k.freqs()[i]);
        }
    }

    #[test]
    fn tone_lands_in_its_bin() {
        let cfg = CqtConfig::default();
        for k in [0usize, 7, 20, 33, 51] {
            let f = cfg.center_frequency(k);
            let m = cqt(&tone(f, 8000), &cfg).unwrap();
            let energy: Vec<f64> = (0..m.rows()).map(|r| m.row(r).iter().map(|v| v * v).sum()).collect();
            let arg = (0..energy.len()).max_by(|&a, &b| energy[a].total_cmp(&energy[b])).unwrap();
            assert_eq!(arg, k);
        }
    }

    #[test]
    fn top_bin_above_nyquist_rejected() {
        let cfg = CqtConfig {
            n_bins: 60,
            ..CqtConfig::default()
        };
        assert!(cqt(&tone(100.0, 8000), &cfg).is_err());
    }

    #[test]
    fn short_signal_rejected() {
        assert!(matches!(
            cqt(&tone(100.0, 300), &CqtConfig::default()),
            Err(Error::AtomTooLong { .. })
        ));
    }
}
