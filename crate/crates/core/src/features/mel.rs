use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{stft, TfKind, TfMatrix};
use crate::error::{Error, Result};
use crate::signal::{FramePlan, Waveform, WindowKind};

/// Added to filter energies before the logarithm so silent frames stay finite.
pub const MEL_LOG_FLOOR: f64 = 1e-10;

/// `1127 ln(1 + f/700)`.
pub fn mel_scale(f_hz: f64) -> Result<f64> {
    if !(f_hz >= 0.0) {
        return Err(Error::invalid(format!("negative frequency {f_hz}")));
    }
    Ok(1127.0 * (f_hz / 700.0).ln_1p())
}

pub fn mel_scale_inverse(mel: f64) -> f64 {
    700.0 * (mel / 1127.0).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelConfig {
    pub n_filters: usize,
    pub n_coeffs: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub plan: FramePlan,
}

impl Default for MelConfig {
    /// 64 filters and coefficients over 0-2000 Hz on the STFT framing
    /// (256 samples, hop 128, Hann).
    fn default() -> Self {
        Self {
            n_filters: 64,
            n_coeffs: 64,
            fmin_hz: 0.0,
            fmax_hz: 2000.0,
            plan: FramePlan {
                frame_len_samples: 256,
                hop_samples: 128,
                window_kind: WindowKind::Hann,
            },
        }
    }
}

impl MelConfig {
    pub fn validate(&self, sample_rate_hz: u32) -> Result<()> {
        self.plan.validate()?;
        if self.n_filters == 0 || self.n_coeffs == 0 || self.n_coeffs > self.n_filters {
            return Err(Error::invalid(format!(
                "need 0 < n_coeffs ({}) <= n_filters ({})",
                self.n_coeffs, self.n_filters
            )));
        }
        if !(self.fmin_hz >= 0.0 && self.fmin_hz < self.fmax_hz) {
            return Err(Error::invalid("need 0 <= fmin < fmax"));
        }
        if self.fmax_hz > sample_rate_hz as f64 / 2.0 {
            return Err(Error::invalid(format!(
                "fmax {} above Nyquist for {sample_rate_hz} Hz",
                self.fmax_hz
            )));
        }
        Ok(())
    }
}

/// Triangular filters on FFT bins, `weights[m][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub weights: Vec<Vec<f64>>,
    /// Unsnapped center frequency of each filter.
    pub center_hz: Vec<f64>,
    /// Bin index of each filter's apex (weight exactly 1).
    pub center_bins: Vec<usize>,
}

/// `M` triangles whose apexes are the interior points of `M + 2` points spaced
/// uniformly in mel between `mel(fmin)` and `mel(fmax)`, snapped to bins.
pub fn mel_filterbank(cfg: &MelConfig, n_fft_bins: usize, sample_rate_hz: u32) -> Result<MelFilterbank> {
    cfg.validate(sample_rate_hz)?;
    if n_fft_bins < 2 {
        return Err(Error::DegenerateFilterbank(format!("{n_fft_bins} bins")));
    }
    let m = cfg.n_filters;
    let n_fft = 2 * (n_fft_bins - 1);
    let fs = sample_rate_hz as f64;
    let lo = mel_scale(cfg.fmin_hz)?;
    let hi = mel_scale(cfg.fmax_hz)?;
    let edges_hz: Vec<f64> = (0..m + 2)
        .map(|i| mel_scale_inverse(lo + (hi - lo) * i as f64 / (m + 1) as f64))
        .collect();
    let bins: Vec<usize> = edges_hz
        .iter()
        .map(|f| ((f * n_fft as f64 / fs).round() as usize).min(n_fft_bins - 1))
        .collect();
    if let Some(i) = bins.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateFilterbank(format!(
            "mel points {i} and {} share FFT bin {} ({n_fft_bins} bins)",
            i + 1,
            bins[i]
        )));
    }
    let weights = (1..=m)
        .map(|j| {
            let (l, c, r) = (bins[j - 1], bins[j], bins[j + 1]);
            (0..n_fft_bins)
                .map(|k| {
                    if k >= l && k <= c {
                        (k - l) as f64 / (c - l) as f64
                    } else if k > c && k <= r {
                        (r - k) as f64 / (r - c) as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(MelFilterbank {
        weights,
        center_hz: edges_hz[1..=m].to_vec(),
        center_bins: bins[1..=m].to_vec(),
    })
}

/// Filter energies `sum_k |X(k)|^2 H_m(k)` per frame (no logarithm).
pub fn mel_spectrogram(w: &Waveform, cfg: &MelConfig) -> Result<TfMatrix> {
    cfg.validate(w.sample_rate_hz())?;
    let spec = stft(w, &cfg.plan)?;
    let bank = mel_filterbank(cfg, spec.rows(), w.sample_rate_hz())?;
    let cols = spec.cols();
    let mut values = vec![0.0; cfg.n_filters * cols];
    for (m, h) in bank.weights.iter().enumerate() {
        for (k, &weight) in h.iter().enumerate() {
            if weight == 0.0 {
                continue;
            }
            let row = spec.row(k);
            for l in 0..cols {
                values[m * cols + l] += row[l] * row[l] * weight;
            }
        }
    }
    TfMatrix::new(
        values,
        cfg.n_filters,
        cols,
        bank.center_hz,
        spec.frame_hop_s(),
        TfKind::Mel,
    )
}

/// `Y_n = sqrt(2/M) sum_m S_m cos(pi n (m + 1/2) / M)` for `n < n_coeffs`.
///
/// The `sqrt(2/M)` scale applies to every coefficient including `n = 0`, so
/// `Y_0` is `sqrt 2` larger than an orthonormal DCT-II would give.
pub fn mfcc_dct(log_energies: &[f64], n_coeffs: usize) -> Vec<f64> {
    let m = log_energies.len() as f64;
    let scale = (2.0 / m).sqrt();
    (0..n_coeffs)
        .map(|n| {
            scale
                * log_energies
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s * (PI * n as f64 * (i as f64 + 0.5) / m).cos())
                    .sum::<f64>()
        })
        .collect()
}

pub fn mfcc(w: &Waveform, cfg: &MelConfig) -> Result<TfMatrix> {
    let mel = mel_spectrogram(w, cfg)?;
    let cols = mel.cols();
    let mut values = vec![0.0; cfg.n_coeffs * cols];
    for l in 0..cols {
        let s: Vec<f64> = mel.column(l).iter().map(|e| (e + MEL_LOG_FLOOR).ln()).collect();
        for (n, y) in mfcc_dct(&s, cfg.n_coeffs).into_iter().enumerate() {
            values[n * cols + l] = y;
        }
    }
    TfMatrix::new(
        values,
        cfg.n_coeffs,
        cols,
        (0..cfg.n_coeffs).map(|n| n as f64).collect(),
        mel.frame_hop_s(),
        TfKind::Mfcc,
    )
}
