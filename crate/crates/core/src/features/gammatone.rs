//! Gammatone filterbank with ERB-spaced channels, and the cochleogram built
//! from its rectified, frame-windowed outputs.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{TfKind, TfMatrix};
use crate::error::{Error, Result};
use crate::signal::{frame_count, FramePlan, Waveform, WindowKind};

/// FIR truncation: never longer than this.
const MAX_IMPULSE_S: f64 = 0.128;
/// FIR truncation: stop once the envelope falls below this fraction of its peak.
const ENVELOPE_FLOOR: f64 = 1e-5;

/// `24.7 (4.37 f / 1000 + 1)`.
pub fn erb_hz(fc_hz: f64) -> f64 {
    24.7 * (4.37 * fc_hz / 1000.0 + 1.0)
}

/// Envelope decay rate `b(f_c) = 1.019 ERB(f_c)`.
pub fn gammatone_decay(fc_hz: f64) -> f64 {
    1.019 * erb_hz(fc_hz)
}

/// ERB-number scale, `21.4 log10(1 + 0.00437 f)`.
pub fn erb_number(f_hz: f64) -> f64 {
    21.4 * (0.00437 * f_hz).ln_1p() / std::f64::consts::LN_10
}

pub fn erb_number_inverse(e: f64) -> f64 {
    (10f64.powf(e / 21.4) - 1.0) / 0.00437
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CochleaConfig {
    pub n_filters: usize,
    pub fc_min_hz: f64,
    /// Upper edge of the channel grid; `None` means Nyquist.
    pub fc_max_hz: Option<f64>,
    pub order: u32,
    pub frame_len_s: f64,
    pub hop_s: f64,
    #[serde(default)]
    pub window_kind: WindowKind,
}

impl Default for CochleaConfig {
    fn default() -> Self {
        Self {
            n_filters: 64,
            fc_min_hz: 100.0,
            fc_max_hz: None,
            order: 4,
            frame_len_s: 0.084,
            hop_s: 0.042,
            window_kind: WindowKind::Hann,
        }
    }
}

impl CochleaConfig {
    fn fc_max(&self, sample_rate_hz: u32) -> f64 {
        self.fc_max_hz.unwrap_or(sample_rate_hz as f64 / 2.0)
    }

    pub fn validate(&self, sample_rate_hz: u32) -> Result<()> {
        let fc_max = self.fc_max(sample_rate_hz);
        if self.n_filters == 0 || self.order == 0 {
            return Err(Error::invalid("need n_filters >= 1 and order >= 1"));
        }
        if !(self.fc_min_hz > 0.0 && self.fc_min_hz < fc_max) {
            return Err(Error::invalid(format!(
                "need 0 < fc_min ({}) < fc_max ({fc_max})",
                self.fc_min_hz
            )));
        }
        if fc_max > sample_rate_hz as f64 / 2.0 {
            return Err(Error::invalid(format!("fc_max {fc_max} above Nyquist")));
        }
        if !(self.frame_len_s > 0.0 && self.hop_s > 0.0) {
            return Err(Error::invalid("frame length and hop must be positive"));
        }
        self.frame_plan(sample_rate_hz).validate()
    }

    /// `K` centers evenly spaced on the ERB-number scale over `[fc_min, fc_max)`.
    ///
    /// The upper edge is excluded so that with the default `fc_max = f_s / 2`
    /// no channel sits exactly at Nyquist.
    pub fn center_frequencies(&self, sample_rate_hz: u32) -> Vec<f64> {
        let lo = erb_number(self.fc_min_hz);
        let hi = erb_number(self.fc_max(sample_rate_hz));
        let step = (hi - lo) / self.n_filters as f64;
        (0..self.n_filters)
            .map(|k| erb_number_inverse(lo + step * k as f64))
            .collect()
    }

    pub fn frame_plan(&self, sample_rate_hz: u32) -> FramePlan {
        let fs = sample_rate_hz as f64;
        FramePlan {
            frame_len_samples: (self.frame_len_s * fs).round() as usize,
            hop_samples: (self.hop_s * fs).round() as usize,
            window_kind: self.window_kind,
        }
    }
}

fn check_center(fc_hz: f64, sample_rate_hz: u32) -> Result<()> {
    if !(fc_hz > 0.0) || fc_hz >= sample_rate_hz as f64 / 2.0 {
        return Err(Error::invalid(format!(
            "center frequency {fc_hz} Hz outside (0, {}) Hz",
            sample_rate_hz as f64 / 2.0
        )));
    }
    Ok(())
}

fn envelope(t: f64, order: u32, decay: f64) -> f64 {
    t.powi(order as i32 - 1) * (-2.0 * PI * decay * t).exp()
}

fn peak_normalize(mut g: Vec<f64>) -> Vec<f64> {
    let peak = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        g.iter_mut().for_each(|v| *v /= peak);
    }
    g
}

/// `g(t) = t^(o-1) exp(-2 pi b(f_c) t) cos(2 pi f_c t)` at `t = n / f_s`,
/// `n < round(duration f_s)`, scaled so `max |g| = 1`.
pub fn gammatone_impulse_response(
    fc_hz: f64,
    cfg: &CochleaConfig,
    duration_s: f64,
    sample_rate_hz: u32,
) -> Result<Vec<f64>> {
    check_center(fc_hz, sample_rate_hz)?;
    if !(duration_s > 0.0) {
        return Err(Error::invalid("duration must be positive"));
    }
    let fs = sample_rate_hz as f64;
    let decay = gammatone_decay(fc_hz);
    let n = ((duration_s * fs).round() as usize).max(1);
    Ok(peak_normalize(
        (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                envelope(t, cfg.order, decay) * (2.0 * PI * fc_hz * t).cos()
            })
            .collect(),
    ))
}

/// One channel: truncated FIR scaled to unit magnitude response at `fc`.
///
/// Sampled peaks of a 4 kHz gammatone swing with the carrier phase, so
/// peak-normalized channels would have uneven gains across the bank.
#[derive(Debug, Clone, PartialEq)]
pub struct Gammatone {
    pub fc_hz: f64,
    pub taps: Vec<f64>,
}

impl Gammatone {
    pub fn new(fc_hz: f64, order: u32, sample_rate_hz: u32) -> Result<Self> {
        check_center(fc_hz, sample_rate_hz)?;
        let fs = sample_rate_hz as f64;
        let decay = gammatone_decay(fc_hz);
        let t_peak = (order as f64 - 1.0) / (2.0 * PI * decay);
        let env_peak = envelope(t_peak, order, decay);
        let max_len = (MAX_IMPULSE_S * fs).round() as usize;
        let mut taps = Vec::with_capacity(max_len);
        for i in 0..max_len {
            let t = i as f64 / fs;
            let env = envelope(t, order, decay);
            if t > t_peak && env < ENVELOPE_FLOOR * env_peak {
                break;
            }
            taps.push(env * (2.0 * PI * fc_hz * t).cos());
        }
        let w = 2.0 * PI * fc_hz / fs;
        let (re, im) = taps
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (n, &h)| (re + h * (w * n as f64).cos(), im - h * (w * n as f64).sin()));
        let gain = re.hypot(im);
        if !(gain > 0.0) {
            return Err(Error::DegenerateFilterbank(format!("gammatone at {fc_hz} Hz has zero gain")));
        }
        taps.iter_mut().for_each(|v| *v /= gain);
        Ok(Self { fc_hz, taps })
    }
}

type Spectra = Arc<Vec<Vec<Complex64>>>;

/// Filterbank for one configuration and sample rate.
///
/// Channel pairs `(2i, 2i+1)` are convolved together as the real and imaginary
/// parts of one complex FIR; the spectra are cached for the last signal length.
#[derive(Debug)]
pub struct CochleaBank {
    cfg: CochleaConfig,
    sample_rate_hz: u32,
    channels: Vec<Gammatone>,
    cache: Mutex<Option<(usize, Spectra)>>,
}

impl CochleaBank {
    pub fn new(cfg: &CochleaConfig, sample_rate_hz: u32) -> Result<Self> {
        cfg.validate(sample_rate_hz)?;
        let channels = cfg
            .center_frequencies(sample_rate_hz)
            .into_iter()
            .map(|fc| Gammatone::new(fc, cfg.order, sample_rate_hz))
            .collect::<Result<_>>()?;
        Ok(Self {
            cfg: *cfg,
            sample_rate_hz,
            channels,
            cache: Mutex::new(None),
        })
    }

    pub fn channels(&self) -> &[Gammatone] {
        &self.channels
    }

    fn spectra(&self, fft_len: usize) -> Spectra {
        let mut guard = self.cache.lock().expect("cochlea cache poisoned");
        if let Some((len, s)) = guard.as_ref() {
            if *len == fft_len {
                return Arc::clone(s);
            }
        }
        let fft = FftPlanner::new().plan_fft_forward(fft_len);
        let spectra: Vec<Vec<Complex64>> = self
            .channels
            .chunks(2)
            .map(|pair| {
                let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
                for (i, &t) in pair[0].taps.iter().enumerate() {
                    buf[i].re = t;
                }
                if let Some(second) = pair.get(1) {
                    for (i, &t) in second.taps.iter().enumerate() {
                        buf[i].im = t;
                    }
                }
                fft.process(&mut buf);
                buf
            })
            .collect();
        let spectra = Arc::new(spectra);
        *guard = Some((fft_len, Arc::clone(&spectra)));
        spectra
    }

    /// Causal filter outputs `x * g_k`, truncated to the input length.
    pub fn filter(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let longest = self.channels.iter().map(|g| g.taps.len()).max().unwrap_or(1);
        let fft_len = (x.len() + longest - 1).max(1).next_power_of_two();
        let spectra = self.spectra(fft_len);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(fft_len);
        let inv = planner.plan_fft_inverse(fft_len);
        let mut xs = vec![Complex64::new(0.0, 0.0); fft_len];
        for (b, &v) in xs.iter_mut().zip(x) {
            b.re = v;
        }
        fwd.process(&mut xs);
        let scale = 1.0 / fft_len as f64;
        let mut out = Vec::with_capacity(self.channels.len());
        for (p, h) in spectra.iter().enumerate() {
            let mut buf: Vec<Complex64> = xs.iter().zip(h).map(|(a, b)| a * b).collect();
            inv.process(&mut buf);
            out.push(buf[..x.len()].iter().map(|c| c.re * scale).collect());
            if 2 * p + 1 < self.channels.len() {
                out.push(buf[..x.len()].iter().map(|c| c.im * scale).collect());
            }
        }
        out
    }

    /// `C(k, m) = sum_n |x_k(mJ + n)| w(n)` over whole frames.
    pub fn transform(&self, w: &Waveform) -> Result<TfMatrix> {
        if w.sample_rate_hz() != self.sample_rate_hz {
            return Err(Error::invalid(format!(
                "bank built for {} Hz, signal at {} Hz",
                self.sample_rate_hz,
                w.sample_rate_hz()
            )));
        }
        let plan = self.cfg.frame_plan(self.sample_rate_hz);
        let n = plan.frame_len_samples;
        let cols = frame_count(w.len(), n, plan.hop_samples).ok_or(Error::EmptyFrames {
            len: w.len(),
            frame_len: n,
        })?;
        let window = plan.window();
        let outputs = self.filter(w.samples());
        let rows = outputs.len();
        let mut values = vec![0.0; rows * cols];
        for (k, y) in outputs.iter().enumerate() {
            for m in 0..cols {
                let start = m * plan.hop_samples;
                values[k * cols + m] = y[start..start + n]
                    .iter()
                    .zip(&window)
                    .map(|(v, c)| v.abs() * c)
                    .sum();
            }
        }
        TfMatrix::new(
            values,
            rows,
            cols,
            self.channels.iter().map(|g| g.fc_hz).collect(),
            plan.hop_samples as f64 / self.sample_rate_hz as f64,
            TfKind::Cochleogram,
        )
    }
}

pub fn cochleogram(w: &Waveform, cfg: &CochleaConfig) -> Result<TfMatrix> {
    CochleaBank::new(cfg, w.sample_rate_hz())?.transform(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erb_at_1khz() {
        assert!((erb_hz(1000.0) - 132.639).abs() < 1e-9);
        assert!((gammatone_decay(1000.0) - 135.159141).abs() < 1e-6);
    }

    #[test]
    fn impulse_starts_at_zero_and_peaks_at_one() {
        let cfg = CochleaConfig::default();
        let g = gammatone_impulse_response(1000.0, &cfg, 0.05, 4000).unwrap();
        assert_eq!(g[0], 0.0);
        let peak = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 1e-15);
    }

    #[test]
    fn envelope_peak_time() {
        // d/dt [t^3 exp(-2 pi b t)] = 0 at t = 3 / (2 pi b)
        let b = gammatone_decay(1000.0);
        let t = 3.0 / (2.0 * PI * b);
        assert!((t * 1e3 - 3.5326).abs() < 1e-3);
        let h = 1e-7;
        let d = (envelope(t + h, 4, b) - envelope(t - h, 4, b)) / (2.0 * h);
        assert!(d.abs() < 1e-9 * envelope(t, 4, b) / h);
    }

    #[test]
    fn nyquist_center_rejected() {
        let cfg = CochleaConfig::default();
        assert!(gammatone_impulse_response(2000.0, &cfg, 0.01, 4000).is_err());
        assert!(gammatone_impulse_response(0.0, &cfg, 0.01, 4000).is_err());
        assert!(gammatone_impulse_response(500.0, &cfg, 0.0, 4000).is_err());
    }

    #[test]
    fn erb_spacing_is_uniform() {
        let fc = CochleaConfig::default().center_frequencies(4000);
        assert_eq!(fc.len(), 64);
        assert!((fc[0] - 100.0).abs() < 1e-9);
        assert!(*fc.last().unwrap() < 2000.0);
        let d0 = erb_number(fc[1]) - erb_number(fc[0]);
        for w in fc.windows(2) {
            assert!((erb_number(w[1]) - erb_number(w[0]) - d0).abs() < 1e-9);
        }
    }

    #[test]
    fn truncation_bounds() {
        let low = Gammatone::new(100.0, 4, 4000).unwrap();
        let high = Gammatone::new(1900.0, 4, 4000).unwrap();
        assert!(low.taps.len() <= 512);
        assert!(high.taps.len() < low.taps.len());
    }

    #[test]
    fn fft_filter_matches_direct_convolution() {
        let cfg = CochleaConfig {
            n_filters: 5,
            ..CochleaConfig::default()
        };
        let bank = CochleaBank::new(&cfg, 4000).unwrap();
        let x: Vec<f64> = (0..900).map(|i| ((i * 7919 % 997) as f64 / 498.5) - 1.0).collect();
        let fast = bank.filter(&x);
        assert_eq!(fast.len(), 5);
        for (g, y) in bank.channels().iter().zip(&fast) {
            for n in 0..x.len() {
                let direct: f64 = (0..g.taps.len().min(n + 1)).map(|j| g.taps[j] * x[n - j]).sum();
                assert!((direct - y[n]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unit_gain_at_center() {
        for fc in [100.0, 997.0, 1808.0] {
            let g = Gammatone::new(fc, 4, 4000).unwrap();
            let w = 2.0 * PI * fc / 4000.0;
            let (re, im) = g.taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, &h)| {
                (re + h * (w * n as f64).cos(), im + h * (w * n as f64).sin())
            });
            assert!((re.hypot(im) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tone_at_channel_center_peaks_there() {
        let bank = CochleaBank::new(&CochleaConfig::default(), 4000).unwrap();
        for j in (0..64).step_by(3).chain([44, 46, 60, 61]) {
            let fc = bank.channels()[j].fc_hz;
            let x = (0..8000).map(|n| (2.0 * PI * fc * n as f64 / 4000.0).sin()).collect();
            let c = bank.transform(&Waveform::new(x, 4000).unwrap()).unwrap();
            let totals: Vec<f64> = (0..c.rows()).map(|r| c.row(r).iter().sum()).collect();
            let best = (0..totals.len()).max_by(|&a, &b| totals[a].total_cmp(&totals[b])).unwrap();
            assert_eq!(best, j, "tone at {fc} Hz");
        }
    }

    #[test]
    fn zero_signal_default_shape() {
        let w = Waveform::new(vec![0.0; 24000], 4000).unwrap();
        let c = cochleogram(&w, &CochleaConfig::default()).unwrap();
        assert_eq!((c.rows(), c.cols()), (64, 141));
        assert!(c.values().iter().all(|&v| v == 0.0));
    }
}
