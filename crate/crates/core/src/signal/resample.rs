use std::f64::consts::PI;

use super::Waveform;
use crate::error::{Error, Result};

/// Kernel span in periods of the lower of the two rates.
pub const TAPS_PER_PHASE: usize = 64;
pub const KAISER_BETA: f64 = 8.0;
/// Low-pass cutoff as a fraction of the lower rate.
const CUTOFF_FRACTION: f64 = 0.45;
/// Above this many distinct phases the kernel is evaluated per output sample.
const MAX_TABLE_PHASES: u64 = 4096;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

struct Kernel {
    /// Normalized cutoff in cycles per input sample.
    cutoff: f64,
    half_width: f64,
    taps: i64,
    i0_beta: f64,
}

impl Kernel {
    fn new(src: u32, dst: u32) -> Self {
        let ratio = src as f64 / dst as f64;
        let cutoff = CUTOFF_FRACTION * (src.min(dst) as f64) / src as f64;
        let half_width = (TAPS_PER_PHASE / 2) as f64 * ratio.max(1.0);
        Self {
            cutoff,
            half_width,
            taps: half_width.ceil() as i64,
            i0_beta: bessel_i0(KAISER_BETA),
        }
    }

    /// Windowed sinc at `tau` input samples from the output instant.
    fn eval(&self, tau: f64) -> f64 {
        let r = tau / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let arg = 2.0 * self.cutoff * tau;
        let sinc = if arg == 0.0 {
            1.0
        } else {
            (PI * arg).sin() / (PI * arg)
        };
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / self.i0_beta;
        2.0 * self.cutoff * sinc * window
    }

    /// Taps for offsets `-(taps-1)..=taps` relative to `floor(position)`, unit DC gain.
    fn phase(&self, frac: f64) -> Vec<f64> {
        let mut h: Vec<f64> = (-(self.taps - 1)..=self.taps)
            .map(|t| self.eval(frac - t as f64))
            .collect();
        let sum: f64 = h.iter().sum();
        h.iter_mut().for_each(|v| *v /= sum);
        h
    }
}

/// Band-limited rate conversion with a Kaiser-windowed sinc.
///
/// The cutoff sits at 0.45 of the lower rate, so downsampling attenuates
/// everything that would alias. Output length is `round(len * dst / src)`.
pub fn resample(w: &Waveform, target_rate_hz: u32) -> Result<Waveform> {
    if target_rate_hz == 0 {
        return Err(Error::invalid("target sample rate must be positive"));
    }
    let src = w.sample_rate_hz();
    if src == target_rate_hz {
        return Ok(w.clone());
    }
    let g = gcd(src as u64, target_rate_hz as u64);
    let up = target_rate_hz as u64 / g;
    let down = src as u64 / g;
    let x = w.samples();
    let n_out = ((x.len() as u128 * target_rate_hz as u128 + src as u128 / 2) / src as u128) as usize;
    let kernel = Kernel::new(src, target_rate_hz);
    let table: Option<Vec<Vec<f64>>> = (up <= MAX_TABLE_PHASES)
        .then(|| (0..up).map(|p| kernel.phase(p as f64 / up as f64)).collect());

    let len = x.len() as i64;
    let mut out = Vec::with_capacity(n_out);
    for i in 0..n_out as u64 {
        let base = (i * down / up) as i64;
        let phase = i * down % up;
        let owned;
        let taps: &[f64] = match &table {
            Some(t) => &t[phase as usize],
            None => {
                owned = kernel.phase(phase as f64 / up as f64);
                &owned
            }
        };
        let first = base - (kernel.taps - 1);
        let mut acc = 0.0;
        for (t, h) in taps.iter().enumerate() {
            let j = first + t as i64;
            if (0..len).contains(&j) {
                acc += x[j as usize] * h;
            }
        }
        out.push(acc);
    }
    Waveform::new(out, target_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::dft;
    use proptest::prelude::*;

    fn sine(freq: f64, rate: u32, len: usize) -> Waveform {
        let s = (0..len)
            .map(|n| (2.0 * PI * freq * n as f64 / rate as f64).sin())
            .collect();
        Waveform::new(s, rate).unwrap()
    }

    /// DFT magnitude peak of the interior (edges carry the kernel transient).
    fn peak(w: &Waveform, skip: usize, n: usize) -> (usize, f64) {
        let spec = dft(&w.samples()[skip..skip + n]);
        spec[..n / 2]
            .iter()
            .enumerate()
            .map(|(k, c)| (k, c.norm()))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a })
    }

    #[test]
    fn zero_target_rejected() {
        assert!(resample(&sine(1.0, 8000, 10), 0).is_err());
    }

    #[test]
    fn same_rate_is_identity() {
        let w = sine(440.0, 8000, 300);
        assert_eq!(resample(&w, 8000).unwrap(), w);
    }

    #[test]
    fn passband_tone_preserved() {
        // 500 Hz at 8 kHz; 400-point DFT windows put the tone on bin 25 (8k) / 50 (4k)
        let w = sine(500.0, 8000, 8000);
        let out = resample(&w, 4000).unwrap();
        assert_eq!(out.len(), 4000);
        let (k_in, m_in) = peak(&w, 2000, 800);
        let (k_out, m_out) = peak(&out, 1000, 400);
        assert_eq!(k_in as f64 * 8000.0 / 800.0, 500.0);
        assert_eq!(k_out as f64 * 4000.0 / 400.0, 500.0);
        let amp_in = 2.0 * m_in / 800.0;
        let amp_out = 2.0 * m_out / 400.0;
        assert!((amp_out / amp_in - 1.0).abs() < 0.01, "{amp_in} {amp_out}");
    }

    #[test]
    fn alias_rejected_by_40_db() {
        // 2.5 kHz would fold to 1.5 kHz at 4 kHz
        let w = sine(2500.0, 8000, 8000);
        let out = resample(&w, 4000).unwrap();
        let n = 400;
        let spec_in = dft(&w.samples()[2000..2000 + 2 * n]);
        let spec_out = dft(&out.samples()[1000..1000 + n]);
        let amp_in = 2.0 * spec_in[250].norm() / (2 * n) as f64;
        let alias = 2.0 * spec_out[150].norm() / n as f64;
        let db = 20.0 * (alias / amp_in).log10();
        assert!(db <= -40.0, "alias at {db:.1} dB");
    }

    #[test]
    fn duration_preserved_for_awkward_ratio() {
        let w = sine(100.0, 44100, 44100 / 3);
        let out = resample(&w, 4000).unwrap();
        let dt = (out.duration_s() - w.duration_s()).abs();
        assert!(dt <= 1.0 / 4000.0);
    }

    #[test]
    fn upsampling_keeps_tone() {
        let w = sine(300.0, 4000, 4000);
        let out = resample(&w, 8000).unwrap();
        let (k, _) = peak(&out, 2000, 800);
        assert_eq!(k as f64 * 10.0, 300.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn linear_in_amplitude(a in -4.0f64..4.0, seed in 0u64..1000) {
            let x: Vec<f64> = (0..500).map(|i| (((i as u64 * 2654435761 + seed) % 1000) as f64 / 500.0) - 1.0).collect();
            let w = Waveform::new(x, 8000).unwrap();
            let lhs = resample(&w.scaled(a).unwrap(), 4000).unwrap();
            let rhs = resample(&w, 4000).unwrap();
            for (l, r) in lhs.samples().iter().zip(rhs.samples()) {
                prop_assert!((l - a * r).abs() < 1e-9);
            }
        }
    }
}
