//! Audio primitives: WAV decoding, resampling, windowing and framing, and the
//! reference DFT that every spectral routine is checked against.

mod dft;
mod frame;
mod resample;
mod wav;
mod window;

pub use dft::{dft, idft, RealFft};
pub use frame::{frame_count, frame_signal, FramePlan};
pub(crate) use frame::frame_with_window;
pub use resample::{resample, KAISER_BETA, TAPS_PER_PHASE};
pub use wav::{encode_wav, read_wav, read_wav_info, write_wav, SampleFormat, WavInfo};
pub use window::WindowKind;

use crate::error::{Error, Result};

/// Mono sample sequence with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Multiplies every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        Self::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate_hz,
        )
    }
}
