use super::{from_columns, TfKind, TfMatrix};
use crate::error::Result;
use crate::signal::{frame_with_window, FramePlan, RealFft, Waveform};

/// Magnitude spectrogram, rows `0..=N/2`, one column per whole frame.
///
/// Frames are weighted with the DFT-even (periodic) form of the plan's window,
/// which confines a Hann-windowed constant to bins 0 and 1.
pub fn stft(w: &Waveform, plan: &FramePlan) -> Result<TfMatrix> {
    let window = plan.window_kind.periodic(plan.frame_len_samples);
    let frames = frame_with_window(w.samples(), plan, &window)?;
    let n = plan.frame_len_samples;
    let fft = RealFft::new(n);
    let columns: Vec<Vec<f64>> = frames.iter().map(|f| fft.magnitudes(f)).collect();
    let fs = w.sample_rate_hz() as f64;
    let axis = (0..=n / 2).map(|k| k as f64 * fs / n as f64).collect();
    from_columns(&columns, axis, plan.hop_samples as f64 / fs, TfKind::Stft)
}
