use log::warn;

use super::CycleAnnotation;
use crate::error::{Error, Result};
use crate::signal::Waveform;

pub const PROTOCOL_RATE_HZ: u32 = 4000;
pub const CYCLE_SECONDS: f64 = 6.0;
pub const CYCLE_SAMPLES: usize = 24_000;

/// A labeled cycle, exactly [`CYCLE_SAMPLES`] long at [`PROTOCOL_RATE_HZ`].
#[derive(Debug, Clone, PartialEq)]
pub struct RespiratoryCycle {
    pub patient_id: String,
    pub recording_id: String,
    /// Position of the annotation within its recording.
    pub cycle_index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub audio: Waveform,
    pub crackle: bool,
    pub wheeze: bool,
}

/// Zero-pads symmetrically (odd remainder at the end) or center-crops to
/// exactly [`CYCLE_SAMPLES`].
pub fn fix_length(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    if n >= CYCLE_SAMPLES {
        let off = (n - CYCLE_SAMPLES) / 2;
        return samples[off..off + CYCLE_SAMPLES].to_vec();
    }
    let left = (CYCLE_SAMPLES - n) / 2;
    let mut out = vec![0.0; CYCLE_SAMPLES];
    out[left..left + n].copy_from_slice(samples);
    out
}

/// Slices each annotated cycle out of a 4 kHz recording and fixes it to 6 s.
///
/// Annotations running past the end of the audio are clamped with a warning.
pub fn extract_and_fix_cycles(
    w: &Waveform,
    anns: &[CycleAnnotation],
    patient_id: &str,
    recording_id: &str,
) -> Result<Vec<RespiratoryCycle>> {
    if w.sample_rate_hz() != PROTOCOL_RATE_HZ {
        return Err(Error::invalid(format!(
            "cycles are extracted at {PROTOCOL_RATE_HZ} Hz, got {} Hz",
            w.sample_rate_hz()
        )));
    }
    let fs = PROTOCOL_RATE_HZ as f64;
    let len = w.len();
    anns.iter()
        .enumerate()
        .map(|(i, a)| {
            let start = (a.start_s * fs).round() as usize;
            let end = (a.end_s * fs).round() as usize;
            if end > len {
                warn!(
                    "{recording_id}: cycle {i} ends at {:.3} s, audio ends at {:.3} s; clamped",
                    a.end_s,
                    w.duration_s()
                );
            }
            let (s, e) = (start.min(len), end.min(len));
            let audio = Waveform::new(fix_length(&w.samples()[s..e.max(s)]), PROTOCOL_RATE_HZ)?;
            Ok(RespiratoryCycle {
                patient_id: patient_id.to_string(),
                recording_id: recording_id.to_string(),
                cycle_index: i,
                start_s: a.start_s,
                end_s: a.end_s,
                audio,
                crackle: a.crackle,
                wheeze: a.wheeze,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(start_s: f64, end_s: f64) -> CycleAnnotation {
        CycleAnnotation {
            start_s,
            end_s,
            crackle: false,
            wheeze: true,
        }
    }

    fn ramp_recording(seconds: usize) -> Waveform {
        let n = seconds * PROTOCOL_RATE_HZ as usize;
        Waveform::new((0..n).map(|i| 1.0 + i as f64 / n as f64).collect(), PROTOCOL_RATE_HZ).unwrap()
    }

    #[test]
    fn two_second_cycle_padded_evenly() {
        let w = ramp_recording(10);
        let c = extract_and_fix_cycles(&w, &[ann(1.0, 3.0)], "101", "101_x").unwrap();
        let a = c[0].audio.samples();
        assert_eq!(a.len(), CYCLE_SAMPLES);
        assert!(a[..8000].iter().all(|&v| v == 0.0));
        assert!(a[16000..].iter().all(|&v| v == 0.0));
        assert_eq!(&a[8000..16000], &w.samples()[4000..12000]);
    }

    #[test]
    fn odd_padding_goes_to_the_end() {
        let out = fix_length(&[1.0; 23_999]);
        assert_eq!(out[0], 1.0);
        assert_eq!(out[23_999], 0.0);
        let out = fix_length(&[1.0; 23_997]);
        assert_eq!(out[..1], [0.0]);
        assert_eq!(out[1], 1.0);
        assert_eq!(out[23_998..], [0.0, 0.0]);
    }

    #[test]
    fn seven_second_cycle_center_cropped() {
        let w = ramp_recording(10);
        let c = extract_and_fix_cycles(&w, &[ann(1.0, 8.0)], "101", "r").unwrap();
        assert_eq!(c[0].audio.samples(), &w.samples()[6000..30000]);
    }

    #[test]
    fn exact_six_seconds_unchanged() {
        let w = ramp_recording(10);
        let c = extract_and_fix_cycles(&w, &[ann(2.0, 8.0)], "101", "r").unwrap();
        assert_eq!(c[0].audio.samples(), &w.samples()[8000..32000]);
    }

    #[test]
    fn overrun_is_clamped() {
        let w = ramp_recording(3);
        let c = extract_and_fix_cycles(&w, &[ann(2.0, 5.0), ann(4.0, 5.0)], "101", "r").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].audio.samples().iter().filter(|&&v| v != 0.0).count(), 4000);
        assert!(c[1].audio.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wrong_rate_rejected() {
        let w = Waveform::new(vec![0.0; 100], 8000).unwrap();
        assert!(extract_and_fix_cycles(&w, &[ann(0.0, 0.01)], "p", "r").is_err());
    }
}
