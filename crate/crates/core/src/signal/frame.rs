use serde::{Deserialize, Serialize};

use super::{Waveform, WindowKind};
use crate::error::{Error, Result};

/// Frame length `N`, hop `J` and analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramePlan {
    pub frame_len_samples: usize,
    pub hop_samples: usize,
    #[serde(default)]
    pub window_kind: WindowKind,
}

impl FramePlan {
    pub fn new(frame_len_samples: usize, hop_samples: usize, window_kind: WindowKind) -> Result<Self> {
        let plan = Self {
            frame_len_samples,
            hop_samples,
            window_kind,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_len_samples == 0 || self.hop_samples == 0 {
            return Err(Error::invalid("frame length and hop must be positive"));
        }
        if self.hop_samples > self.frame_len_samples {
            return Err(Error::invalid(format!(
                "hop {} exceeds frame length {}",
                self.hop_samples, self.frame_len_samples
            )));
        }
        Ok(())
    }

    pub fn window(&self) -> Vec<f64> {
        self.window_kind.coefficients(self.frame_len_samples)
    }
}

/// Number of whole frames, `floor((len - N) / J) + 1`, or `None` when `len < N`.
pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> Option<usize> {
    (len >= frame_len && hop > 0).then(|| (len - frame_len) / hop + 1)
}

/// Splits the signal into windowed frames; frames running past the end are dropped.
pub fn frame_signal(w: &Waveform, plan: &FramePlan) -> Result<Vec<Vec<f64>>> {
    frame_with_window(w.samples(), plan, &plan.window())
}

pub(crate) fn frame_with_window(x: &[f64], plan: &FramePlan, window: &[f64]) -> Result<Vec<Vec<f64>>> {
    plan.validate()?;
    let n = plan.frame_len_samples;
    let count = frame_count(x.len(), n, plan.hop_samples).ok_or(Error::EmptyFrames {
        len: x.len(),
        frame_len: n,
    })?;
    Ok((0..count)
        .map(|m| {
            let start = m * plan.hop_samples;
            x[start..start + n]
                .iter()
                .zip(window)
                .map(|(s, c)| s * c)
                .collect()
        })
        .collect())
}
