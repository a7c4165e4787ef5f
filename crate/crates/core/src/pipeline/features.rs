use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    log_compress_normalize, min_max_normalize, mfcc, resize_to_grid, round_to_f32, stft, viridis_rgb, CochleaBank,
    CochleaConfig, CqtConfig, CqtKernel, MelConfig, TfMatrix,
};
use crate::models::{ModelConfig, Tensor};
use crate::signal::{FramePlan, Waveform, WindowKind};

pub const GRID_ROWS: usize = 64;
pub const GRID_COLS: usize = 144;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Stft,
    Mfcc,
    Cqt,
    Cochleogram,
}

impl Representation {
    pub const ALL: [Representation; 4] = [
        Representation::Stft,
        Representation::Mfcc,
        Representation::Cqt,
        Representation::Cochleogram,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Representation::Stft => "stft",
            Representation::Mfcc => "mfcc",
            Representation::Cqt => "cqt",
            Representation::Cochleogram => "cochleogram",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Representation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown representation {s:?}")))
    }
}

enum Extractor {
    Stft(FramePlan),
    Mfcc(MelConfig),
    Cqt(CqtKernel),
    Cochleogram(CochleaBank),
}

/// Builds one representation for many cycles at a fixed sample rate, reusing
/// kernels and filterbanks.
pub struct FeatureExtractor {
    representation: Representation,
    sample_rate_hz: u32,
    inner: Extractor,
}

impl FeatureExtractor {
    pub fn new(representation: Representation, sample_rate_hz: u32) -> Result<Self> {
        let inner = match representation {
            Representation::Stft => Extractor::Stft(FramePlan::new(256, 128, WindowKind::Hann)?),
            Representation::Mfcc => {
                let cfg = MelConfig::default();
                cfg.validate(sample_rate_hz)?;
                Extractor::Mfcc(cfg)
            }
            Representation::Cqt => Extractor::Cqt(CqtKernel::new(&CqtConfig::default(), sample_rate_hz)?),
            Representation::Cochleogram => {
                Extractor::Cochleogram(CochleaBank::new(&CochleaConfig::default(), sample_rate_hz)?)
            }
        };
        Ok(Self {
            representation,
            sample_rate_hz,
            inner,
        })
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    /// The unprocessed representation.
    pub fn raw(&self, w: &Waveform) -> Result<TfMatrix> {
        if w.sample_rate_hz() != self.sample_rate_hz {
            return Err(Error::invalid(format!(
                "extractor built for {} Hz, got {} Hz",
                self.sample_rate_hz,
                w.sample_rate_hz()
            )));
        }
        match &self.inner {
            Extractor::Stft(plan) => stft(w, plan),
            Extractor::Mfcc(cfg) => mfcc(w, cfg),
            Extractor::Cqt(kernel) => kernel.transform(w),
            Extractor::Cochleogram(bank) => bank.transform(w),
        }
    }

    /// Log-compressed (MFCC: min-max only), normalized to `[0, 1]`, resized to
    /// 64x144 and rounded through f32 so cached copies are bit-identical.
    pub fn prepared(&self, w: &Waveform) -> Result<TfMatrix> {
        let raw = self.raw(w)?;
        let norm = match self.representation {
            Representation::Mfcc => min_max_normalize(&raw)?,
            _ => log_compress_normalize(&raw)?,
        };
        round_to_f32(&resize_to_grid(&norm, GRID_ROWS, GRID_COLS)?)
    }
}

/// Shapes a prepared matrix for a model: `[rows, cols]` for the ViT,
/// `[1 or 3, rows, cols]` for the CNN (3 = Viridis colors scaled to `[0, 1]`).
pub fn model_input(tf: &TfMatrix, model: &ModelConfig) -> Result<Tensor> {
    let (rows, cols) = (tf.rows(), tf.cols());
    match model {
        ModelConfig::Vit(_) => Tensor::new(vec![rows, cols], tf.values().to_vec()),
        ModelConfig::BaselineCnn(c) if c.in_channels == 1 => Tensor::new(vec![1, rows, cols], tf.values().to_vec()),
        ModelConfig::BaselineCnn(_) => {
            let n = rows * cols;
            let mut data = vec![0.0; 3 * n];
            for (i, &v) in tf.values().iter().enumerate() {
                let rgb = viridis_rgb(v);
                for c in 0..3 {
                    data[c * n + i] = rgb[c] as f64 / 255.0;
                }
            }
            Tensor::new(vec![3, rows, cols], data)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::CYCLE_SAMPLES;
    use crate::models::{CnnConfig, ViTConfig};

    fn tone() -> Waveform {
        let s = (0..CYCLE_SAMPLES)
            .map(|i| (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 4000.0).sin() * 0.3)
            .collect();
        Waveform::new(s, 4000).unwrap()
    }

    #[test]
    fn every_representation_lands_on_the_grid() {
        let w = tone();
        for rep in Representation::ALL {
            let ex = FeatureExtractor::new(rep, 4000).unwrap();
            let tf = ex.prepared(&w).unwrap();
            assert_eq!((tf.rows(), tf.cols()), (GRID_ROWS, GRID_COLS), "{rep}");
            assert!(tf.values().iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(tf.values().iter().all(|&v| v as f32 as f64 == v));
            assert_eq!(rep.name().parse::<Representation>().unwrap(), rep);
        }
    }

    #[test]
    fn input_shapes() {
        let tf = FeatureExtractor::new(Representation::Stft, 4000).unwrap().prepared(&tone()).unwrap();
        let vit = model_input(&tf, &ModelConfig::Vit(ViTConfig::tiny(2))).unwrap();
        assert_eq!(vit.shape(), &[64, 144]);
        let rgb = CnnConfig {
            in_channels: 3,
            ..CnnConfig::new(2)
        };
        let x = model_input(&tf, &ModelConfig::BaselineCnn(rgb)).unwrap();
        assert_eq!(x.shape(), &[3, 64, 144]);
        let [r, g, b] = viridis_rgb(tf.values()[0]);
        let n = 64 * 144;
        assert_eq!([x.data()[0], x.data()[n], x.data()[2 * n]], [r, g, b].map(|c| c as f64 / 255.0));
    }
}
