//! Time-frequency representations (STFT, mel/MFCC, CQT, cochleogram) and the
//! conditioning applied before they reach a classifier.

mod container;
mod cqt;
mod gammatone;
mod mel;
mod post;
mod stft;
mod viridis;

pub use container::{decode_tfm, encode_tfm, read_tfm, write_tfm};
pub use cqt::{cqt, CqtConfig, CqtKernel};
pub use gammatone::{
    cochleogram, erb_hz, CochleaBank, erb_number, erb_number_inverse, gammatone_decay, gammatone_impulse_response,
    CochleaConfig, Gammatone,
};
pub use mel::{
    mel_filterbank, mel_scale, mel_scale_inverse, mel_spectrogram, mfcc, mfcc_dct, MelConfig, MelFilterbank,
    MEL_LOG_FLOOR,
};
pub use post::{log_compress_normalize, min_max_normalize, resize_to_grid, round_to_f32, LOG_REF};
pub use stft::stft;
pub use viridis::{render_viridis, viridis_rgb, VIRIDIS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TfKind {
    Stft,
    Mel,
    Mfcc,
    Cqt,
    Cochleogram,
}

impl TfKind {
    pub fn to_byte(self) -> u8 {
        match self {
            TfKind::Stft => 0,
            TfKind::Mel => 1,
            TfKind::Mfcc => 2,
            TfKind::Cqt => 3,
            TfKind::Cochleogram => 4,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        Ok(match b {
            0 => TfKind::Stft,
            1 => TfKind::Mel,
            2 => TfKind::Mfcc,
            3 => TfKind::Cqt,
            4 => TfKind::Cochleogram,
            _ => return Err(Error::format(format!("unknown matrix kind byte {b}"))),
        })
    }
}

/// `K x L` time-frequency grid, row-major with rows indexed by frequency.
///
/// For MFCC the "frequency" axis holds coefficient indices and values may be
/// negative; every other kind is nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct TfMatrix {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    freq_axis_hz: Vec<f64>,
    frame_hop_s: f64,
    kind: TfKind,
}

impl TfMatrix {
    pub fn new(
        values: Vec<f64>,
        rows: usize,
        cols: usize,
        freq_axis_hz: Vec<f64>,
        frame_hop_s: f64,
        kind: TfKind,
    ) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if freq_axis_hz.len() != rows {
            return Err(Error::invalid(format!(
                "{} axis entries for {rows} rows",
                freq_axis_hz.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure {
                context: format!("{kind:?} matrix"),
            });
        }
        if kind != TfKind::Mfcc && values.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid(format!("{kind:?} matrix has negative values")));
        }
        Ok(Self {
            values,
            rows,
            cols,
            freq_axis_hz,
            frame_hop_s,
            kind,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn freq_axis_hz(&self) -> &[f64] {
        &self.freq_axis_hz
    }

    pub fn frame_hop_s(&self) -> f64 {
        self.frame_hop_s
    }

    pub fn kind(&self) -> TfKind {
        self.kind
    }

    /// Same metadata, new values of identical shape.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(
            values,
            self.rows,
            self.cols,
            self.freq_axis_hz.clone(),
            self.frame_hop_s,
            self.kind,
        )
    }
}

/// Builds a matrix from per-frame columns (each of length `rows`).
pub(crate) fn from_columns(
    columns: &[Vec<f64>],
    freq_axis_hz: Vec<f64>,
    frame_hop_s: f64,
    kind: TfKind,
) -> Result<TfMatrix> {
    let rows = freq_axis_hz.len();
    let cols = columns.len();
    let mut values = vec![0.0; rows * cols];
    for (m, col) in columns.iter().enumerate() {
        debug_assert_eq!(col.len(), rows);
        for (k, &v) in col.iter().enumerate() {
            values[k * cols + m] = v;
        }
    }
    TfMatrix::new(values, rows, cols, freq_axis_hz, frame_hop_s, kind)
}
