use super::{TfKind, TfMatrix};
use crate::error::{Error, Result};

/// Reference level in `log(1 + v / LOG_REF)`.
pub const LOG_REF: f64 = 1e-6;

fn min_max(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    if values.is_empty() || !(span > 0.0) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / span).collect()
}

/// Min-max scaling to `[0, 1]`; a constant matrix maps to zeros.
pub fn min_max_normalize(tf: &TfMatrix) -> Result<TfMatrix> {
    tf.with_values(min_max(tf.values()))
}

/// `log(1 + v / LOG_REF)` followed by min-max scaling. Not for MFCC input,
/// which is already logarithmic.
pub fn log_compress_normalize(tf: &TfMatrix) -> Result<TfMatrix> {
    if tf.kind() == TfKind::Mfcc {
        return Err(Error::invalid("MFCC matrices are already log-domain"));
    }
    let logged: Vec<f64> = tf.values().iter().map(|v| (v / LOG_REF).ln_1p()).collect();
    tf.with_values(min_max(&logged))
}

/// Interpolation source coordinate with corners aligned.
fn source_coord(i: usize, n_out: usize, n_in: usize) -> (usize, usize, f64) {
    if n_out == 1 || n_in == 1 {
        return (0, 0, 0.0);
    }
    let x = i as f64 * (n_in - 1) as f64 / (n_out - 1) as f64;
    let lo = (x.floor() as usize).min(n_in - 2);
    (lo, lo + 1, x - lo as f64)
}

/// Bilinear resampling of the value grid to exactly `rows x cols`.
///
/// The frequency axis is interpolated linearly alongside the values.
pub fn resize_to_grid(tf: &TfMatrix, rows: usize, cols: usize) -> Result<TfMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("target grid must be at least 1x1"));
    }
    if tf.rows() == 0 || tf.cols() == 0 {
        return Err(Error::invalid("cannot resize an empty matrix"));
    }
    if (rows, cols) == (tf.rows(), tf.cols()) {
        return Ok(tf.clone());
    }
    let col_src: Vec<_> = (0..cols).map(|j| source_coord(j, cols, tf.cols())).collect();
    let mut values = Vec::with_capacity(rows * cols);
    let mut axis = Vec::with_capacity(rows);
    for i in 0..rows {
        let (r0, r1, fy) = source_coord(i, rows, tf.rows());
        let f = tf.freq_axis_hz();
        axis.push(f[r0] * (1.0 - fy) + f[r1] * fy);
        for &(c0, c1, fx) in &col_src {
            let top = tf.get(r0, c0) * (1.0 - fx) + tf.get(r0, c1) * fx;
            let bottom = tf.get(r1, c0) * (1.0 - fx) + tf.get(r1, c1) * fx;
            values.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    let hop = tf.frame_hop_s() * tf.cols() as f64 / cols as f64;
    TfMatrix::new(values, rows, cols, axis, hop, tf.kind())
}

/// Rounds values and the frequency axis through `f32`, the precision of the
/// on-disk container.
pub fn round_to_f32(tf: &TfMatrix) -> Result<TfMatrix> {
    let f32_round = |xs: &[f64]| xs.iter().map(|&v| v as f32 as f64).collect();
    TfMatrix::new(
        f32_round(tf.values()),
        tf.rows(),
        tf.cols(),
        f32_round(tf.freq_axis_hz()),
        tf.frame_hop_s(),
        tf.kind(),
    )
}
