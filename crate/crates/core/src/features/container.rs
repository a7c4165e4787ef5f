//! `TFM1` container: magic, `u32 K`, `u32 L`, `f64` hop seconds, kind byte,
//! `K*L` row-major `f32` values, then `K` `f32` center frequencies; all
//! little-endian.

use std::fs;
use std::path::Path;

use super::{TfKind, TfMatrix};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TFM1";
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 1;

pub fn encode_tfm(tf: &TfMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * (tf.values().len() + tf.rows()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(tf.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(tf.cols() as u32).to_le_bytes());
    out.extend_from_slice(&tf.frame_hop_s().to_le_bytes());
    out.push(tf.kind().to_byte());
    for &v in tf.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    for &f in tf.freq_axis_hz() {
        out.extend_from_slice(&(f as f32).to_le_bytes());
    }
    out
}

pub fn decode_tfm(bytes: &[u8]) -> Result<TfMatrix> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::format("missing TFM1 header"));
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let rows = u32_at(4);
    let cols = u32_at(8);
    let hop = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let kind = TfKind::from_byte(bytes[20])?;
    let n = rows
        .checked_mul(cols)
        .and_then(|v| v.checked_add(rows))
        .ok_or_else(|| Error::format("TFM1 dimensions overflow"))?;
    if bytes.len() != HEADER_LEN + 4 * n {
        return Err(Error::format(format!(
            "TFM1 body is {} bytes, expected {} for {rows}x{cols}",
            bytes.len() - HEADER_LEN,
            4 * n
        )));
    }
    let floats: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let (values, axis) = floats.split_at(rows * cols);
    TfMatrix::new(values.to_vec(), rows, cols, axis.to_vec(), hop, kind)
}

pub fn write_tfm(tf: &TfMatrix, path: impl AsRef<Path>) -> Result<()> {
    crate::io_util::write_atomic(path.as_ref(), &encode_tfm(tf))
}

pub fn read_tfm(path: impl AsRef<Path>) -> Result<TfMatrix> {
    let path = path.as_ref();
    decode_tfm(&fs::read(path).map_err(|e| Error::io_at(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_pinned() {
        let m = TfMatrix::new(vec![1.0, 2.0], 1, 2, vec![440.0], 0.5, TfKind::Cqt).unwrap();
        let b = encode_tfm(&m);
        assert_eq!(&b[..4], b"TFM1");
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..12], &2u32.to_le_bytes());
        assert_eq!(&b[12..20], &0.5f64.to_le_bytes());
        assert_eq!(b[20], 3);
        assert_eq!(&b[21..25], &1.0f32.to_le_bytes());
        assert_eq!(&b[29..33], &440.0f32.to_le_bytes());
        assert_eq!(b.len(), 33);
    }

    #[test]
    fn rejects_truncation_and_bad_kind() {
        let m = TfMatrix::new(vec![1.0; 4], 2, 2, vec![1.0, 2.0], 0.5, TfKind::Stft).unwrap();
        let b = encode_tfm(&m);
        assert!(decode_tfm(&b[..b.len() - 1]).is_err());
        let mut bad = b.clone();
        bad[20] = 9;
        assert!(decode_tfm(&bad).is_err());
        assert!(decode_tfm(b"TFM2").is_err());
    }

    proptest! {
        #[test]
        fn f32_representable_values_roundtrip(
            rows in 1usize..5, cols in 1usize..6, seed in any::<u32>(), hop in 0.001f64..1.0
        ) {
            let values: Vec<f64> = (0..rows * cols)
                .map(|i| ((seed as usize).wrapping_add(i * 7919) % 1000) as f32 as f64 / 8.0)
                .collect();
            let axis: Vec<f64> = (0..rows).map(|r| (r * 100) as f64).collect();
            let m = TfMatrix::new(values, rows, cols, axis, hop, TfKind::Cochleogram).unwrap();
            prop_assert_eq!(decode_tfm(&encode_tfm(&m)).unwrap(), m);
        }
    }
}
