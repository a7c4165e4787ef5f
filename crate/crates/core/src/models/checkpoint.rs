use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig, ModelParams, Tensor};
use crate::error::{Error, Result};
use crate::io_util::write_atomic;

const MAGIC: &[u8; 4] = b"RSLM";

/// JSON sidecar stored next to a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: ModelConfig,
    pub seed: u64,
}

/// `RSLM`, u32 count, then per tensor: u32 name length, name, u32 rank, u32 dims, f32 data.
pub fn encode_checkpoint(params: &ModelParams) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, t) in params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format("checkpoint truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ModelParams> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::format("not an RSLM checkpoint"));
    }
    let count = r.u32()?;
    let mut params = ModelParams::new();
    for _ in 0..count {
        let len = r.u32()?;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::format("tensor name is not UTF-8"))?
            .to_string();
        let rank = r.u32()?;
        let shape = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let n = n.ok_or_else(|| Error::format("tensor size overflows"))?;
        let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::format("tensor size overflows"))?)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        params.insert(name, Tensor::new(shape, data)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::format("trailing bytes after checkpoint"));
    }
    Ok(params)
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn save_checkpoint(path: &Path, model: &Model, seed: u64) -> Result<()> {
    use super::Classifier;
    write_atomic(path, &encode_checkpoint(model.params()))?;
    let meta = CheckpointMeta {
        config: model.config().clone(),
        seed,
    };
    write_atomic(&sidecar(path), serde_json::to_string_pretty(&meta)?.as_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, CheckpointMeta)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io_at(path, e))?;
    let side = sidecar(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io_at(&side, e))?;
    let meta: CheckpointMeta = serde_json::from_str(&text)?;
    let model = Model::from_parts(meta.config.clone(), decode_checkpoint(&bytes)?)?;
    Ok((model, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Classifier, ViTConfig};

    #[test]
    fn layout_is_pinned() {
        let mut p = ModelParams::new();
        p.insert("ab", Tensor::new(vec![2], vec![1.0, -2.0]).unwrap());
        let b = encode_checkpoint(&p);
        let mut want = b"RSLM".to_vec();
        want.extend([1, 0, 0, 0, 2, 0, 0, 0, b'a', b'b', 1, 0, 0, 0, 2, 0, 0, 0]);
        want.extend(1f32.to_le_bytes());
        want.extend((-2f32).to_le_bytes());
        assert_eq!(b, want);
        assert!(decode_checkpoint(&b[..b.len() - 1]).is_err());
        assert!(decode_checkpoint(b"RSLX\0\0\0\0").is_err());
    }

    #[test]
    fn save_and_load_model() {
        let dir = tempfile::tempdir().unwrap();
        let model = Model::new(ModelConfig::Vit(ViTConfig::tiny(2)), 11).unwrap();
        let path = dir.path().join("m.rslm");
        save_checkpoint(&path, &model, 11).unwrap();
        let (loaded, meta) = load_checkpoint(&path).unwrap();
        assert_eq!(meta.seed, 11);
        for ((_, a), (_, b)) in model.params().iter().zip(loaded.params().iter()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!(*x as f32 as f64, *y);
            }
        }
    }
}
