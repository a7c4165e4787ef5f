use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeatureExtractor, Representation, GRID_COLS, GRID_ROWS};
use crate::data::{RespiratoryCycle, PROTOCOL_RATE_HZ};
use crate::error::{Error, Result};
use crate::features::{read_tfm, write_tfm, TfMatrix};
use crate::io_util::write_atomic;

const INDEX_FILE: &str = "cache.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheIndex {
    representation: Representation,
    corpus_hash: String,
    grid_rows: usize,
    grid_cols: usize,
    entries: Vec<String>,
}

pub fn cache_dir(root: &Path, rep: Representation) -> PathBuf {
    root.join(rep.name())
}

pub fn cycle_key(c: &RespiratoryCycle) -> String {
    format!("{}_{:03}", c.recording_id, c.cycle_index)
}

/// Prepared matrices for every cycle, in input order.
pub fn extract_features(cycles: &[RespiratoryCycle], rep: Representation) -> Result<Vec<TfMatrix>> {
    let ex = FeatureExtractor::new(rep, PROTOCOL_RATE_HZ)?;
    cycles.par_iter().map(|c| ex.prepared(&c.audio)).collect()
}

pub fn write_feature_cache(
    root: &Path,
    rep: Representation,
    corpus_hash: &str,
    cycles: &[RespiratoryCycle],
    matrices: &[TfMatrix],
) -> Result<()> {
    if cycles.len() != matrices.len() {
        return Err(Error::invalid("one matrix per cycle is required"));
    }
    let dir = cache_dir(root, rep);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io_at(&dir, e))?;
    let entries: Vec<String> = cycles.iter().map(cycle_key).collect();
    entries
        .par_iter()
        .zip(matrices)
        .try_for_each(|(key, tf)| write_tfm(tf, dir.join(format!("{key}.tfm"))))?;
    let index = CacheIndex {
        representation: rep,
        corpus_hash: corpus_hash.to_string(),
        grid_rows: GRID_ROWS,
        grid_cols: GRID_COLS,
        entries,
    };
    write_atomic(&dir.join(INDEX_FILE), serde_json::to_string_pretty(&index)?.as_bytes())
}

/// Reads cached matrices for `cycles`, refusing caches built from another
/// corpus or grid.
pub fn read_feature_cache(
    root: &Path,
    rep: Representation,
    corpus_hash: &str,
    cycles: &[RespiratoryCycle],
) -> Result<Vec<TfMatrix>> {
    let dir = cache_dir(root, rep);
    let index_path = dir.join(INDEX_FILE);
    let text = std::fs::read_to_string(&index_path).map_err(|e| Error::io_at(&index_path, e))?;
    let index: CacheIndex = serde_json::from_str(&text)?;
    if index.representation != rep || index.grid_rows != GRID_ROWS || index.grid_cols != GRID_COLS {
        return Err(Error::format(format!("{}: cache was built for different features", dir.display())));
    }
    if index.corpus_hash != corpus_hash {
        return Err(Error::format(format!(
            "{}: cache corpus hash {} does not match {corpus_hash}",
            dir.display(),
            index.corpus_hash
        )));
    }
    cycles
        .par_iter()
        .map(|c| {
            let tf = read_tfm(dir.join(format!("{}.tfm", cycle_key(c))))?;
            if (tf.rows(), tf.cols()) != (GRID_ROWS, GRID_COLS) {
                return Err(Error::format(format!("cached matrix for {} has the wrong shape", cycle_key(c))));
            }
            Ok(tf)
        })
        .collect()
}
