use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extract_and_fix_cycles, parse_annotations, FoldPlan, RespiratoryCycle, PROTOCOL_RATE_HZ};
use crate::error::{Error, Result};
use crate::io_util::{hash_files, write_atomic};
use crate::signal::{read_wav, resample};

/// A `<name>.wav` / `<name>.txt` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordingFiles {
    pub recording_id: String,
    pub wav: PathBuf,
    pub annotations: PathBuf,
}

impl RecordingFiles {
    pub fn patient_id(&self) -> &str {
        patient_id_from_recording(&self.recording_id)
    }
}

/// Text before the first underscore, e.g. `101` for `101_1b1_Al_sc_Meditron`.
pub fn patient_id_from_recording(recording_id: &str) -> &str {
    recording_id.split('_').next().unwrap_or(recording_id)
}

/// Lists paired recordings sorted by name. A `.wav` without its `.txt` is skipped with a warning.
pub fn scan_corpus(dir: &Path) -> Result<Vec<RecordingFiles>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io_at(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io_at(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("wav") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let txt = path.with_extension("txt");
        if !txt.is_file() {
            log::warn!("{}: no annotation file, skipped", path.display());
            continue;
        }
        out.push(RecordingFiles {
            recording_id: stem.to_string(),
            wav: path.clone(),
            annotations: txt,
        });
    }
    if out.is_empty() {
        return Err(Error::invalid(format!("no .wav/.txt pairs in {}", dir.display())));
    }
    out.sort_by(|a, b| a.recording_id.cmp(&b.recording_id));
    Ok(out)
}

fn read_annotations(path: &Path) -> Result<Vec<super::CycleAnnotation>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    parse_annotations(&text).map_err(|e| match e {
        Error::Parse { line, msg } => Error::format(format!("{}:{line}: {msg}", path.display())),
        other => other,
    })
}

fn load_recording(r: &RecordingFiles) -> Result<Vec<RespiratoryCycle>> {
    let anns = read_annotations(&r.annotations)?;
    let w = resample(&read_wav(&r.wav)?, PROTOCOL_RATE_HZ)?;
    extract_and_fix_cycles(&w, &anns, r.patient_id(), &r.recording_id)
}

/// Loads every cycle of the corpus, in recording then annotation order.
pub fn load_corpus(recordings: &[RecordingFiles]) -> Result<Vec<RespiratoryCycle>> {
    let per_recording: Vec<Vec<RespiratoryCycle>> = recordings.par_iter().map(load_recording).collect::<Result<_>>()?;
    Ok(per_recording.into_iter().flatten().collect())
}

/// Content hash of the whole corpus, for run manifests.
pub fn corpus_hash(recordings: &[RecordingFiles]) -> Result<String> {
    let names: Vec<(String, &Path)> = recordings
        .iter()
        .flat_map(|r| {
            [
                (format!("{}.wav", r.recording_id), r.wav.as_path()),
                (format!("{}.txt", r.recording_id), r.annotations.as_path()),
            ]
        })
        .collect();
    hash_files(names.iter().map(|(n, p)| (n.as_str(), *p)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub recording_id: String,
    pub patient_id: String,
    pub cycle_index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub crackle: u8,
    pub wheeze: u8,
    pub fold: usize,
}

/// One row per annotated cycle; reads annotation files only.
pub fn manifest_rows(recordings: &[RecordingFiles], plan: &FoldPlan) -> Result<Vec<ManifestRow>> {
    let mut rows = Vec::new();
    for r in recordings {
        let fold = plan
            .fold_of(r.patient_id())
            .ok_or_else(|| Error::invalid(format!("patient {} has no fold", r.patient_id())))?;
        for (i, a) in read_annotations(&r.annotations)?.into_iter().enumerate() {
            rows.push(ManifestRow {
                recording_id: r.recording_id.clone(),
                patient_id: r.patient_id().to_string(),
                cycle_index: i,
                start_s: a.start_s,
                end_s: a.end_s,
                crackle: a.crackle as u8,
                wheeze: a.wheeze as u8,
                fold,
            });
        }
    }
    Ok(rows)
}

pub fn write_manifest_csv(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(e.to_string()))?;
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::patient_folds;
    use crate::signal::{write_wav, SampleFormat, Waveform};

    #[test]
    fn patient_id_convention() {
        assert_eq!(patient_id_from_recording("101_1b1_Al_sc_Meditron"), "101");
        assert_eq!(patient_id_from_recording("plain"), "plain");
    }

    #[test]
    fn scan_load_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let w = Waveform::new((0..8000 * 3).map(|i| (i as f64 * 0.01).sin() * 0.5).collect(), 8000).unwrap();
        for name in ["101_1b1_Al_sc_Meditron", "102_1b1_Ar_sc_Meditron"] {
            write_wav(&dir.path().join(format!("{name}.wav")), &w, SampleFormat::Pcm16).unwrap();
            fs::write(dir.path().join(format!("{name}.txt")), "0.0\t1.0\t1\t0\n1.0\t2.5\t0\t1\n").unwrap();
        }
        write_wav(&dir.path().join("103_orphan.wav"), &w, SampleFormat::Pcm16).unwrap();

        let recs = scan_corpus(dir.path()).unwrap();
        assert_eq!(recs.len(), 2);
        let cycles = load_corpus(&recs).unwrap();
        assert_eq!(cycles.len(), 4);
        assert!(cycles.iter().all(|c| c.audio.len() == 24_000 && c.audio.sample_rate_hz() == 4000));
        assert_eq!(cycles[2].patient_id, "102");

        let plan = patient_folds(recs.iter().map(|r| r.patient_id()), 2, 1).unwrap();
        let rows = manifest_rows(&recs, &plan).unwrap();
        let out = dir.path().join("out/manifest.csv");
        write_manifest_csv(&out, &rows).unwrap();
        let text = fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("recording_id,patient_id,cycle_index,start_s,end_s,crackle,wheeze,fold\n"));
        assert_eq!(text.lines().count(), 5);

        let h1 = corpus_hash(&recs).unwrap();
        fs::write(dir.path().join("101_1b1_Al_sc_Meditron.txt"), "0.0\t1.0\t0\t0\n").unwrap();
        assert_ne!(h1, corpus_hash(&recs).unwrap());
    }

    #[test]
    fn bad_annotation_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let w = Waveform::new(vec![0.0; 4000], 4000).unwrap();
        write_wav(&dir.path().join("7_a.wav"), &w, SampleFormat::Pcm16).unwrap();
        fs::write(dir.path().join("7_a.txt"), "0\t1\t0\t0\n2\t1\t0\t0\n").unwrap();
        let err = load_corpus(&scan_corpus(dir.path()).unwrap()).unwrap_err().to_string();
        assert!(err.contains("7_a.txt:2"), "{err}");
    }
}
