//! Dataset handling under the ICBHI protocol: cycle annotations, fixed-length
//! 4 kHz cycles, task labels, patient-wise folds and the class histogram.

mod annotations;
mod corpus;
mod cycles;
mod folds;
mod labels;
pub mod synthetic;

pub use annotations::{parse_annotations, serialize_annotations, CycleAnnotation};
pub use corpus::{
    corpus_hash, load_corpus, manifest_rows, patient_id_from_recording, scan_corpus, write_manifest_csv, ManifestRow,
    RecordingFiles,
};
pub use cycles::{extract_and_fix_cycles, fix_length, RespiratoryCycle, CYCLE_SAMPLES, CYCLE_SECONDS, PROTOCOL_RATE_HZ};
pub use folds::{patient_folds, FoldPlan};
pub use labels::{assign_label, class_histogram, ClassHistogram, Label, Task};
