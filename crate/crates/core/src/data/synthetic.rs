//! Seeded synthetic corpus: tone bursts stand in for wheezes, short noise
//! bursts for crackles, a faint noise floor for normal cycles.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{serialize_annotations, CycleAnnotation};
use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::signal::{write_wav, SampleFormat, Waveform};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub patients: usize,
    pub cycles_per_patient: usize,
    pub sample_rate_hz: u32,
    pub min_cycle_s: f64,
    pub max_cycle_s: f64,
    /// Also emit cycles carrying both events.
    pub include_both: bool,
    pub noise_floor: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            patients: 20,
            cycles_per_patient: 10,
            sample_rate_hz: 8000,
            min_cycle_s: 2.0,
            max_cycle_s: 5.0,
            include_both: false,
            noise_floor: 0.01,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticRecording {
    pub recording_id: String,
    pub audio: Waveform,
    pub annotations: Vec<CycleAnnotation>,
}

fn add_tone(buf: &mut [f64], fs: f64, rng: &mut ChaCha8Rng) {
    let freq = rng.random_range(250.0..900.0);
    let amp = rng.random_range(0.2..0.4);
    let len = ((rng.random_range(0.4..0.9) * fs) as usize).min(buf.len());
    let start = rng.random_range(0..=buf.len() - len);
    for i in 0..len {
        let env = (PI * i as f64 / len as f64).sin();
        buf[start + i] += amp * env * (2.0 * PI * freq * i as f64 / fs).sin();
    }
}

fn add_crackles(buf: &mut [f64], fs: f64, rng: &mut ChaCha8Rng) {
    let count = rng.random_range(6..12);
    let len = ((0.012 * fs) as usize).min(buf.len());
    for _ in 0..count {
        let start = rng.random_range(0..=buf.len() - len);
        let amp = rng.random_range(0.4..0.7);
        for i in 0..len {
            let env = (-(i as f64) / (0.25 * len as f64)).exp();
            let n: f64 = rng.sample(StandardNormal);
            buf[start + i] += amp * env * n;
        }
    }
}

/// Builds one recording per patient with back-to-back annotated cycles.
pub fn generate(cfg: &SyntheticConfig) -> Result<Vec<SyntheticRecording>> {
    if cfg.patients == 0 || cfg.cycles_per_patient == 0 {
        return Err(Error::invalid("synthetic corpus needs patients and cycles"));
    }
    if !(cfg.min_cycle_s > 0.0 && cfg.max_cycle_s >= cfg.min_cycle_s) {
        return Err(Error::invalid("cycle duration range must be positive and ordered"));
    }
    let fs = cfg.sample_rate_hz as f64;
    let n_kinds = if cfg.include_both { 4 } else { 3 };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.patients);
    for p in 0..cfg.patients {
        let mut samples = Vec::new();
        let mut annotations = Vec::new();
        for _ in 0..cfg.cycles_per_patient {
            let dur = if cfg.max_cycle_s > cfg.min_cycle_s {
                rng.random_range(cfg.min_cycle_s..cfg.max_cycle_s)
            } else {
                cfg.min_cycle_s
            };
            let len = (dur * fs).round() as usize;
            let mut buf: Vec<f64> = (0..len)
                .map(|_| cfg.noise_floor * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let kind = rng.random_range(0..n_kinds);
            let (crackle, wheeze) = (kind == 1 || kind == 3, kind == 2 || kind == 3);
            if wheeze {
                add_tone(&mut buf, fs, &mut rng);
            }
            if crackle {
                add_crackles(&mut buf, fs, &mut rng);
            }
            let start = samples.len();
            samples.extend(buf.iter().map(|v| v.clamp(-1.0, 1.0)));
            annotations.push(CycleAnnotation {
                start_s: start as f64 / fs,
                end_s: samples.len() as f64 / fs,
                crackle,
                wheeze,
            });
        }
        out.push(SyntheticRecording {
            recording_id: format!("{}_1b1_Syn_sc_Synth", 101 + p),
            audio: Waveform::new(samples, cfg.sample_rate_hz)?,
            annotations,
        });
    }
    Ok(out)
}

/// Writes the corpus as `<name>.wav` (PCM16) / `<name>.txt` pairs.
pub fn write_corpus(dir: &Path, recordings: &[SyntheticRecording]) -> Result<()> {
    for r in recordings {
        write_wav(dir.join(format!("{}.wav", r.recording_id)), &r.audio, SampleFormat::Pcm16)?;
        write_atomic(
            &dir.join(format!("{}.txt", r.recording_id)),
            serialize_annotations(&r.annotations).as_bytes(),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_corpus, scan_corpus, ClassHistogram};

    #[test]
    fn deterministic_and_well_formed() {
        let cfg = SyntheticConfig {
            patients: 3,
            cycles_per_patient: 4,
            ..Default::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.len(), 3);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.audio, y.audio);
            assert_eq!(x.annotations, y.annotations);
            assert_eq!(x.annotations.len(), 4);
            let last = x.annotations.last().unwrap();
            assert!((last.end_s - x.audio.duration_s()).abs() < 1e-9);
        }
    }

    #[test]
    fn class_mix_and_disk_round_trip() {
        let cfg = SyntheticConfig {
            patients: 4,
            cycles_per_patient: 6,
            include_both: true,
            max_cycle_s: 2.5,
            ..Default::default()
        };
        let recs = generate(&cfg).unwrap();
        let h = ClassHistogram::from_flags(recs.iter().flat_map(|r| r.annotations.iter().map(|a| (a.crackle, a.wheeze))));
        assert_eq!(h.total, 24);
        assert!(h.normal > 0 && h.crackle > 0 && h.wheeze > 0);

        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path(), &recs).unwrap();
        let cycles = load_corpus(&scan_corpus(dir.path()).unwrap()).unwrap();
        assert_eq!(cycles.len(), 24);
        assert_eq!(cycles[0].patient_id, "101");
    }
}
