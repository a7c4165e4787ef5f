use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use super::cache::{extract_features, read_feature_cache};
use super::results::{rows_from_report, write_results_csv, ResultRow};
use super::{model_input, RunConfig};
use crate::data::{corpus_hash, load_corpus, patient_folds, scan_corpus, FoldPlan, RecordingFiles, RespiratoryCycle};
use crate::error::{Error, Result};
use crate::features::TfMatrix;
use crate::io_util::write_atomic;
use crate::models::{save_checkpoint, Model, ModelConfig};
use crate::train::{
    compute_metrics, cross_validate, evaluate, fold_seed, split_for_fold, train, CvReport, Example, MetricSet,
    TrainReport,
};

/// A scanned and segmented corpus.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub recordings: Vec<RecordingFiles>,
    pub cycles: Vec<RespiratoryCycle>,
    pub corpus_hash: String,
}

pub fn load_corpus_dir(dir: &Path) -> Result<LoadedCorpus> {
    let recordings = scan_corpus(dir)?;
    let hash = corpus_hash(&recordings)?;
    let cycles = load_corpus(&recordings)?;
    info!("{} recordings, {} cycles from {}", recordings.len(), cycles.len(), dir.display());
    Ok(LoadedCorpus {
        recordings,
        cycles,
        corpus_hash: hash,
    })
}

pub fn build_examples(cycles: &[RespiratoryCycle], matrices: &[TfMatrix], cfg: &RunConfig) -> Result<Vec<Example>> {
    let model = cfg.model_config()?;
    cycles
        .iter()
        .zip(matrices)
        .map(|(c, tf)| {
            Ok(Example {
                input: model_input(tf, &model)?,
                label: c.label(cfg.task).value,
                patient_id: c.patient_id.clone(),
            })
        })
        .collect()
}

/// Everything a run consumes: examples and the fold plan.
pub struct PreparedRun {
    pub corpus: LoadedCorpus,
    pub examples: Vec<Example>,
    pub plan: FoldPlan,
}

pub fn prepare_run(cfg: &RunConfig) -> Result<PreparedRun> {
    cfg.validate()?;
    let corpus = load_corpus_dir(&cfg.corpus_dir)?;
    let matrices = match &cfg.features_dir {
        Some(root) => read_feature_cache(root, cfg.representation, &corpus.corpus_hash, &corpus.cycles)?,
        None => extract_features(&corpus.cycles, cfg.representation)?,
    };
    let examples = build_examples(&corpus.cycles, &matrices, cfg)?;
    let plan = patient_folds(corpus.cycles.iter().map(|c| c.patient_id.as_str()), cfg.folds, cfg.seed)?;
    Ok(PreparedRun {
        corpus,
        examples,
        plan,
    })
}

/// Written next to every result so a run can be reproduced.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: RunConfig,
    pub model_config: ModelConfig,
    pub seed: u64,
    pub fold_seeds: BTreeMap<usize, u64>,
    pub corpus_hash: String,
    pub n_cycles: usize,
    pub fold_assignment: BTreeMap<String, usize>,
}

impl RunManifest {
    fn new(command: &str, cfg: &RunConfig, prepared: &PreparedRun, folds: impl IntoIterator<Item = usize>) -> Result<Self> {
        Ok(Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: cfg.clone(),
            model_config: cfg.model_config()?,
            seed: cfg.seed,
            fold_seeds: folds.into_iter().map(|f| (f, fold_seed(cfg.seed, f))).collect(),
            corpus_hash: prepared.corpus.corpus_hash.clone(),
            n_cycles: prepared.examples.len(),
            fold_assignment: prepared.plan.assignment().clone(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("manifest.json"), serde_json::to_string_pretty(self)?.as_bytes())
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io_at(dir, e))
}

pub struct CrossvalOutcome {
    pub report: CvReport,
    pub rows: Vec<ResultRow>,
    pub manifest: RunManifest,
    pub results_path: PathBuf,
}

/// Full patient-level cross-validation; writes `results.csv` and
/// `manifest.json` to the output directory.
pub fn run_crossval(cfg: &RunConfig) -> Result<CrossvalOutcome> {
    let prepared = prepare_run(cfg)?;
    let model_cfg = cfg.model_config()?;
    let report = cross_validate(&prepared.examples, &prepared.plan, &cfg.effective_train(), |seed| {
        Model::new(model_cfg.clone(), seed)
    })?;
    let rows = rows_from_report(cfg.task.name(), cfg.representation.name(), cfg.model.name(), &report);
    ensure_dir(&cfg.output_dir)?;
    let results_path = cfg.output_dir.join("results.csv");
    write_results_csv(&results_path, &rows)?;
    let manifest = RunManifest::new("crossval", cfg, &prepared, 0..cfg.folds)?;
    manifest.write(&cfg.output_dir)?;
    Ok(CrossvalOutcome {
        report,
        rows,
        manifest,
        results_path,
    })
}

pub struct TrainOutcome {
    pub model: Model,
    pub train_report: TrainReport,
    pub test_metrics: MetricSet,
    pub checkpoint_path: PathBuf,
}

/// Trains on a single split with `test_fold` held out; writes
/// `model.rslm`, `results.csv` and `manifest.json`.
pub fn run_train(cfg: &RunConfig, test_fold: usize) -> Result<TrainOutcome> {
    if test_fold >= cfg.folds {
        return Err(Error::invalid(format!("test fold {test_fold} is out of range for {} folds", cfg.folds)));
    }
    let prepared = prepare_run(cfg)?;
    let (tr, va, te) = split_for_fold(&prepared.examples, &prepared.plan, test_fold)?;
    if tr.is_empty() || te.is_empty() {
        return Err(Error::invalid(format!("fold {test_fold} has an empty train or test set")));
    }
    let seed = fold_seed(cfg.seed, test_fold);
    let mut model = Model::new(cfg.model_config()?, seed)?;
    let train_cfg = crate::train::TrainConfig {
        seed,
        ..cfg.effective_train()
    };
    let train_report = train(&mut model, &tr, &va, &train_cfg)?;
    let test_metrics = compute_metrics(&evaluate(&model, &te)?)?;
    ensure_dir(&cfg.output_dir)?;
    let checkpoint_path = cfg.output_dir.join("model.rslm");
    save_checkpoint(&checkpoint_path, &model, seed)?;
    let row = ResultRow::new(
        cfg.task.name(),
        cfg.representation.name(),
        cfg.model.name(),
        test_fold.to_string(),
        &test_metrics,
        train_report.epochs_ran.to_string(),
    );
    write_results_csv(&cfg.output_dir.join("results.csv"), &[row])?;
    RunManifest::new("train", cfg, &prepared, [test_fold])?.write(&cfg.output_dir)?;
    Ok(TrainOutcome {
        model,
        train_report,
        test_metrics,
        checkpoint_path,
    })
}
