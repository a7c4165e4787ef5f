//! End-to-end experiment plumbing: feature caches, run configs, result files.

mod cache;
mod config;
mod features;
mod results;
mod run;

pub use cache::{cache_dir, cycle_key, extract_features, read_feature_cache, write_feature_cache};
pub use config::RunConfig;
pub use features::{model_input, FeatureExtractor, Representation, GRID_COLS, GRID_ROWS};
pub use results::{
    build_report, compare_results, format_metric, read_results_csv, rows_from_report, write_results_csv,
    write_stats_csv, Comparison, ReportTable, ResultRow, StatsRow, METRICS, NA,
};
pub use run::{
    build_examples, load_corpus_dir, prepare_run, run_crossval, run_train, CrossvalOutcome, LoadedCorpus, PreparedRun,
    RunManifest, TrainOutcome,
};
