//! `rsl`: ingestion, features, training, cross-validation, statistics and
//! reporting over respiratory-sound corpora.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use log::{info, warn};
use rsl_core::data::synthetic::{generate, write_corpus, SyntheticConfig};
use rsl_core::data::{manifest_rows, patient_folds, scan_corpus, write_manifest_csv, ClassHistogram};
use rsl_core::features::{read_tfm, render_viridis};
use rsl_core::io_util::write_atomic;
use rsl_core::pipeline::{
    build_report, compare_results, extract_features, load_corpus_dir, read_results_csv, run_crossval, run_train,
    write_feature_cache, write_stats_csv, Representation, RunConfig, METRICS,
};
use rsl_core::stats::DEFAULT_ALPHA;
use rsl_core::{Error, Result};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// Respiratory sound classification experiments.
#[derive(Debug, Parser)]
#[command(name = "rsl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scan a corpus, write the cycle manifest and print the class histogram.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Extract prepared time-frequency matrices into a TFM1 cache.
    Features {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// One representation, or `all`.
        #[arg(long, default_value = "all")]
        representation: String,
    },
    /// Render TFM1 files (a file or a directory of them) as Viridis PNGs.
    Render {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Train on one split and save a checkpoint.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Fold held out for testing; the next fold validates.
        #[arg(long, default_value_t = 0)]
        test_fold: usize,
    },
    /// Patient-level k-fold cross-validation for one grid cell.
    Crossval {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Mann-Whitney U and Wilcoxon signed-rank tests over two results files.
    Stats {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value = "acc")]
        metric: String,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Also write the comparison row as a stats CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge results files into one summary table.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        results: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic labeled corpus (WAV + annotation files).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        patients: usize,
        #[arg(long, default_value_t = 10)]
        cycles: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Also generate cycles carrying both crackles and wheezes.
        #[arg(long)]
        include_both: bool,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

/// Sizes the global rayon pool from `RSL_THREADS` when it is set.
pub fn init_thread_pool() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var("RSL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("RSL_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

pub fn exit_code(e: &Error) -> u8 {
    if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_DATA
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return EXIT_OK;
            }
            if !e.render().to_string().contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return EXIT_USAGE;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest {
            corpus,
            out,
            folds,
            seed,
        } => ingest(&corpus, &out, folds, seed),
        Command::Features {
            corpus,
            out,
            representation,
        } => features(&corpus, &out, &representation),
        Command::Render { input, out, limit } => render(&input, &out, limit),
        Command::Train { run, test_fold } => {
            let cfg = run.load()?;
            let o = run_train(&cfg, test_fold)?;
            println!(
                "fold {test_fold}: {} epochs (best {}), test {}",
                o.train_report.epochs_ran,
                o.train_report.best_epoch,
                describe(&o.test_metrics)
            );
            println!("checkpoint {}", o.checkpoint_path.display());
            Ok(())
        }
        Command::Crossval { run } => {
            let cfg = run.load()?;
            let o = run_crossval(&cfg)?;
            for f in &o.report.folds {
                println!("fold {}: {}", f.fold, describe(&f.metrics));
            }
            println!("mean: {}", describe(&o.report.mean));
            println!("pooled: {}", describe(&o.report.pooled));
            println!("results {}", o.results_path.display());
            Ok(())
        }
        Command::Stats {
            a,
            b,
            metric,
            alpha,
            out,
        } => stats(&a, &b, &metric, alpha, out.as_deref()),
        Command::Report { results, out } => {
            let mut rows = Vec::new();
            for p in &results {
                rows.extend(read_results_csv(p)?);
            }
            let table = build_report(&rows)?;
            print!("{}", table.to_tsv());
            if let Some(out) = out {
                table.write_csv(&out)?;
            }
            Ok(())
        }
        Command::Synth {
            out,
            patients,
            cycles,
            seed,
            include_both,
        } => {
            let cfg = SyntheticConfig {
                patients,
                cycles_per_patient: cycles,
                seed,
                include_both,
                ..SyntheticConfig::default()
            };
            write_corpus(&out, &generate(&cfg)?)?;
            println!("{} recordings, {} cycles in {}", patients, patients * cycles, out.display());
            Ok(())
        }
    }
}

fn describe(m: &rsl_core::train::MetricSet) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"));
    format!(
        "acc {} sen {} spe {} prec {} sco {}",
        cell(m.acc),
        cell(m.sen),
        cell(m.spe),
        cell(m.prec),
        cell(m.sco)
    )
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::IoPath {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn ingest(corpus: &Path, out: &Path, folds: usize, seed: u64) -> Result<()> {
    let recordings = scan_corpus(corpus)?;
    let patients: Vec<&str> = recordings.iter().map(|r| r.patient_id()).collect();
    let distinct = patients.iter().collect::<std::collections::BTreeSet<_>>().len();
    let k = if distinct < folds {
        warn!("{distinct} patients cannot fill {folds} folds; using {distinct}");
        distinct
    } else {
        folds
    };
    let plan = patient_folds(patients, k, seed)?;
    let rows = manifest_rows(&recordings, &plan)?;
    ensure_dir(out)?;
    write_manifest_csv(&out.join("manifest.csv"), &rows)?;
    write_atomic(&out.join("folds.json"), serde_json::to_string_pretty(&plan)?.as_bytes())?;
    let hist = ClassHistogram::from_flags(rows.iter().map(|r| (r.crackle != 0, r.wheeze != 0)));
    write_atomic(&out.join("histogram.tsv"), format!("{hist}\n").as_bytes())?;
    info!("{} recordings, {} patients, {k} folds", recordings.len(), distinct);
    println!("{hist}");
    Ok(())
}

fn features(corpus: &Path, out: &Path, which: &str) -> Result<()> {
    let reps: Vec<Representation> = if which == "all" {
        Representation::ALL.to_vec()
    } else {
        vec![which.parse()?]
    };
    let loaded = load_corpus_dir(corpus)?;
    for rep in reps {
        let matrices = extract_features(&loaded.cycles, rep)?;
        write_feature_cache(out, rep, &loaded.corpus_hash, &loaded.cycles, &matrices)?;
        println!("{rep}: {} matrices", matrices.len());
    }
    Ok(())
}

fn render(input: &Path, out: &Path, limit: Option<usize>) -> Result<()> {
    let mut files: Vec<PathBuf> = if input.is_dir() {
        std::fs::read_dir(input)
            .map_err(|e| Error::IoPath {
                path: input.to_path_buf(),
                source: e,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "tfm"))
            .collect()
    } else {
        vec![input.to_path_buf()]
    };
    files.sort();
    files.truncate(limit.unwrap_or(usize::MAX));
    if files.is_empty() {
        return Err(Error::Format(format!("no .tfm files under {}", input.display())));
    }
    ensure_dir(out)?;
    for f in &files {
        let stem = f.file_stem().unwrap_or_default();
        render_viridis(&read_tfm(f)?, out.join(stem).with_extension("png"))?;
    }
    println!("{} images in {}", files.len(), out.display());
    Ok(())
}

fn stats(a: &Path, b: &Path, metric: &str, alpha: f64, out: Option<&Path>) -> Result<()> {
    if !METRICS.contains(&metric) {
        return Err(Error::InvalidArgument(format!("metric must be one of {METRICS:?}")));
    }
    let c = compare_results(&read_results_csv(a)?, &read_results_csv(b)?, metric, alpha)?;
    println!("{}", c.row.comparison);
    println!("mann-whitney-u: {}", c.mann_whitney);
    match &c.wilcoxon {
        Some(w) => println!("wilcoxon-signed-rank: {w}"),
        None => println!("wilcoxon-signed-rank: undefined (all paired differences are zero)"),
    }
    if let Some(out) = out {
        write_stats_csv(out, &[c.row])?;
    }
    Ok(())
}
