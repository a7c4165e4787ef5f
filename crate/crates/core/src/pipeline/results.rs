use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::stats::{mann_whitney_u, wilcoxon_signed_rank, TestReport};
use crate::train::{CvReport, MetricSet};

pub const NA: &str = "NA";
pub const METRICS: [&str; 5] = ["acc", "sen", "spe", "prec", "sco"];

/// One line of a results CSV; metric cells hold a number or `NA`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRow {
    pub task: String,
    pub representation: String,
    pub model: String,
    /// Fold index, `mean` or `pooled`.
    pub fold: String,
    pub acc: String,
    pub sen: String,
    pub spe: String,
    pub prec: String,
    pub sco: String,
    pub epochs_ran: String,
}

pub fn format_metric(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |v| format!("{v:.6}"))
}

impl ResultRow {
    pub fn new(task: &str, representation: &str, model: &str, fold: String, m: &MetricSet, epochs_ran: String) -> Self {
        Self {
            task: task.into(),
            representation: representation.into(),
            model: model.into(),
            fold,
            acc: format_metric(m.acc),
            sen: format_metric(m.sen),
            spe: format_metric(m.spe),
            prec: format_metric(m.prec),
            sco: format_metric(m.sco),
            epochs_ran,
        }
    }

    pub fn metric(&self, name: &str) -> Result<Option<f64>> {
        let cell = match name {
            "acc" => &self.acc,
            "sen" => &self.sen,
            "spe" => &self.spe,
            "prec" => &self.prec,
            "sco" => &self.sco,
            _ => return Err(Error::invalid(format!("unknown metric {name:?}"))),
        };
        if cell == NA {
            return Ok(None);
        }
        cell.parse()
            .map(Some)
            .map_err(|_| Error::format(format!("metric cell {cell:?} is not a number")))
    }

    pub fn fold_index(&self) -> Option<usize> {
        self.fold.parse().ok()
    }

    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.model, self.representation, self.task)
    }
}

/// Fold rows in order, then `mean` and `pooled`.
pub fn rows_from_report(task: &str, representation: &str, model: &str, report: &CvReport) -> Vec<ResultRow> {
    let mut rows: Vec<ResultRow> = report
        .folds
        .iter()
        .map(|f| ResultRow::new(task, representation, model, f.fold.to_string(), &f.metrics, f.epochs_ran.to_string()))
        .collect();
    let mean_epochs = report.folds.iter().map(|f| f.epochs_ran as f64).sum::<f64>() / report.folds.len().max(1) as f64;
    rows.push(ResultRow::new(task, representation, model, "mean".into(), &report.mean, format!("{mean_epochs:.1}")));
    rows.push(ResultRow::new(task, representation, model, "pooled".into(), &report.pooled, NA.into()));
    rows
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::format(e.to_string()))
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    if rows.is_empty() {
        return Err(Error::format(format!("{}: no result rows", path.display())));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub comparison: String,
    #[serde(rename = "U_p")]
    pub u_p: String,
    #[serde(rename = "W_p")]
    pub w_p: String,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub row: StatsRow,
    pub mann_whitney: TestReport,
    /// `None` when every paired difference is zero.
    pub wilcoxon: Option<TestReport>,
}

fn fold_values(rows: &[ResultRow], metric: &str) -> Result<BTreeMap<usize, f64>> {
    let mut out = BTreeMap::new();
    for r in rows {
        if let (Some(f), Some(v)) = (r.fold_index(), r.metric(metric)?) {
            out.insert(f, v);
        }
    }
    Ok(out)
}

fn single_label(rows: &[ResultRow]) -> String {
    let labels: BTreeSet<String> = rows.iter().map(ResultRow::label).collect();
    labels.into_iter().collect::<Vec<_>>().join("+")
}

/// Mann-Whitney U over the per-fold values and Wilcoxon over folds defined in
/// both; significant when both p-values fall below `alpha`.
pub fn compare_results(a: &[ResultRow], b: &[ResultRow], metric: &str, alpha: f64) -> Result<Comparison> {
    let (va, vb) = (fold_values(a, metric)?, fold_values(b, metric)?);
    let xs: Vec<f64> = va.values().copied().collect();
    let ys: Vec<f64> = vb.values().copied().collect();
    let mann_whitney = mann_whitney_u(&xs, &ys, alpha)?;
    let paired: Vec<(f64, f64)> = va.iter().filter_map(|(f, x)| vb.get(f).map(|y| (*x, *y))).collect();
    let (px, py): (Vec<f64>, Vec<f64>) = paired.into_iter().unzip();
    let wilcoxon = match wilcoxon_signed_rank(&px, &py, alpha) {
        Ok(r) => Some(r),
        Err(Error::DegenerateSample(_)) => None,
        Err(e) => return Err(e),
    };
    let row = StatsRow {
        comparison: format!("{} vs {} ({metric})", single_label(a), single_label(b)),
        u_p: format!("{:.6e}", mann_whitney.p_value),
        w_p: wilcoxon.map_or_else(|| NA.to_string(), |w| format!("{:.6e}", w.p_value)),
        significant: mann_whitney.significant && wilcoxon.is_some_and(|w| w.significant),
    };
    Ok(Comparison {
        row,
        mann_whitney,
        wilcoxon,
    })
}

pub fn write_stats_csv(path: &Path, rows: &[StatsRow]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}

/// Summary table: one line per (model, representation), one column per
/// (metric, task), values are fold means in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub header: Vec<String>,
    pub lines: Vec<Vec<String>>,
}

const REP_ORDER: [&str; 4] = ["stft", "mfcc", "cqt", "cochleogram"];
const TASK_ORDER: [&str; 3] = ["wheeze-binary", "crackle-binary", "four-class"];

pub fn build_report(rows: &[ResultRow]) -> Result<ReportTable> {
    let means: Vec<&ResultRow> = rows.iter().filter(|r| r.fold == "mean").collect();
    if means.is_empty() {
        return Err(Error::invalid("no mean rows to report"));
    }
    let rank = |order: &[&str], v: &str| order.iter().position(|o| *o == v).unwrap_or(order.len());
    let mut tasks: Vec<&str> = means.iter().map(|r| r.task.as_str()).collect::<BTreeSet<_>>().into_iter().collect();
    tasks.sort_by_key(|t| (rank(&TASK_ORDER, t), t.to_string()));
    let mut models: Vec<&str> = Vec::new();
    for r in &means {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let mut header = vec!["model".to_string(), "tf".to_string()];
    for m in METRICS {
        for t in &tasks {
            header.push(format!("{m} {t}"));
        }
    }
    let mut lines = Vec::new();
    for model in &models {
        let mut reps: Vec<&str> = means
            .iter()
            .filter(|r| r.model == *model)
            .map(|r| r.representation.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        reps.sort_by_key(|r| (rank(&REP_ORDER, r), r.to_string()));
        for rep in reps {
            let mut line = vec![model.to_string(), rep.to_string()];
            for m in METRICS {
                for t in &tasks {
                    let cell = means
                        .iter()
                        .find(|r| r.model == *model && r.representation == rep && r.task == *t)
                        .map(|r| r.metric(m))
                        .transpose()?
                        .flatten();
                    line.push(cell.map_or_else(|| NA.to_string(), |v| format!("{:.1}", 100.0 * v)));
                }
            }
            lines.push(line);
        }
    }
    Ok(ReportTable { header, lines })
}

impl ReportTable {
    pub fn to_tsv(&self) -> String {
        let mut s = self.header.join("\t");
        s.push('\n');
        for l in &self.lines {
            s.push_str(&l.join("\t"));
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for l in &self.lines {
            w.write_record(l)?;
        }
        write_atomic(path, &w.into_inner().map_err(|e| Error::format(e.to_string()))?)
    }
}
