use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::chart::{grouped_bar_chart, Series};
use super::cv::{evaluate_folds, prepare_folds, EvalConfig, FoldMetrics};
use crate::classify::{Algorithm, ClassifierSpec};
use crate::corpus::{Dataset, DatasetFingerprint};
use crate::error::{Error, Result};
use crate::pipeline::Representation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub accuracy: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    pub train_time_s: f64,
}

impl MeanMetrics {
    pub fn of(folds: &[FoldMetrics]) -> Option<Self> {
        if folds.is_empty() {
            return None;
        }
        let n = folds.len() as f64;
        let avg = |f: fn(&FoldMetrics) -> f64| folds.iter().map(f).sum::<f64>() / n;
        Some(MeanMetrics {
            accuracy: avg(|m| m.accuracy),
            precision_macro: avg(|m| m.precision_macro),
            recall_macro: avg(|m| m.recall_macro),
            f1_macro: avg(|m| m.f1_macro),
            train_time_s: avg(|m| m.train_time_s),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub representation: Representation,
    pub algorithm: Algorithm,
    pub spec: ClassifierSpec,
    pub folds: Vec<FoldMetrics>,
    /// Absent when the row failed.
    pub mean: Option<MeanMetrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: EvalConfig,
    pub fingerprint: DatasetFingerprint,
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    pub fn row(
        &self,
        representation: Representation,
        algorithm: Algorithm,
    ) -> Option<&BenchmarkRow> {
        self.rows
            .iter()
            .find(|r| r.representation == representation && r.algorithm == algorithm)
    }
}

/// Default specs for every representation and algorithm, in report order.
pub fn default_specs() -> Vec<(Representation, ClassifierSpec)> {
    Representation::ALL
        .iter()
        .flat_map(|&r| {
            Algorithm::ALL
                .iter()
                .map(move |&a| (r, ClassifierSpec::default_for(a)))
        })
        .collect()
}

/// Cross-validates every requested row. Vectorized folds are shared by all
/// rows of a representation. A failing row is recorded with its error and
/// the remaining rows still run.
pub fn benchmark_all(
    dataset: &Dataset,
    config: &EvalConfig,
    specs: Option<&[(Representation, ClassifierSpec)]>,
) -> Result<BenchmarkReport> {
    let specs = specs.map(<[_]>::to_vec).unwrap_or_else(default_specs);
    let mut rows = Vec::with_capacity(specs.len());
    for representation in Representation::ALL {
        let wanted: Vec<&ClassifierSpec> = specs
            .iter()
            .filter(|(r, _)| *r == representation)
            .map(|(_, s)| s)
            .collect();
        if wanted.is_empty() {
            continue;
        }
        log::info!(
            "vectorizing {} folds for {representation}",
            config.cv.fold_count
        );
        let prepared = prepare_folds(dataset, representation, config);
        for spec in wanted {
            let outcome = prepared.as_ref().map_err(Error::to_string).and_then(|p| {
                log::info!("cross-validating {representation}:{}", spec.algorithm());
                spec.validate()
                    .and_then(|_| evaluate_folds(p, spec))
                    .map_err(|e| e.to_string())
            });
            let (folds, error) = match outcome {
                Ok(folds) => (folds, None),
                Err(e) => {
                    log::warn!("{representation}:{} failed: {e}", spec.algorithm());
                    (Vec::new(), Some(e))
                }
            };
            rows.push(BenchmarkRow {
                representation,
                algorithm: spec.algorithm(),
                spec: *spec,
                mean: MeanMetrics::of(&folds),
                folds,
                error,
            });
        }
    }
    Ok(BenchmarkReport {
        config: config.clone(),
        fingerprint: dataset.fingerprint(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg];
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "svg" => Ok(ReportFormat::Svg),
            _ => Err(format!(
                "unknown report format `{s}` (expected csv, json or svg)"
            )),
        }
    }
}

pub const SUMMARY_COLUMNS: [&str; 7] = [
    "representation",
    "algorithm",
    "accuracy",
    "precision_macro",
    "recall_macro",
    "f1_macro",
    "train_time_s",
];

pub const FOLD_COLUMNS: [&str; 8] = [
    "representation",
    "algorithm",
    "fold_index",
    "accuracy",
    "precision_macro",
    "recall_macro",
    "f1_macro",
    "train_time_s",
];

/// (file stem, chart title, y-axis label, value)
type ChartSpec = (
    &'static str,
    &'static str,
    &'static str,
    fn(&MeanMetrics) -> f64,
);

const CHARTS: [ChartSpec; 5] = [
    ("accuracy", "Mean accuracy", "accuracy", |m| m.accuracy),
    ("precision", "Mean macro precision", "precision", |m| {
        m.precision_macro
    }),
    ("recall", "Mean macro recall", "recall", |m| m.recall_macro),
    ("f1", "Mean macro F1", "F1 score", |m| m.f1_macro),
    (
        "train_time",
        "Mean training time per fold",
        "seconds",
        |m| m.train_time_s,
    ),
];

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema(format!("{other:?}")),
    })
}

// `Display` for f64 prints the shortest text that parses back to the same value.
fn num(x: f64) -> String {
    x.to_string()
}

fn write_summary_csv(report: &BenchmarkReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for row in &report.rows {
        let mut record = vec![row.representation.to_string(), row.algorithm.to_string()];
        match &row.mean {
            Some(m) => record.extend(
                [
                    m.accuracy,
                    m.precision_macro,
                    m.recall_macro,
                    m.f1_macro,
                    m.train_time_s,
                ]
                .map(num),
            ),
            None => record.extend(std::iter::repeat_n(String::new(), 5)),
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_folds_csv(report: &BenchmarkReport, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(FOLD_COLUMNS)?;
    for row in &report.rows {
        for f in &row.folds {
            let mut record = vec![
                row.representation.to_string(),
                row.algorithm.to_string(),
                f.fold_index.to_string(),
            ];
            record.extend(
                [
                    f.accuracy,
                    f.precision_macro,
                    f.recall_macro,
                    f.f1_macro,
                    f.train_time_s,
                ]
                .map(num),
            );
            w.write_record(&record)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the requested report files into `dir` (created if needed) and
/// returns their paths.
pub fn emit_report(
    report: &BenchmarkReport,
    dir: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if formats.contains(&ReportFormat::Csv) {
        let summary = dir.join("report.csv");
        write_summary_csv(report, &summary)?;
        let folds = dir.join("folds.csv");
        write_folds_csv(report, &folds)?;
        written.extend([summary, folds]);
    }
    if formats.contains(&ReportFormat::Json) {
        let path = dir.join("report.json");
        write_file(&path, &serde_json::to_vec_pretty(report)?)?;
        written.push(path);
    }
    if formats.contains(&ReportFormat::Svg) {
        let groups: Vec<String> = Algorithm::ALL.iter().map(|a| a.to_string()).collect();
        for (stem, title, axis, value) in CHARTS {
            let series: Vec<Series> = Representation::ALL
                .iter()
                .map(|&r| Series {
                    name: r.to_string(),
                    values: Algorithm::ALL
                        .iter()
                        .map(|&a| {
                            report
                                .row(r, a)
                                .and_then(|row| row.mean.as_ref())
                                .map(value)
                        })
                        .collect(),
                })
                .collect();
            let path = dir.join(format!("{stem}.svg"));
            write_file(
                &path,
                grouped_bar_chart(title, axis, &groups, &series).as_bytes(),
            )?;
            written.push(path);
        }
    }
    Ok(written)
}
