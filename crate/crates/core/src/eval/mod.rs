//! Metrics, k-fold cross-validation and the benchmark matrix.

mod chart;
mod cv;
mod metrics;
mod report;

pub use cv::{
    cross_validate, evaluate_folds, prepare_folds, EvalConfig, FoldMetrics, PreparedFold,
    PreparedFolds,
};
pub use metrics::{
    accuracy, confusion_matrix, macro_f1, macro_precision, macro_recall, score, Scores,
};
pub use report::{
    benchmark_all, default_specs, emit_report, BenchmarkReport, BenchmarkRow, MeanMetrics,
    ReportFormat, FOLD_COLUMNS, SUMMARY_COLUMNS,
};
