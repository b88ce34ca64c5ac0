//! Metrics, threshold tuning, cross-validation and measure/performance correlation.

mod correlation;
mod cv;
mod metrics;

pub use correlation::{
    correlate_measures, correlation_table, pearson, CorrelationEntry, CorrelationTable, DatasetMeasures, DatasetRecord,
    Measure, Metric,
};
pub use cv::{
    cross_validate, evaluate_split, guard_split, mean_report, stratified_folds, CvProtocol, CvResult, CvSettings,
    MeanReport,
};
pub use metrics::{
    auc_roc, aucpr, disagreement, f1_score, macro_metrics, tune_threshold, tune_thresholds,
    tune_thresholds_from_scores, EvaluationReport, LabelReport,
};
