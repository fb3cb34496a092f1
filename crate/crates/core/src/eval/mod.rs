//! Metrics, cross-validation and the experiment runner.

mod cv;
mod experiment;
mod metrics;
mod predictions;
mod report;

pub use cv::{cross_validate, cross_validate_folds, CvOutcome, FixedTrain, ForestLearner, Learner};
pub use experiment::{
    ablation_grid, audit_training, file_sha256, run_ablation, run_experiment, run_experiment_with, EvalMode,
    ExperimentConfig, Resources, System,
};
pub use metrics::{accuracy, binary_f1, macro_f1, Confusion, Metrics};
pub use predictions::{load_predictions, score_predictions, write_predictions, PredictionRow, PREDICTION_HEADER};
pub use report::{
    render_table, report_csv_string, resource_kind, write_report_csv, DomainResult, EvalReport, RunManifest,
    REPORT_HEADER,
};
