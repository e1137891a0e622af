//! Fold plans, confusion-matrix metrics, complexity selection by
//! cross-validation and performance estimation by cross-test.

mod folds;
mod metrics;
mod protocol;
mod report;

pub use folds::{make_folds, FoldPlan};
pub use metrics::{
    aggregate, compare_classifiers, metrics, summarize, ConfusionMatrix, Metrics, Summary,
    MAX_SIGN_FLIP_FOLDS,
};
pub use protocol::{
    candidate_grid, cross_test, cross_validate_complexity, features_or_fallback, run_full_protocol,
    Architecture, Candidate, CandidateScore, ComplexityChoice, CrossTestResult, CvScoring,
    EvaluationReport, FittedModel, FoldOutcome, Model, NeuralPipeline, Pipeline, ProtocolConfig,
    SelectionMode,
};
