//! Disagreement-aware evaluation of classifier outputs against
//! non-aggregated human annotations.
//!
//! Questions are split by inter-annotator reliability (Krippendorff's alpha).
//! High-agreement questions are scored with majority-vote precision, recall
//! and F1; low-agreement questions with soft-label Brier score and
//! Jensen-Shannon divergence.

pub mod agreement;
pub mod config;
pub mod disagreement;
pub mod frames;
pub mod ingest;
pub mod model;
pub mod protocol;
pub mod reliability;
pub mod report;
pub mod synth;

pub use agreement::{evaluate_agreement, majority_vote, AgreementMetrics, ConfusionCounts, MajorityLabel, Vote};
pub use config::Config;
pub use disagreement::{brier, evaluate_disagreement, jsd, soft_labels, DistributionMetrics};
pub use frames::{plan_frames, FrameSamplingPlan};
pub use model::{
    validate_bundle, AnnotationTable, Cell, LabelDomain, PredictionRunSet, QuestionSet, QuestionSpec, RunCell,
    SoftLabelPair, ValidationReport,
};
pub use protocol::{run_protocol, ModelPredictions, ProtocolError};
pub use reliability::{
    fleiss_kappa, krippendorff_alpha, partition_questions, CoincidenceMatrix, Partition, ReliabilityScore,
};
pub use report::{emit_report, EvaluationReport, ReportFormat};
