//! End-to-end evaluation: alpha per question, partition at the threshold,
//! consensus metrics for the agreement subset and soft-label metrics for the
//! disagreement subset.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::agreement::{evaluate_agreement, ItemExclusion};
use crate::config::Config;
use crate::disagreement::evaluate_disagreement;
use crate::ingest::IngestDiagnostic;
use crate::model::{validate_bundle, AnnotationTable, Diagnostic, PredictionRunSet, QuestionSet, ValidationReport};
use crate::reliability::{krippendorff_alpha, Subset};
use crate::report::{
    AgreementRow, ConfigEcho, DisagreementRow, EvaluationReport, ExclusionEntry, ExclusionReason, ModelInfo,
    ModelResult, PartitionEntry, QuestionResults, ReportDiagnostic, Side,
};

pub const ANNOTATION_SOURCE: &str = "annotations";

/// One model's prediction tables plus what ingestion had to say about them.
#[derive(Debug, Clone)]
pub struct ModelPredictions {
    pub name: String,
    pub family: String,
    pub tables: Vec<PredictionRunSet>,
    pub diagnostics: Vec<IngestDiagnostic>,
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("no model predictions supplied")]
    NoModels,
    #[error("duplicate model name `{0}`")]
    DuplicateModel(String),
    #[error("bundle is not evaluable: no question can be scored for any model")]
    NotEvaluable(Vec<(String, ValidationReport)>),
}

fn describe(d: &Diagnostic) -> String {
    match d {
        Diagnostic::MissingPrediction { item } => format!("item `{item}` has no prediction"),
        Diagnostic::MissingAnnotation { item } => format!("item `{item}` has no annotation"),
        Diagnostic::UnknownCategory {
            item, source, label, ..
        } => format!("item `{item}`: `{source}` used unknown category `{label}`"),
        Diagnostic::DuplicateTable { human: true } => "more than one annotation table".into(),
        Diagnostic::DuplicateTable { human: false } => "more than one prediction table".into(),
        Diagnostic::NoAnnotations => "no annotations".into(),
        Diagnostic::NoPredictions => "no predictions".into(),
        Diagnostic::UnknownQuestion { question, .. } => format!("undeclared question `{question}`"),
    }
}

/// Runs the whole protocol.
///
/// Inputs are canonicalised (items, annotators and runs sorted) first, so the
/// report depends only on the content of the inputs, not on their row order.
/// Per-question failures become report entries; only a bundle in which no
/// question can be scored for any model is an error.
pub fn run_protocol(
    annotations: &[AnnotationTable],
    annotation_diagnostics: &[IngestDiagnostic],
    models: &[ModelPredictions],
    config: &Config,
) -> Result<EvaluationReport, ProtocolError> {
    config.validate().map_err(|e| ProtocolError::Config(e.to_string()))?;
    let questions: QuestionSet = config
        .question_set()
        .map_err(|e| ProtocolError::Config(e.to_string()))?;
    if models.is_empty() {
        return Err(ProtocolError::NoModels);
    }
    let mut names = BTreeSet::new();
    for m in models {
        if !names.insert(m.name.as_str()) {
            return Err(ProtocolError::DuplicateModel(m.name.clone()));
        }
    }

    let annotations: Vec<AnnotationTable> = annotations.iter().map(AnnotationTable::sorted).collect();
    let specs: Vec<_> = questions.iter().cloned().collect();
    let validations: Vec<(String, ValidationReport)> = models
        .iter()
        .map(|m| {
            let tables: Vec<_> = m.tables.iter().map(PredictionRunSet::sorted).collect();
            (m.name.clone(), validate_bundle(&annotations, &tables, &specs))
        })
        .collect();
    if !validations.iter().any(|(_, v)| v.any_evaluable()) {
        return Err(ProtocolError::NotEvaluable(validations));
    }

    let mut diagnostics: BTreeSet<ReportDiagnostic> = BTreeSet::new();
    let mut exclusions: BTreeSet<ExclusionEntry> = BTreeSet::new();
    for d in annotation_diagnostics {
        diagnostics.insert(ReportDiagnostic {
            source: ANNOTATION_SOURCE.into(),
            question: None,
            message: d.summary(),
        });
    }
    for m in models {
        for d in &m.diagnostics {
            diagnostics.insert(ReportDiagnostic {
                source: m.name.clone(),
                question: None,
                message: d.summary(),
            });
        }
        for t in &m.tables {
            if t.runs().len() != config.expected_runs {
                diagnostics.insert(ReportDiagnostic {
                    source: m.name.clone(),
                    question: Some(t.question().to_string()),
                    message: format!("{} runs, expected {}", t.runs().len(), config.expected_runs),
                });
            }
        }
    }
    for (name, v) in &validations {
        for d in &v.stray {
            let (source, question) = match d {
                Diagnostic::UnknownQuestion { question, human: true } => (ANNOTATION_SOURCE.to_string(), question),
                Diagnostic::UnknownQuestion { question, .. } => (name.clone(), question),
                _ => continue,
            };
            diagnostics.insert(ReportDiagnostic {
                source,
                question: Some(question.clone()),
                message: describe(d),
            });
        }
        for q in &v.questions {
            for d in &q.diagnostics {
                // Item-level gaps are reported through the exclusion log.
                if matches!(
                    d,
                    Diagnostic::MissingPrediction { .. } | Diagnostic::MissingAnnotation { .. }
                ) {
                    continue;
                }
                let human_side = matches!(
                    d,
                    Diagnostic::NoAnnotations
                        | Diagnostic::DuplicateTable { human: true }
                        | Diagnostic::UnknownCategory { human: true, .. }
                );
                diagnostics.insert(ReportDiagnostic {
                    source: if human_side {
                        ANNOTATION_SOURCE.into()
                    } else {
                        name.clone()
                    },
                    question: Some(q.question.clone()),
                    message: describe(d),
                });
                if let Diagnostic::UnknownCategory { item, human, .. } = d {
                    exclusions.insert(ExclusionEntry {
                        question: q.question.clone(),
                        item: item.clone(),
                        model: (!human).then(|| name.clone()),
                        side: if *human { Side::Human } else { Side::Model },
                        reason: ExclusionReason::UnknownCategory,
                    });
                }
            }
        }
    }

    let mut partition = Vec::new();
    let mut agreement = Vec::new();
    let mut disagreement = Vec::new();
    for spec in questions.iter() {
        let human_tables: Vec<_> = annotations.iter().filter(|t| t.question() == spec.id).collect();
        let human_unknown = validations.iter().any(|(_, v)| {
            v.question(&spec.id).is_some_and(|q| {
                q.diagnostics
                    .iter()
                    .any(|d| matches!(d, Diagnostic::UnknownCategory { human: true, .. }))
            })
        });
        let human = match human_tables.as_slice() {
            [only] if !human_unknown => *only,
            [] => {
                partition.push(unscored(&spec.id, "no annotations"));
                continue;
            }
            [_] => {
                partition.push(unscored(&spec.id, "annotations use unknown categories"));
                continue;
            }
            _ => {
                partition.push(unscored(&spec.id, "more than one annotation table"));
                continue;
            }
        };
        let score = match krippendorff_alpha(human) {
            Ok(s) => s,
            Err(e) => {
                partition.push(unscored(&spec.id, &e.to_string()));
                continue;
            }
        };
        let subset = if score.value >= config.threshold {
            Subset::Agreement
        } else {
            Subset::Disagreement
        };
        partition.push(PartitionEntry {
            question: spec.id.clone(),
            alpha: Some(score.value),
            n_pairable: score.n_pairable,
            n_units: score.n_units,
            subset: Some(subset),
            error: None,
        });

        let mut agree_results = Vec::new();
        let mut disagree_results = Vec::new();
        for (m, (_, validation)) in models.iter().zip(&validations) {
            let evaluable = validation.question(&spec.id).is_some_and(|q| q.evaluable);
            let model_table = m
                .tables
                .iter()
                .find(|t| t.question() == spec.id)
                .map(PredictionRunSet::sorted);
            let model_table = match (evaluable, model_table) {
                (true, Some(t)) => t,
                _ => {
                    let reason = validation
                        .question(&spec.id)
                        .and_then(|q| q.diagnostics.iter().find(|d| !is_item_gap(d)))
                        .map_or("no items shared with the annotations".to_string(), describe);
                    match subset {
                        Subset::Agreement => agree_results.push(failed(&m.name, reason)),
                        Subset::Disagreement => disagree_results.push(failed(&m.name, reason)),
                    }
                    continue;
                }
            };
            match subset {
                Subset::Agreement => match evaluate_agreement(spec, human, &model_table) {
                    Ok(r) => {
                        log_exclusions(&mut exclusions, &spec.id, &m.name, &r.excluded);
                        agree_results.push(ModelResult {
                            model: m.name.clone(),
                            metrics: Some(AgreementRow {
                                precision: r.precision,
                                recall: r.recall,
                                f1: r.f1,
                                tp: r.counts.tp,
                                fp: r.counts.fp,
                                fn_: r.counts.fn_,
                                tn: r.counts.tn,
                            }),
                            error: None,
                        });
                    }
                    Err(e) => agree_results.push(failed(&m.name, e.to_string())),
                },
                Subset::Disagreement => match evaluate_disagreement(spec, human, &model_table) {
                    Ok(r) => {
                        log_exclusions(&mut exclusions, &spec.id, &m.name, &r.excluded);
                        disagree_results.push(ModelResult {
                            model: m.name.clone(),
                            metrics: Some(DisagreementRow {
                                brier: r.brier,
                                jsd: r.jsd,
                                n_items: r.n_items,
                            }),
                            error: None,
                        });
                    }
                    Err(e) => disagree_results.push(failed(&m.name, e.to_string())),
                },
            }
        }
        match subset {
            Subset::Agreement => agreement.push(QuestionResults {
                question: spec.id.clone(),
                results: agree_results,
            }),
            Subset::Disagreement => disagreement.push(QuestionResults {
                question: spec.id.clone(),
                results: disagree_results,
            }),
        }
    }

    Ok(EvaluationReport {
        config: ConfigEcho {
            threshold: config.threshold,
            precision: config.precision,
            expected_runs: config.expected_runs,
            jsd_log_base: config.jsd_log_base,
            models: models
                .iter()
                .map(|m| ModelInfo {
                    name: m.name.clone(),
                    family: m.family.clone(),
                })
                .collect(),
        },
        partition,
        agreement,
        disagreement,
        exclusions: exclusions.into_iter().collect(),
        diagnostics: diagnostics.into_iter().collect(),
    })
}

fn is_item_gap(d: &Diagnostic) -> bool {
    matches!(
        d,
        Diagnostic::MissingPrediction { .. } | Diagnostic::MissingAnnotation { .. }
    )
}

fn unscored(question: &str, reason: &str) -> PartitionEntry {
    PartitionEntry {
        question: question.to_string(),
        alpha: None,
        n_pairable: 0,
        n_units: 0,
        subset: None,
        error: Some(reason.to_string()),
    }
}

fn failed<R>(model: &str, reason: String) -> ModelResult<R> {
    ModelResult {
        model: model.to_string(),
        metrics: None,
        error: Some(reason),
    }
}

/// Human-side ties and empty panels do not depend on the model, so they are
/// logged once without a model name.
fn log_exclusions(log: &mut BTreeSet<ExclusionEntry>, question: &str, model: &str, excluded: &[ItemExclusion]) {
    for e in excluded {
        let model_specific = e.side == Side::Model || e.reason == ExclusionReason::MissingAnnotation;
        log.insert(ExclusionEntry {
            question: question.to_string(),
            item: e.item.clone(),
            model: model_specific.then(|| model.to_string()),
            side: e.side,
            reason: e.reason,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::QuestionConfig;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn config(questions: &[&str]) -> Config {
        Config {
            questions: questions.iter().map(|q| QuestionConfig::binary(*q)).collect(),
            ..Config::default()
        }
    }

    fn unanimous(q: &str, n: usize) -> (AnnotationTable, PredictionRunSet) {
        let rows: Vec<Vec<Option<&str>>> = (0..n)
            .map(|i| vec![Some(if i % 2 == 0 { "yes" } else { "no" }); 5])
            .collect();
        (
            AnnotationTable::from_options(q, ids("i", n), ids("a", 5), &rows).unwrap(),
            PredictionRunSet::from_options(q, ids("i", n), ids("r", 5), &rows).unwrap(),
        )
    }

    #[test]
    fn perfect_agreement_end_to_end() {
        let (h1, m1) = unanimous("q1", 8);
        let (h2, m2) = unanimous("q2", 8);
        let model = ModelPredictions {
            name: "m".into(),
            family: "f".into(),
            tables: vec![m1, m2],
            diagnostics: vec![],
        };
        let r = run_protocol(&[h1, h2], &[], &[model], &config(&["q1", "q2"])).unwrap();
        assert!(r.disagreement.is_empty());
        assert_eq!(r.agreement.len(), 2);
        for q in &r.agreement {
            let m = q.results[0].metrics.as_ref().unwrap();
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        }
        assert!(r.exclusions.is_empty());
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn nothing_evaluable_is_an_error() {
        let (h, _) = unanimous("q1", 3);
        let (_, m) = unanimous("other", 3);
        let model = ModelPredictions {
            name: "m".into(),
            family: "f".into(),
            tables: vec![m],
            diagnostics: vec![],
        };
        assert!(matches!(
            run_protocol(&[h], &[], &[model], &config(&["q1"])),
            Err(ProtocolError::NotEvaluable(_))
        ));
    }

    #[test]
    fn per_question_failures_are_entries() {
        let (h1, m1) = unanimous("q1", 4);
        let h2 = AnnotationTable::from_options(
            "q2",
            ids("i", 2),
            ids("a", 2),
            &[vec![Some("yes"), None], vec![None, Some("no")]],
        )
        .unwrap();
        let model = ModelPredictions {
            name: "m".into(),
            family: "f".into(),
            tables: vec![m1],
            diagnostics: vec![],
        };
        let r = run_protocol(&[h1, h2], &[], &[model], &config(&["q1", "q2"])).unwrap();
        let q2 = r.partition.iter().find(|p| p.question == "q2").unwrap();
        assert!(q2.subset.is_none());
        assert!(q2.error.as_ref().unwrap().contains("no item with two or more"));
        assert_eq!(r.agreement.len(), 1);
    }

    #[test]
    fn duplicate_model_names_rejected() {
        let (h, m) = unanimous("q1", 3);
        let model = ModelPredictions {
            name: "m".into(),
            family: "f".into(),
            tables: vec![m],
            diagnostics: vec![],
        };
        let err = run_protocol(&[h], &[], &[model.clone(), model], &config(&["q1"])).unwrap_err();
        assert!(matches!(err, ProtocolError::DuplicateModel(_)));
    }
}
