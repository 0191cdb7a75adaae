//! Consensus evaluation for high-agreement questions: majority vote on both
//! the human panel and the model runs, then positive-class precision/recall/F1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{tally, AnnotationTable, PredictionRunSet, QuestionSpec};
use crate::report::{ExclusionReason, Side};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgreementError {
    #[error("no votes to aggregate")]
    EmptyVotes,
    #[error("question `{0}`: every item was excluded")]
    NoEvaluableItems(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "label", rename_all = "snake_case")]
pub enum Vote {
    Winner(String),
    Tie,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityLabel {
    pub vote: Vote,
    /// Votes for the top category (shared by the tied categories on a tie).
    pub support: usize,
    pub total: usize,
}

impl MajorityLabel {
    pub fn winner(&self) -> Option<&str> {
        match &self.vote {
            Vote::Winner(l) => Some(l),
            Vote::Tie => None,
        }
    }
}

/// Strict plurality over the non-missing votes (`None` entries are skipped).
pub fn majority_vote<'a, I>(votes: I) -> Result<MajorityLabel, AgreementError>
where
    I: IntoIterator<Item = Option<&'a str>>,
{
    let counts = tally(votes.into_iter().flatten());
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(AgreementError::EmptyVotes);
    }
    let support = *counts.values().max().unwrap_or(&0);
    let mut top = counts.iter().filter(|(_, &c)| c == support);
    let first = top.next().map(|(l, _)| l.to_string());
    let vote = match (first, top.next()) {
        (Some(l), None) => Vote::Winner(l),
        _ => Vote::Tie,
    };
    Ok(MajorityLabel { vote, support, total })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// `tp / (tp + fp)`, or 0 when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `tp / (tp + fn)`, or 0 when there are no positives.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1_score(self.precision(), self.recall())
    }

    fn add(&mut self, predicted_positive: bool, actual_positive: bool) {
        match (predicted_positive, actual_positive) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// An item dropped from one question's evaluation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ItemExclusion {
    pub item: String,
    pub side: Side,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
    pub excluded: Vec<ItemExclusion>,
}

/// Scores the model's majority label against the human majority label on
/// every item both tables share. Ties and empty vote sets on either side
/// exclude the item.
pub fn evaluate_agreement(
    question: &QuestionSpec,
    human: &AnnotationTable,
    model: &PredictionRunSet,
) -> Result<AgreementMetrics, AgreementError> {
    let mut counts = ConfusionCounts::default();
    let mut excluded = Vec::new();
    for (i, item) in human.items().iter().enumerate() {
        let Some(j) = model.item_index(item) else {
            excluded.push(ItemExclusion {
                item: item.clone(),
                side: Side::Model,
                reason: ExclusionReason::MissingPrediction,
            });
            continue;
        };
        let h = majority_vote(human.values(i).map(Some));
        let m = majority_vote(model.values(j).map(Some));
        let mut skip = false;
        for (side, outcome) in [(Side::Human, &h), (Side::Model, &m)] {
            let reason = match outcome {
                Err(_) => Some(ExclusionReason::EmptyVotes),
                Ok(MajorityLabel { vote: Vote::Tie, .. }) => Some(ExclusionReason::Tie),
                Ok(_) => None,
            };
            if let Some(reason) = reason {
                excluded.push(ItemExclusion {
                    item: item.clone(),
                    side,
                    reason,
                });
                skip = true;
            }
        }
        if skip {
            continue;
        }
        let actual = h.as_ref().ok().and_then(|v| v.winner()) == Some(question.positive.as_str());
        let predicted = m.as_ref().ok().and_then(|v| v.winner()) == Some(question.positive.as_str());
        counts.add(predicted, actual);
    }
    for item in model.items().iter().filter(|i| human.item_index(i).is_none()) {
        excluded.push(ItemExclusion {
            item: item.clone(),
            side: Side::Human,
            reason: ExclusionReason::MissingAnnotation,
        });
    }

    if counts.total() == 0 {
        return Err(AgreementError::NoEvaluableItems(question.id.clone()));
    }
    Ok(AgreementMetrics {
        precision: counts.precision(),
        recall: counts.recall(),
        f1: counts.f1(),
        counts,
        excluded,
    })
}
