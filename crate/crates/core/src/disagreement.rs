//! Distribution-sensitive evaluation for low-agreement questions.
//!
//! Each item yields a pair of Bernoulli soft labels: the share of human
//! annotations and the share of valid model runs equal to the positive
//! category. Brier score and Jensen-Shannon divergence are computed per item
//! and averaged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agreement::ItemExclusion;
use crate::model::{AnnotationTable, PredictionRunSet, QuestionSpec, SoftLabelPair};
use crate::report::{ExclusionReason, Side};

/// Logarithm base used for JSD; bounds the divergence to `[0, 1]`.
pub const JSD_LOG_BASE: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DisagreementError {
    #[error("no soft-label pairs to score")]
    EmptyInput,
    #[error("question `{0}`: every item was excluded")]
    NoEvaluableItems(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftLabels {
    pub pairs: Vec<SoftLabelPair>,
    pub excluded: Vec<ItemExclusion>,
}

/// Per-item human and model positive shares for the items both tables hold.
pub fn soft_labels(
    question: &QuestionSpec,
    human: &AnnotationTable,
    model: &PredictionRunSet,
) -> Result<SoftLabels, DisagreementError> {
    let positive = question.positive.as_str();
    let mut pairs = Vec::new();
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
        let (h_pos, h_n) = positive_share(human.values(i), positive);
        let (m_pos, m_n) = positive_share(model.values(j), positive);
        for (side, n) in [(Side::Human, h_n), (Side::Model, m_n)] {
            if n == 0 {
                excluded.push(ItemExclusion {
                    item: item.clone(),
                    side,
                    reason: ExclusionReason::EmptyVotes,
                });
            }
        }
        if let Some(pair) = SoftLabelPair::from_counts(item.clone(), h_pos, h_n, m_pos, m_n) {
            pairs.push(pair);
        }
    }
    for item in model.items().iter().filter(|i| human.item_index(i).is_none()) {
        excluded.push(ItemExclusion {
            item: item.clone(),
            side: Side::Human,
            reason: ExclusionReason::MissingAnnotation,
        });
    }
    if pairs.is_empty() {
        return Err(DisagreementError::NoEvaluableItems(question.id.clone()));
    }
    Ok(SoftLabels { pairs, excluded })
}

fn positive_share<'a>(values: impl Iterator<Item = &'a str>, positive: &str) -> (usize, usize) {
    values.fold((0, 0), |(pos, n), v| (pos + usize::from(v == positive), n + 1))
}

/// Squared difference of two soft labels.
pub fn squared_error(p_model: f64, p_human: f64) -> f64 {
    (p_model - p_human).powi(2)
}

/// Mean squared soft-label error.
pub fn brier(pairs: &[SoftLabelPair]) -> Result<f64, DisagreementError> {
    mean(pairs, |p| squared_error(p.p_model, p.p_human))
}

/// Base-2 Jensen-Shannon divergence between `(p, 1-p)` and `(q, 1-q)`.
pub fn bernoulli_jsd(p: f64, q: f64) -> f64 {
    let mix = [(p + q) / 2.0, 1.0 - (p + q) / 2.0];
    let left = [p, 1.0 - p];
    let right = [q, 1.0 - q];
    let kl = |a: &[f64; 2]| -> f64 {
        a.iter()
            .zip(&mix)
            .filter(|(x, _)| **x > 0.0)
            .map(|(x, m)| x * (x / m).log2())
            .sum()
    };
    // Rounding can leave a tiny negative value for near-identical inputs.
    (0.5 * kl(&left) + 0.5 * kl(&right)).clamp(0.0, 1.0)
}

/// Mean per-item Jensen-Shannon divergence (base 2).
pub fn jsd(pairs: &[SoftLabelPair]) -> Result<f64, DisagreementError> {
    mean(pairs, |p| bernoulli_jsd(p.p_model, p.p_human))
}

fn mean(pairs: &[SoftLabelPair], f: impl Fn(&SoftLabelPair) -> f64) -> Result<f64, DisagreementError> {
    if pairs.is_empty() {
        return Err(DisagreementError::EmptyInput);
    }
    Ok(pairs.iter().map(f).sum::<f64>() / pairs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionMetrics {
    pub brier: f64,
    pub jsd: f64,
    pub n_items: usize,
    pub excluded: Vec<ItemExclusion>,
}

pub fn evaluate_disagreement(
    question: &QuestionSpec,
    human: &AnnotationTable,
    model: &PredictionRunSet,
) -> Result<DistributionMetrics, DisagreementError> {
    let SoftLabels { pairs, excluded } = soft_labels(question, human, model)?;
    Ok(DistributionMetrics {
        brier: brier(&pairs)?,
        jsd: jsd(&pairs)?,
        n_items: pairs.len(),
        excluded,
    })
}
