//! Inter-annotator reliability: Krippendorff's alpha (nominal, tolerant of
//! missing cells) and Fleiss' kappa (complete tables only).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AnnotationTable, Cell};

/// Conventional cut-off between reliable and unreliable coding.
pub const DEFAULT_THRESHOLD: f64 = 0.667;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReliabilityError {
    #[error("question `{0}` has no item with two or more annotations")]
    NoPairableValues(String),
    #[error("question `{question}` has a missing cell at item `{item}`; Fleiss' kappa needs complete data")]
    IncompleteData { question: String, item: String },
    #[error("question `{0}` needs at least two annotators and one item")]
    TooSmall(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReliabilityMethod {
    KrippendorffAlpha,
    FleissKappa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityScore {
    pub question: String,
    pub method: ReliabilityMethod,
    /// Coefficient value; at most 1, negative for systematic disagreement.
    pub value: f64,
    /// Number of values that entered the computation.
    pub n_pairable: usize,
    /// Items contributing at least one pair.
    pub n_units: usize,
}

/// Symmetric category x category tally of within-unit value pairs, each
/// unit of `m` values contributing its ordered pairs with weight `1/(m-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceMatrix {
    values: Vec<String>,
    counts: Vec<Vec<f64>>,
    n_units: usize,
}

impl CoincidenceMatrix {
    pub fn from_table(table: &AnnotationTable) -> Self {
        // Sorted value list keeps the summation order independent of cell order.
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for (_, row) in table.rows() {
            for l in row.iter().filter_map(Cell::label) {
                index.entry(l).or_insert(0);
            }
        }
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let k = index.len();
        let mut counts = vec![vec![0.0; k]; k];
        let mut n_units = 0;
        for (_, row) in table.rows() {
            let mut unit = vec![0usize; k];
            let mut m = 0usize;
            for l in row.iter().filter_map(Cell::label) {
                unit[index[l]] += 1;
                m += 1;
            }
            if m < 2 {
                continue;
            }
            n_units += 1;
            let w = 1.0 / (m - 1) as f64;
            for c in 0..k {
                if unit[c] == 0 {
                    continue;
                }
                for d in 0..k {
                    let pairs = if c == d {
                        unit[c] * (unit[c] - 1)
                    } else {
                        unit[c] * unit[d]
                    };
                    counts[c][d] += pairs as f64 * w;
                }
            }
        }
        Self {
            values: index.into_keys().map(str::to_string).collect(),
            counts,
            n_units,
        }
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn get(&self, a: &str, b: &str) -> f64 {
        match (self.position(a), self.position(b)) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0.0,
        }
    }

    fn position(&self, v: &str) -> Option<usize> {
        self.values.iter().position(|x| x == v)
    }

    /// Row sums `n_c`.
    pub fn marginals(&self) -> Vec<f64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Number of pairable values; each unit contributes exactly `m` (up to rounding).
    pub fn total(&self) -> f64 {
        self.marginals().iter().sum()
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }
}

/// Nominal Krippendorff's alpha, `1 - D_o / D_e`.
///
/// Items with fewer than two annotations are skipped. When every pairable
/// value is identical (`D_e = 0`) the result is 1.
pub fn krippendorff_alpha(table: &AnnotationTable) -> Result<ReliabilityScore, ReliabilityError> {
    let cm = CoincidenceMatrix::from_table(table);
    if cm.n_units == 0 {
        return Err(ReliabilityError::NoPairableValues(table.question().to_string()));
    }
    let marg = cm.marginals();
    let n: f64 = marg.iter().sum();
    let k = marg.len();

    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            if c != d {
                observed += cm.counts[c][d];
                expected += marg[c] * marg[d];
            }
        }
    }

    let value = if expected == 0.0 {
        1.0
    } else {
        // D_o / D_e = (observed / n) / (expected / (n (n - 1)))
        1.0 - (n - 1.0) * observed / expected
    };
    Ok(ReliabilityScore {
        question: table.question().to_string(),
        method: ReliabilityMethod::KrippendorffAlpha,
        value,
        n_pairable: n.round() as usize,
        n_units: cm.n_units,
    })
}

/// Fleiss' kappa over the item x category tally. Requires every annotator to
/// label every item; returns 1 when all labels are identical.
pub fn fleiss_kappa(table: &AnnotationTable) -> Result<ReliabilityScore, ReliabilityError> {
    let raters = table.annotators().len();
    if raters < 2 || table.items().is_empty() {
        return Err(ReliabilityError::TooSmall(table.question().to_string()));
    }
    if let Some((item, _)) = table.rows().find(|(_, row)| row.contains(&Cell::Missing)) {
        return Err(ReliabilityError::IncompleteData {
            question: table.question().to_string(),
            item: item.to_string(),
        });
    }

    let mut category_totals: BTreeMap<&str, usize> = BTreeMap::new();
    let mut agreement_sum = 0.0;
    let r = raters as f64;
    for (_, row) in table.rows() {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for l in row.iter().filter_map(Cell::label) {
            *counts.entry(l).or_insert(0) += 1;
            *category_totals.entry(l).or_insert(0) += 1;
        }
        let sq: usize = counts.values().map(|c| c * c).sum();
        agreement_sum += (sq as f64 - r) / (r * (r - 1.0));
    }
    let n_items = table.items().len() as f64;
    let observed = agreement_sum / n_items;
    let total = n_items * r;
    let expected: f64 = category_totals
        .values()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum();

    let value = if category_totals.len() <= 1 {
        1.0
    } else {
        (observed - expected) / (1.0 - expected)
    };
    Ok(ReliabilityScore {
        question: table.question().to_string(),
        method: ReliabilityMethod::FleissKappa,
        value,
        n_pairable: total as usize,
        n_units: table.items().len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    Agreement,
    Disagreement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub threshold: f64,
    /// Questions with a score at or above the threshold, in input order.
    pub agreement: Vec<String>,
    pub disagreement: Vec<String>,
}

impl Partition {
    pub fn subset_of(&self, question: &str) -> Option<Subset> {
        if self.agreement.iter().any(|q| q == question) {
            Some(Subset::Agreement)
        } else if self.disagreement.iter().any(|q| q == question) {
            Some(Subset::Disagreement)
        } else {
            None
        }
    }
}

/// Splits questions at `threshold`; the agreement side is inclusive.
pub fn partition_questions(scores: &[ReliabilityScore], threshold: f64) -> Partition {
    let (agree, disagree): (Vec<_>, Vec<_>) = scores.iter().partition(|s| s.value >= threshold);
    Partition {
        threshold,
        agreement: agree.into_iter().map(|s| s.question.clone()).collect(),
        disagreement: disagree.into_iter().map(|s| s.question.clone()).collect(),
    }
}
