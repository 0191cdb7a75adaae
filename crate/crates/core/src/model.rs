//! Domain types shared by the reliability and evaluation modules.
//!
//! Tables are immutable once built. Human annotations use [`Cell::Missing`]
//! for absent judgements and model runs use [`RunCell::Invalid`] for
//! unparseable output; both are skipped by every count.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("label domain needs at least 2 categories, got {0}")]
    TooFewCategories(usize),
    #[error("duplicate category `{0}` in label domain")]
    DuplicateCategory(String),
    #[error("positive category `{positive}` is not in the domain of question `{question}`")]
    PositiveNotInDomain { question: String, positive: String },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("row {row} has {got} cells, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("prediction table needs at least one run")]
    NoRuns,
}

/// Ordered set of nominal categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelDomain {
    categories: Vec<String>,
}

impl LabelDomain {
    pub fn new<I, S>(categories: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let categories: Vec<String> = categories.into_iter().map(|c| c.into().trim().to_string()).collect();
        if categories.len() < 2 {
            return Err(ModelError::TooFewCategories(categories.len()));
        }
        let mut seen = HashSet::new();
        for c in &categories {
            if !seen.insert(c.as_str()) {
                return Err(ModelError::DuplicateCategory(c.clone()));
            }
        }
        Ok(Self { categories })
    }

    /// The `{yes, no}` domain used by every question in the binary protocol.
    pub fn binary() -> Self {
        Self {
            categories: vec!["yes".into(), "no".into()],
        }
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn contains(&self, label: &str) -> bool {
        self.categories.iter().any(|c| c == label)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == label)
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}

impl TryFrom<Vec<String>> for LabelDomain {
    type Error = ModelError;

    fn try_from(value: Vec<String>) -> Result<Self, Self::Error> {
        LabelDomain::new(value)
    }
}

impl From<LabelDomain> for Vec<String> {
    fn from(value: LabelDomain) -> Self {
        value.categories
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub id: String,
    pub description: String,
    pub domain: LabelDomain,
    pub positive: String,
}

impl QuestionSpec {
    pub fn new(
        id: impl Into<String>,
        description: impl Into<String>,
        domain: LabelDomain,
        positive: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        let positive = positive.into().trim().to_string();
        if !domain.contains(&positive) {
            return Err(ModelError::PositiveNotInDomain { question: id, positive });
        }
        Ok(Self {
            id,
            description: description.into(),
            domain,
            positive,
        })
    }

    /// Binary `{yes, no}` question with `yes` as the positive class.
    pub fn binary(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            description: String::new(),
            domain: LabelDomain::binary(),
            positive: "yes".into(),
        }
    }

    /// The first category that is not the positive one, used when a binary
    /// label has to be flipped.
    pub fn negative(&self) -> &str {
        self.domain
            .categories()
            .iter()
            .find(|c| **c != self.positive)
            .map(String::as_str)
            .unwrap_or(&self.positive)
    }
}

/// Question list with unique ids, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QuestionSet {
    questions: Vec<QuestionSpec>,
}

impl QuestionSet {
    pub fn new(questions: Vec<QuestionSpec>) -> Result<Self, ModelError> {
        check_unique("question", questions.iter().map(|q| q.id.as_str()))?;
        Ok(Self { questions })
    }

    pub fn get(&self, id: &str) -> Option<&QuestionSpec> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, QuestionSpec> {
        self.questions.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.questions.iter().map(|q| q.id.as_str())
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }
}

impl<'a> IntoIterator for &'a QuestionSet {
    type Item = &'a QuestionSpec;
    type IntoIter = std::slice::Iter<'a, QuestionSpec>;

    fn into_iter(self) -> Self::IntoIter {
        self.questions.iter()
    }
}

/// One human annotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cell {
    Label(String),
    Missing,
}

impl Cell {
    pub fn label(&self) -> Option<&str> {
        match self {
            Cell::Label(l) => Some(l),
            Cell::Missing => None,
        }
    }
}

/// One model run's answer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RunCell {
    Label(String),
    Invalid,
}

impl RunCell {
    pub fn label(&self) -> Option<&str> {
        match self {
            RunCell::Label(l) => Some(l),
            RunCell::Invalid => None,
        }
    }
}

fn check_unique<'a>(kind: &'static str, ids: impl Iterator<Item = &'a str>) -> Result<(), ModelError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ModelError::DuplicateId {
                kind,
                id: id.to_string(),
            });
        }
    }
    Ok(())
}

fn check_shape<T>(rows: &[Vec<T>], width: usize) -> Result<(), ModelError> {
    for (row, cells) in rows.iter().enumerate() {
        if cells.len() != width {
            return Err(ModelError::RaggedRow {
                row,
                got: cells.len(),
                expected: width,
            });
        }
    }
    Ok(())
}

/// Items x annotators matrix of nominal labels for a single question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationTable {
    question: String,
    items: Vec<String>,
    annotators: Vec<String>,
    cells: Vec<Vec<Cell>>,
}

impl AnnotationTable {
    /// `cells[i][a]` is the label annotator `a` gave item `i`.
    pub fn new(
        question: impl Into<String>,
        items: Vec<String>,
        annotators: Vec<String>,
        cells: Vec<Vec<Cell>>,
    ) -> Result<Self, ModelError> {
        check_unique("item", items.iter().map(String::as_str))?;
        check_unique("annotator", annotators.iter().map(String::as_str))?;
        if cells.len() != items.len() {
            return Err(ModelError::RaggedRow {
                row: cells.len(),
                got: cells.len(),
                expected: items.len(),
            });
        }
        check_shape(&cells, annotators.len())?;
        let cells = cells
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|c| match c {
                        Cell::Label(l) => Cell::Label(l.trim().to_string()),
                        Cell::Missing => Cell::Missing,
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            question: question.into(),
            items,
            annotators,
            cells,
        })
    }

    /// Convenience constructor from `Option<&str>` rows; `None` is missing.
    pub fn from_options(
        question: impl Into<String>,
        items: Vec<String>,
        annotators: Vec<String>,
        rows: &[Vec<Option<&str>>],
    ) -> Result<Self, ModelError> {
        let cells = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| c.map_or(Cell::Missing, |l| Cell::Label(l.to_string())))
                    .collect()
            })
            .collect();
        Self::new(question, items, annotators, cells)
    }

    pub fn question(&self) -> &str {
        &self.question
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn annotators(&self) -> &[String] {
        &self.annotators
    }

    pub fn cell(&self, item: usize, annotator: usize) -> &Cell {
        &self.cells[item][annotator]
    }

    pub fn row(&self, item: usize) -> &[Cell] {
        &self.cells[item]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[Cell])> {
        self.items
            .iter()
            .map(String::as_str)
            .zip(self.cells.iter().map(Vec::as_slice))
    }

    pub fn item_index(&self, item: &str) -> Option<usize> {
        self.items.iter().position(|i| i == item)
    }

    /// Non-missing labels of one item, in annotator order.
    pub fn values(&self, item: usize) -> impl Iterator<Item = &str> {
        self.cells[item].iter().filter_map(Cell::label)
    }

    /// Copy with items and annotators in lexicographic order.
    pub fn sorted(&self) -> Self {
        let item_order = sort_order(&self.items);
        let ann_order = sort_order(&self.annotators);
        Self {
            question: self.question.clone(),
            items: item_order.iter().map(|&i| self.items[i].clone()).collect(),
            annotators: ann_order.iter().map(|&a| self.annotators[a].clone()).collect(),
            cells: item_order
                .iter()
                .map(|&i| ann_order.iter().map(|&a| self.cells[i][a].clone()).collect())
                .collect(),
        }
    }

    /// Copy without the given annotator column.
    pub fn without_annotator(&self, annotator: usize) -> Self {
        let mut out = self.clone();
        out.annotators.remove(annotator);
        for row in &mut out.cells {
            row.remove(annotator);
        }
        out
    }
}

/// Items x runs matrix of model answers for a single question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRunSet {
    question: String,
    items: Vec<String>,
    runs: Vec<String>,
    cells: Vec<Vec<RunCell>>,
}

impl PredictionRunSet {
    pub fn new(
        question: impl Into<String>,
        items: Vec<String>,
        runs: Vec<String>,
        cells: Vec<Vec<RunCell>>,
    ) -> Result<Self, ModelError> {
        if runs.is_empty() {
            return Err(ModelError::NoRuns);
        }
        check_unique("item", items.iter().map(String::as_str))?;
        check_unique("run", runs.iter().map(String::as_str))?;
        if cells.len() != items.len() {
            return Err(ModelError::RaggedRow {
                row: cells.len(),
                got: cells.len(),
                expected: items.len(),
            });
        }
        check_shape(&cells, runs.len())?;
        let cells = cells
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|c| match c {
                        RunCell::Label(l) => RunCell::Label(l.trim().to_string()),
                        RunCell::Invalid => RunCell::Invalid,
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            question: question.into(),
            items,
            runs,
            cells,
        })
    }

    pub fn from_options(
        question: impl Into<String>,
        items: Vec<String>,
        runs: Vec<String>,
        rows: &[Vec<Option<&str>>],
    ) -> Result<Self, ModelError> {
        let cells = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| c.map_or(RunCell::Invalid, |l| RunCell::Label(l.to_string())))
                    .collect()
            })
            .collect();
        Self::new(question, items, runs, cells)
    }

    pub fn question(&self) -> &str {
        &self.question
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn runs(&self) -> &[String] {
        &self.runs
    }

    pub fn cell(&self, item: usize, run: usize) -> &RunCell {
        &self.cells[item][run]
    }

    pub fn row(&self, item: usize) -> &[RunCell] {
        &self.cells[item]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[RunCell])> {
        self.items
            .iter()
            .map(String::as_str)
            .zip(self.cells.iter().map(Vec::as_slice))
    }

    pub fn item_index(&self, item: &str) -> Option<usize> {
        self.items.iter().position(|i| i == item)
    }

    /// Valid answers of one item, in run order.
    pub fn values(&self, item: usize) -> impl Iterator<Item = &str> {
        self.cells[item].iter().filter_map(RunCell::label)
    }

    pub fn sorted(&self) -> Self {
        let item_order = sort_order(&self.items);
        let run_order = sort_order(&self.runs);
        Self {
            question: self.question.clone(),
            items: item_order.iter().map(|&i| self.items[i].clone()).collect(),
            runs: run_order.iter().map(|&r| self.runs[r].clone()).collect(),
            cells: item_order
                .iter()
                .map(|&i| run_order.iter().map(|&r| self.cells[i][r].clone()).collect())
                .collect(),
        }
    }
}

fn sort_order(ids: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
    order
}

/// Human and model soft labels for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftLabelPair {
    pub item: String,
    pub p_human: f64,
    pub p_model: f64,
    pub n_human: usize,
    pub n_runs: usize,
}

impl SoftLabelPair {
    /// Builds a pair from positive/total counts on both sides.
    ///
    /// Returns `None` when either side has no counted values.
    pub fn from_counts(
        item: impl Into<String>,
        human_positive: usize,
        n_human: usize,
        model_positive: usize,
        n_runs: usize,
    ) -> Option<Self> {
        if n_human == 0 || n_runs == 0 || human_positive > n_human || model_positive > n_runs {
            return None;
        }
        Some(Self {
            item: item.into(),
            p_human: human_positive as f64 / n_human as f64,
            p_model: model_positive as f64 / n_runs as f64,
            n_human,
            n_runs,
        })
    }

    /// Pair from raw fractions, without count provenance (counts are 0).
    pub fn from_fractions(item: impl Into<String>, p_human: f64, p_model: f64) -> Self {
        Self {
            item: item.into(),
            p_human,
            p_model,
            n_human: 0,
            n_runs: 0,
        }
    }
}

/// A problem found while checking an annotation/prediction bundle.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// Annotated item with no prediction row.
    MissingPrediction {
        item: String,
    },
    /// Predicted item with no annotation row.
    MissingAnnotation {
        item: String,
    },
    /// Label outside the question's domain. `source` is an annotator or run id.
    UnknownCategory {
        item: String,
        source: String,
        label: String,
        human: bool,
    },
    /// More than one table for the same question on one side.
    DuplicateTable {
        human: bool,
    },
    NoAnnotations,
    NoPredictions,
    /// Table for a question id that is not declared.
    UnknownQuestion {
        question: String,
        human: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionValidation {
    pub question: String,
    pub evaluable: bool,
    /// Item ids present on both sides, in annotation order.
    pub evaluation_items: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub questions: Vec<QuestionValidation>,
    /// Tables whose question id is not declared.
    pub stray: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn question(&self, id: &str) -> Option<&QuestionValidation> {
        self.questions.iter().find(|q| q.question == id)
    }

    pub fn any_evaluable(&self) -> bool {
        self.questions.iter().any(|q| q.evaluable)
    }

    pub fn all_evaluable(&self) -> bool {
        self.questions.iter().all(|q| q.evaluable)
    }

    pub fn diagnostic_count(&self) -> usize {
        self.stray.len() + self.questions.iter().map(|q| q.diagnostics.len()).sum::<usize>()
    }
}

/// Checks one model's prediction tables against the human annotations.
///
/// A question is evaluable when it has exactly one table on each side, no
/// label outside its domain, and at least one item present on both sides.
pub fn validate_bundle(
    annotations: &[AnnotationTable],
    predictions: &[PredictionRunSet],
    questions: &[QuestionSpec],
) -> ValidationReport {
    let known: BTreeSet<&str> = questions.iter().map(|q| q.id.as_str()).collect();
    let mut stray = Vec::new();
    for t in annotations.iter().filter(|t| !known.contains(t.question())) {
        stray.push(Diagnostic::UnknownQuestion {
            question: t.question().to_string(),
            human: true,
        });
    }
    for t in predictions.iter().filter(|t| !known.contains(t.question())) {
        stray.push(Diagnostic::UnknownQuestion {
            question: t.question().to_string(),
            human: false,
        });
    }

    let questions = questions
        .iter()
        .map(|q| validate_question(q, annotations, predictions))
        .collect();
    ValidationReport { questions, stray }
}

fn validate_question(
    question: &QuestionSpec,
    annotations: &[AnnotationTable],
    predictions: &[PredictionRunSet],
) -> QuestionValidation {
    let mut diagnostics = Vec::new();
    let human: Vec<_> = annotations.iter().filter(|t| t.question() == question.id).collect();
    let model: Vec<_> = predictions.iter().filter(|t| t.question() == question.id).collect();
    let mut structural_ok = true;
    match human.len() {
        0 => {
            diagnostics.push(Diagnostic::NoAnnotations);
            structural_ok = false;
        }
        1 => {}
        _ => {
            diagnostics.push(Diagnostic::DuplicateTable { human: true });
            structural_ok = false;
        }
    }
    match model.len() {
        0 => {
            diagnostics.push(Diagnostic::NoPredictions);
            structural_ok = false;
        }
        1 => {}
        _ => {
            diagnostics.push(Diagnostic::DuplicateTable { human: false });
            structural_ok = false;
        }
    }

    let mut evaluation_items = Vec::new();
    let mut unknown = false;
    if let (Some(h), Some(m)) = (human.first(), model.first()) {
        for (item, row) in h.rows() {
            for (annotator, cell) in h.annotators().iter().zip(row) {
                if let Cell::Label(l) = cell {
                    if !question.domain.contains(l) {
                        unknown = true;
                        diagnostics.push(Diagnostic::UnknownCategory {
                            item: item.to_string(),
                            source: annotator.clone(),
                            label: l.clone(),
                            human: true,
                        });
                    }
                }
            }
        }
        for (item, row) in m.rows() {
            for (run, cell) in m.runs().iter().zip(row) {
                if let RunCell::Label(l) = cell {
                    if !question.domain.contains(l) {
                        unknown = true;
                        diagnostics.push(Diagnostic::UnknownCategory {
                            item: item.to_string(),
                            source: run.clone(),
                            label: l.clone(),
                            human: false,
                        });
                    }
                }
            }
        }

        let model_items: BTreeSet<&str> = m.items().iter().map(String::as_str).collect();
        let human_items: BTreeSet<&str> = h.items().iter().map(String::as_str).collect();
        for item in h.items() {
            if model_items.contains(item.as_str()) {
                evaluation_items.push(item.clone());
            } else {
                diagnostics.push(Diagnostic::MissingPrediction { item: item.clone() });
            }
        }
        for item in m.items().iter().filter(|i| !human_items.contains(i.as_str())) {
            diagnostics.push(Diagnostic::MissingAnnotation { item: item.clone() });
        }
    }

    QuestionValidation {
        question: question.id.clone(),
        evaluable: structural_ok && !unknown && !evaluation_items.is_empty(),
        evaluation_items,
        diagnostics,
    }
}

/// Count of each non-missing label, keyed by label.
pub fn tally<'a>(labels: impl IntoIterator<Item = &'a str>) -> BTreeMap<&'a str, usize> {
    let mut counts = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    counts
}
