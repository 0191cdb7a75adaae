//! Evaluation report: data model, machine-readable JSON form and the
//! human-readable tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::reliability::Subset;

/// Which side of the comparison an exclusion comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Human,
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExclusionReason {
    Tie,
    EmptyVotes,
    MissingPrediction,
    MissingAnnotation,
    UnknownCategory,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Tie => "TIE",
            Self::EmptyVotes => "EMPTY_VOTES",
            Self::MissingPrediction => "MISSING_PREDICTION",
            Self::MissingAnnotation => "MISSING_ANNOTATION",
            Self::UnknownCategory => "UNKNOWN_CATEGORY",
        }
    }
}

/// One excluded `(item, question)` pair. `model` is empty for exclusions
/// caused by the human annotations alone, which apply to every model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExclusionEntry {
    pub question: String,
    pub item: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub side: Side,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReportDiagnostic {
    /// Input the finding came from: `annotations` or a model name.
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub name: String,
    pub family: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub threshold: f64,
    pub precision: usize,
    pub expected_runs: usize,
    pub jsd_log_base: u32,
    pub models: Vec<ModelInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionEntry {
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub n_pairable: usize,
    pub n_units: usize,
    /// Absent when alpha could not be computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Subset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisagreementRow {
    pub brier: f64,
    pub jsd: f64,
    pub n_items: usize,
}

/// One model's result on one question: metrics, or why there are none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult<R> {
    pub model: String,
    #[serde(default = "none", skip_serializing_if = "Option::is_none")]
    pub metrics: Option<R>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn none<R>() -> Option<R> {
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResults<R> {
    pub question: String,
    pub results: Vec<ModelResult<R>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: ConfigEcho,
    pub partition: Vec<PartitionEntry>,
    pub agreement: Vec<QuestionResults<AgreementRow>>,
    pub disagreement: Vec<QuestionResults<DisagreementRow>>,
    pub exclusions: Vec<ExclusionEntry>,
    pub diagnostics: Vec<ReportDiagnostic>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Machine,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Self::Table),
            "machine" => Ok(Self::Machine),
            other => Err(format!("unknown report format `{other}` (expected table or machine)")),
        }
    }
}

pub fn emit_report(report: &EvaluationReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Machine => emit_machine(report).into_bytes(),
        ReportFormat::Table => emit_table(report).into_bytes(),
    }
}

/// Pretty JSON with shortest round-trip floats and a trailing newline.
pub fn emit_machine(report: &EvaluationReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_machine(text: &str) -> Result<EvaluationReport, serde_json::Error> {
    serde_json::from_str(text)
}

const BEST: char = '*';

/// For each family and metric column, the row index holding the best value.
/// Ties go to the earliest row.
fn best_rows<R>(
    results: &[ModelResult<R>],
    models: &[ModelInfo],
    metric: impl Fn(&R) -> f64,
    higher_is_better: bool,
) -> Vec<bool> {
    let family = |name: &str| {
        models
            .iter()
            .find(|m| m.name == name)
            .map_or(name.to_string(), |m| m.family.clone())
    };
    let mut marks = vec![false; results.len()];
    let mut families: Vec<String> = Vec::new();
    for r in results {
        let f = family(&r.model);
        if !families.contains(&f) {
            families.push(f);
        }
    }
    for fam in families {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in results.iter().enumerate() {
            let Some(m) = &r.metrics else { continue };
            if family(&r.model) != fam {
                continue;
            }
            let v = metric(m);
            let better = match best {
                None => true,
                Some((_, b)) if higher_is_better => v > b,
                Some((_, b)) => v < b,
            };
            if better {
                best = Some((i, v));
            }
        }
        if let Some((i, _)) = best {
            marks[i] = true;
        }
    }
    marks
}

/// Left-aligned text columns separated by two spaces, with optional labels
/// spanning consecutive columns above the first row.
struct Grid {
    groups: Vec<(usize, usize, String)>,
    rows: Vec<Vec<String>>,
}

impl Grid {
    fn new(rows: Vec<Vec<String>>) -> Self {
        Self {
            groups: Vec::new(),
            rows,
        }
    }

    fn render(&self, out: &mut String) {
        let cols = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut widths: Vec<usize> = (0..cols)
            .map(|c| {
                self.rows
                    .iter()
                    .filter_map(|r| r.get(c))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let span_width = |widths: &[usize], start: usize, span: usize| {
            widths[start..start + span].iter().sum::<usize>() + 2 * (span - 1)
        };
        for (start, span, label) in &self.groups {
            let have = span_width(&widths, *start, *span);
            let need = label.chars().count();
            if need > have {
                widths[start + span - 1] += need - have;
            }
        }
        if !self.groups.is_empty() {
            let mut cells: Vec<String> = Vec::new();
            let mut col = 0;
            for (start, span, label) in &self.groups {
                while col < *start {
                    cells.push(" ".repeat(widths[col]));
                    col += 1;
                }
                cells.push(format!("{label:<w$}", w = span_width(&widths, *start, *span)));
                col = start + span;
            }
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        for row in &self.rows {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
    }
}

fn fmt_value(v: f64, precision: usize, best: bool) -> String {
    let mark = if best { BEST } else { ' ' };
    format!("{v:.precision$}{mark}")
}

fn model_order<R>(sections: &[QuestionResults<R>], models: &[ModelInfo]) -> Vec<String> {
    let mut names: Vec<String> = models.iter().map(|m| m.name.clone()).collect();
    for q in sections {
        for r in &q.results {
            if !names.contains(&r.model) {
                names.push(r.model.clone());
            }
        }
    }
    names
}

type Column<'a, R> = (&'a str, &'a dyn Fn(&R) -> f64);

fn metric_section<R>(
    out: &mut String,
    title: &str,
    sections: &[QuestionResults<R>],
    models: &[ModelInfo],
    precision: usize,
    columns: &[Column<'_, R>],
    higher_is_better: bool,
) {
    let _ = writeln!(out, "{title}");
    if sections.is_empty() {
        let _ = writeln!(out, "(no questions)");
        return;
    }
    let names = model_order(sections, models);
    let family_of = |name: &str| {
        models
            .iter()
            .find(|m| m.name == name)
            .map_or(name.to_string(), |m| m.family.clone())
    };

    let mut header = vec!["model".to_string(), "family".to_string()];
    let mut groups = Vec::new();
    for q in sections {
        groups.push((header.len(), columns.len(), q.question.clone()));
        header.extend(columns.iter().map(|(name, _)| name.to_string()));
    }
    let mut rows = vec![header];

    // marks[q][col][result index]
    let marks: Vec<Vec<Vec<bool>>> = sections
        .iter()
        .map(|q| {
            columns
                .iter()
                .map(|(_, f)| best_rows(&q.results, models, f, higher_is_better))
                .collect()
        })
        .collect();

    for name in &names {
        let mut row = vec![name.clone(), family_of(name)];
        for (qi, q) in sections.iter().enumerate() {
            let found = q.results.iter().position(|r| &r.model == name);
            for (ci, (_, f)) in columns.iter().enumerate() {
                let cell = match found.map(|ri| (ri, &q.results[ri])) {
                    Some((ri, ModelResult { metrics: Some(m), .. })) => fmt_value(f(m), precision, marks[qi][ci][ri]),
                    Some(_) => "n/a".to_string(),
                    None => "-".to_string(),
                };
                row.push(cell);
            }
        }
        rows.push(row);
    }
    Grid { groups, rows }.render(out);

    let errors: Vec<String> = sections
        .iter()
        .flat_map(|q| {
            q.results.iter().filter_map(move |r| {
                r.error
                    .as_ref()
                    .map(|e| format!("  n/a {} / {}: {}", q.question, r.model, e))
            })
        })
        .collect();
    for e in errors {
        let _ = writeln!(out, "{e}");
    }
}

/// Fixed-width text rendering. Values are rounded to the configured number
/// of decimals; `*` marks the best value per model family in each column.
pub fn emit_table(report: &EvaluationReport) -> String {
    let cfg = &report.config;
    let p = cfg.precision;
    let mut out = String::new();
    let _ = writeln!(out, "Evaluation report");
    let _ = writeln!(
        out,
        "threshold: {}  runs per item: {}  JSD log base: {}",
        cfg.threshold, cfg.expected_runs, cfg.jsd_log_base
    );
    let _ = writeln!(out);

    let _ = writeln!(out, "Partition (Krippendorff's alpha)");
    if report.partition.is_empty() {
        let _ = writeln!(out, "(no questions)");
    } else {
        let mut rows = vec![vec!["question".to_string(), "alpha".to_string(), "subset".to_string()]];
        for e in &report.partition {
            rows.push(vec![
                e.question.clone(),
                e.alpha.map_or("n/a".to_string(), |a| format!("{a:.p$}")),
                match (e.subset, &e.error) {
                    (Some(Subset::Agreement), _) => "agreement".to_string(),
                    (Some(Subset::Disagreement), _) => "disagreement".to_string(),
                    (None, Some(err)) => format!("unscored: {err}"),
                    (None, None) => "unscored".to_string(),
                },
            ]);
        }
        Grid::new(rows).render(&mut out);
    }
    let _ = writeln!(out);

    metric_section(
        &mut out,
        &format!(
            "Agreement subset (alpha >= {}; higher is better, {BEST} best in family)",
            cfg.threshold
        ),
        &report.agreement,
        &cfg.models,
        p,
        &[
            ("P", &|r: &AgreementRow| r.precision),
            ("R", &|r: &AgreementRow| r.recall),
            ("F1", &|r: &AgreementRow| r.f1),
        ],
        true,
    );
    let _ = writeln!(out);
    metric_section(
        &mut out,
        &format!(
            "Disagreement subset (alpha < {}; lower is better, {BEST} best in family)",
            cfg.threshold
        ),
        &report.disagreement,
        &cfg.models,
        p,
        &[
            ("Brier", &|r: &DisagreementRow| r.brier),
            ("JSD", &|r: &DisagreementRow| r.jsd),
        ],
        false,
    );
    let _ = writeln!(out);

    let _ = writeln!(out, "Exclusions: {}", report.exclusions.len());
    if !report.exclusions.is_empty() {
        let mut rows = vec![vec![
            "question".to_string(),
            "item".to_string(),
            "model".to_string(),
            "side".to_string(),
            "reason".to_string(),
        ]];
        for e in &report.exclusions {
            rows.push(vec![
                e.question.clone(),
                e.item.clone(),
                e.model.clone().unwrap_or_else(|| "(all)".to_string()),
                match e.side {
                    Side::Human => "human".to_string(),
                    Side::Model => "model".to_string(),
                },
                e.reason.as_str().to_string(),
            ]);
        }
        Grid::new(rows).render(&mut out);
    }
    let _ = writeln!(out, "Diagnostics: {}", report.diagnostics.len());
    for d in &report.diagnostics {
        match &d.question {
            Some(q) => {
                let _ = writeln!(out, "  [{}] {}: {}", d.source, q, d.message);
            }
            None => {
                let _ = writeln!(out, "  [{}] {}", d.source, d.message);
            }
        }
    }
    out
}
