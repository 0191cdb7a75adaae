//! Reading and writing the annotation and prediction file formats.
//!
//! Annotations are CSV with the header `item_id,question_id,annotator_id,label`;
//! an empty label is an explicit missing cell. Predictions are JSON Lines,
//! one object per `(item, run)` carrying an answer for every question:
//!
//! ```text
//! {"item":"post-001","run":"1","is_political":true,"is_saxony":false}
//! ```
//!
//! A prediction record missing any answer, or with an answer outside the
//! question's domain, invalidates all of its cells.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{AnnotationTable, Cell, PredictionRunSet, QuestionSet, QuestionSpec, RunCell};

pub const ANNOTATION_HEADER: [&str; 4] = ["item_id", "question_id", "annotator_id", "label"];
pub const ITEM_KEY: &str = "item";
pub const RUN_KEY: &str = "run";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{0}")]
    DuplicateCell(Box<CellConflict>),
}

/// Two different labels for the same (item, annotator, question).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: item `{item}`, annotator `{annotator}`, question `{question}` already labelled `{first}`, now `{second}`")]
pub struct CellConflict {
    pub line: u64,
    pub item: String,
    pub annotator: String,
    pub question: String,
    pub first: String,
    pub second: String,
}

impl IngestError {
    fn parse(line: u64, message: impl Into<String>) -> Self {
        IngestError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// Non-fatal ingestion finding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IngestDiagnostic {
    UnknownQuestion {
        line: u64,
        question: String,
    },
    /// Exact repeat of an earlier row or record; ignored.
    DuplicateRecord {
        line: u64,
        item: String,
        source: String,
    },
    /// Repeat of an `(item, run)` with different answers; all its cells are invalid.
    ConflictingRecord {
        line: u64,
        item: String,
        run: String,
    },
    /// Record that failed schema validation; all its cells are invalid.
    InvalidRecord {
        line: u64,
        item: String,
        run: String,
        problem: String,
    },
    /// Record without usable item/run ids; skipped.
    UnattributedRecord {
        line: u64,
    },
}

impl IngestDiagnostic {
    pub fn line(&self) -> u64 {
        match self {
            Self::UnknownQuestion { line, .. }
            | Self::DuplicateRecord { line, .. }
            | Self::ConflictingRecord { line, .. }
            | Self::InvalidRecord { line, .. }
            | Self::UnattributedRecord { line } => *line,
        }
    }

    /// The message without its line number, so it does not depend on row order.
    pub fn summary(&self) -> String {
        match self {
            Self::UnknownQuestion { question, .. } => format!("unknown question `{question}`"),
            Self::DuplicateRecord { item, source, .. } => {
                format!("duplicate record for item `{item}` from `{source}`")
            }
            Self::ConflictingRecord { item, run, .. } => {
                format!("conflicting record for item `{item}` run `{run}`")
            }
            Self::InvalidRecord { item, run, problem, .. } => format!("item `{item}` run `{run}`: {problem}"),
            Self::UnattributedRecord { .. } => "record has no item/run id".to_string(),
        }
    }
}

impl fmt::Display for IngestDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line(), self.summary())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested<T> {
    pub tables: Vec<T>,
    pub diagnostics: Vec<IngestDiagnostic>,
}

fn read(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Insertion-ordered id interner.
#[derive(Default)]
struct Ids {
    order: Vec<String>,
    index: HashMap<String, usize>,
}

impl Ids {
    fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        self.order.push(id.to_string());
        self.index.insert(id.to_string(), self.order.len() - 1);
        self.order.len() - 1
    }
}

#[derive(Default)]
struct AnnotationBuilder {
    items: Ids,
    annotators: Ids,
    cells: HashMap<(usize, usize), Cell>,
}

pub fn ingest_annotations(
    path: impl AsRef<Path>,
    questions: Option<&QuestionSet>,
) -> Result<Ingested<AnnotationTable>, IngestError> {
    parse_annotations(&read(path.as_ref())?, questions)
}

/// Parses annotation CSV into one table per question, in order of first
/// appearance. With `questions` given, rows for other question ids become
/// diagnostics.
pub fn parse_annotations(
    text: &str,
    questions: Option<&QuestionSet>,
) -> Result<Ingested<AnnotationTable>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| IngestError::parse(1, e.to_string()))?
        .clone();
    if header.iter().eq([""]) || header.is_empty() {
        return Err(IngestError::parse(1, "no records"));
    }
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::parse(1, format!("missing column `{name}`")))
    };
    let [c_item, c_question, c_annotator, c_label] = [
        column(ANNOTATION_HEADER[0])?,
        column(ANNOTATION_HEADER[1])?,
        column(ANNOTATION_HEADER[2])?,
        column(ANNOTATION_HEADER[3])?,
    ];

    let mut question_ids = Ids::default();
    let mut builders: Vec<AnnotationBuilder> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut records = 0usize;
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IngestError::parse(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        records += 1;
        let field = |c: usize| row.get(c).unwrap_or("");
        let (item, question, annotator, label) = (field(c_item), field(c_question), field(c_annotator), field(c_label));
        if item.is_empty() || question.is_empty() || annotator.is_empty() {
            return Err(IngestError::parse(line, "empty item, question or annotator id"));
        }
        if questions.is_some_and(|qs| qs.get(question).is_none()) {
            diagnostics.push(IngestDiagnostic::UnknownQuestion {
                line,
                question: question.to_string(),
            });
            continue;
        }
        let q = question_ids.intern(question);
        if q == builders.len() {
            builders.push(AnnotationBuilder::default());
        }
        let b = &mut builders[q];
        let key = (b.items.intern(item), b.annotators.intern(annotator));
        let cell = if label.is_empty() {
            Cell::Missing
        } else {
            Cell::Label(label.to_string())
        };
        match b.cells.get(&key) {
            None => {
                b.cells.insert(key, cell);
            }
            Some(prev) if *prev == cell => diagnostics.push(IngestDiagnostic::DuplicateRecord {
                line,
                item: item.to_string(),
                source: annotator.to_string(),
            }),
            Some(prev) => {
                let show = |c: &Cell| c.label().unwrap_or("").to_string();
                return Err(IngestError::DuplicateCell(Box::new(CellConflict {
                    line,
                    item: item.to_string(),
                    annotator: annotator.to_string(),
                    question: question.to_string(),
                    first: show(prev),
                    second: show(&cell),
                })));
            }
        }
    }
    if records == 0 {
        return Err(IngestError::parse(1, "no records"));
    }

    let tables = question_ids
        .order
        .into_iter()
        .zip(builders)
        .map(|(question, mut b)| {
            let cells = (0..b.items.order.len())
                .map(|i| {
                    (0..b.annotators.order.len())
                        .map(|a| b.cells.remove(&(i, a)).unwrap_or(Cell::Missing))
                        .collect()
                })
                .collect();
            AnnotationTable::new(question, b.items.order, b.annotators.order, cells)
                .expect("interned ids are unique and rows are rectangular")
        })
        .collect();
    Ok(Ingested { tables, diagnostics })
}

/// Serializes tables as annotation CSV, writing every cell (missing cells
/// with an empty label) so that re-ingestion restores the same layout.
pub fn write_annotations(tables: &[AnnotationTable]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ANNOTATION_HEADER).expect("in-memory write");
    for t in tables {
        for (item, row) in t.rows() {
            for (annotator, cell) in t.annotators().iter().zip(row) {
                w.write_record([item, t.question(), annotator, cell.label().unwrap_or("")])
                    .expect("in-memory write");
            }
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv output is utf-8")
}

#[derive(Clone, PartialEq)]
enum RecordState {
    Answers(Vec<String>),
    Invalid,
}

fn answer(question: &QuestionSpec, value: Option<&Value>) -> Result<String, String> {
    match value {
        None => Err(format!("missing field `{}`", question.id)),
        Some(Value::Bool(b)) if question.domain.len() == 2 => Ok(if *b {
            question.positive.clone()
        } else {
            question.negative().to_string()
        }),
        Some(Value::String(s)) if question.domain.contains(s.trim()) => Ok(s.trim().to_string()),
        Some(other) => Err(format!("field `{}` has unusable value {other}", question.id)),
    }
}

fn id_field(record: &Map<String, Value>, key: &str) -> Option<String> {
    match record.get(key)? {
        Value::String(s) if !s.trim().is_empty() => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

pub fn ingest_predictions(
    path: impl AsRef<Path>,
    questions: &QuestionSet,
) -> Result<Ingested<PredictionRunSet>, IngestError> {
    parse_predictions(&read(path.as_ref())?, questions)
}

/// Parses prediction JSON Lines into one run set per declared question.
///
/// Items and runs keep their order of first appearance; an `(item, run)`
/// pair with no record is invalid in every table.
pub fn parse_predictions(text: &str, questions: &QuestionSet) -> Result<Ingested<PredictionRunSet>, IngestError> {
    let mut items = Ids::default();
    let mut runs = Ids::default();
    let mut records: HashMap<(usize, usize), RecordState> = HashMap::new();
    let mut diagnostics = Vec::new();
    let mut seen_any = false;

    for (n, raw) in text.lines().enumerate() {
        let line = n as u64 + 1;
        if raw.trim().is_empty() {
            continue;
        }
        seen_any = true;
        let value: Value = serde_json::from_str(raw).map_err(|e| IngestError::parse(line, e.to_string()))?;
        let Value::Object(record) = value else {
            return Err(IngestError::parse(line, "expected a JSON object"));
        };
        let (Some(item), Some(run)) = (id_field(&record, ITEM_KEY), id_field(&record, RUN_KEY)) else {
            diagnostics.push(IngestDiagnostic::UnattributedRecord { line });
            continue;
        };
        let parsed: Result<Vec<String>, String> = questions.iter().map(|q| answer(q, record.get(&q.id))).collect();
        let state = match parsed {
            Ok(answers) => RecordState::Answers(answers),
            Err(problem) => {
                diagnostics.push(IngestDiagnostic::InvalidRecord {
                    line,
                    item: item.clone(),
                    run: run.clone(),
                    problem,
                });
                RecordState::Invalid
            }
        };
        let key = (items.intern(&item), runs.intern(&run));
        match records.get(&key) {
            None => {
                records.insert(key, state);
            }
            Some(prev) if *prev == state => {
                diagnostics.push(IngestDiagnostic::DuplicateRecord {
                    line,
                    item,
                    source: run,
                });
            }
            Some(_) => {
                diagnostics.push(IngestDiagnostic::ConflictingRecord { line, item, run });
                records.insert(key, RecordState::Invalid);
            }
        }
    }
    if !seen_any {
        return Err(IngestError::parse(1, "no records"));
    }
    if runs.order.is_empty() {
        return Ok(Ingested {
            tables: Vec::new(),
            diagnostics,
        });
    }

    let tables = questions
        .iter()
        .enumerate()
        .map(|(qi, q)| {
            let cells = (0..items.order.len())
                .map(|i| {
                    (0..runs.order.len())
                        .map(|r| match records.get(&(i, r)) {
                            Some(RecordState::Answers(a)) => RunCell::Label(a[qi].clone()),
                            _ => RunCell::Invalid,
                        })
                        .collect()
                })
                .collect();
            PredictionRunSet::new(q.id.clone(), items.order.clone(), runs.order.clone(), cells)
                .expect("interned ids are unique and rows are rectangular")
        })
        .collect();
    Ok(Ingested { tables, diagnostics })
}

/// Serializes run sets that share items and runs as prediction JSON Lines.
///
/// Binary questions are written as booleans (`true` for the positive
/// category). An invalid cell is written as `null`, which on re-ingestion
/// invalidates the whole `(item, run)` record.
pub fn write_predictions(sets: &[PredictionRunSet], questions: &QuestionSet) -> String {
    let Some(first) = sets.first() else {
        return String::new();
    };
    let mut out = String::new();
    for (i, item) in first.items().iter().enumerate() {
        for (r, run) in first.runs().iter().enumerate() {
            let mut record = Map::new();
            record.insert(ITEM_KEY.into(), Value::String(item.clone()));
            record.insert(RUN_KEY.into(), Value::String(run.clone()));
            for set in sets {
                let value = match (set.cell(i, r), questions.get(set.question())) {
                    (RunCell::Invalid, _) => Value::Null,
                    (RunCell::Label(l), Some(q)) if q.domain.len() == 2 => Value::Bool(*l == q.positive),
                    (RunCell::Label(l), _) => Value::String(l.clone()),
                };
                record.insert(set.question().to_string(), value);
            }
            out.push_str(&Value::Object(record).to_string());
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QuestionSpec;

    fn five() -> QuestionSet {
        QuestionSet::new(
            [
                "is_political",
                "is_saxony",
                "is_intolerant",
                "is_hedonic",
                "is_eudaimonic",
            ]
            .into_iter()
            .map(QuestionSpec::binary)
            .collect(),
        )
        .unwrap()
    }

    fn full_csv(items: usize, annotators: usize, questions: &QuestionSet) -> String {
        let mut s = String::from("item_id,question_id,annotator_id,label\n");
        for i in 0..items {
            for q in questions.ids() {
                for a in 0..annotators {
                    let l = if (i + a) % 3 == 0 { "yes" } else { "no" };
                    s.push_str(&format!("p{i:03},{q},a{a},{l}\n"));
                }
            }
        }
        s
    }

    #[test]
    fn full_panel_gives_one_table_per_question() {
        let qs = five();
        let got = parse_annotations(&full_csv(300, 5, &qs), Some(&qs)).unwrap();
        assert_eq!(got.tables.len(), 5);
        for t in &got.tables {
            assert_eq!(t.items().len(), 300);
            assert_eq!(t.annotators().len(), 5);
            assert!(t.rows().all(|(_, r)| r.iter().all(|c| *c != Cell::Missing)));
        }
        assert!(got.diagnostics.is_empty());
    }

    #[test]
    fn repeated_row_same_label_is_deduplicated() {
        let text = "item_id,question_id,annotator_id,label\nx,q,a,yes\nx,q,a, yes\nx,q,b,no\n";
        let got = parse_annotations(text, None).unwrap();
        assert_eq!(got.tables[0].annotators(), ["a", "b"]);
        assert_eq!(
            got.diagnostics,
            vec![IngestDiagnostic::DuplicateRecord {
                line: 3,
                item: "x".into(),
                source: "a".into()
            }]
        );
    }

    #[test]
    fn repeated_row_conflicting_label_is_an_error() {
        let text = "item_id,question_id,annotator_id,label\nx,q,a,yes\nx,q,a,no\n";
        let err = parse_annotations(text, None).unwrap_err();
        assert!(matches!(&err, IngestError::DuplicateCell(c) if c.line == 3), "{err}");
    }

    #[test]
    fn empty_file_has_no_records() {
        for text in ["", "item_id,question_id,annotator_id,label\n"] {
            let err = parse_annotations(text, None).unwrap_err();
            assert!(err.to_string().contains("no records"), "{err}");
        }
        let err = parse_predictions("\n\n", &five()).unwrap_err();
        assert!(err.to_string().contains("no records"));
    }

    #[test]
    fn summary_drops_the_line_number() {
        let d = IngestDiagnostic::InvalidRecord {
            line: 58,
            item: "v1".into(),
            run: "3".into(),
            problem: "missing field `q`".into(),
        };
        assert_eq!(d.to_string(), "line 58: item `v1` run `3`: missing field `q`");
        assert_eq!(d.summary(), "item `v1` run `3`: missing field `q`");
        assert_eq!(d.line(), 58);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "item_id,question_id,annotator_id,label\nx,q,a,yes\nx,q\n";
        match parse_annotations(text, None).unwrap_err() {
            IngestError::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
        match parse_annotations("a,b\n1,2\n", None).unwrap_err() {
            IngestError::Parse { message, .. } => assert!(message.contains("item_id")),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_questions_are_diagnostics() {
        let qs = QuestionSet::new(vec![QuestionSpec::binary("q")]).unwrap();
        let text = "item_id,question_id,annotator_id,label\nx,q,a,yes\nx,other,a,no\n";
        let got = parse_annotations(text, Some(&qs)).unwrap();
        assert_eq!(got.tables.len(), 1);
        assert_eq!(
            got.diagnostics,
            vec![IngestDiagnostic::UnknownQuestion {
                line: 3,
                question: "other".into()
            }]
        );
    }

    #[test]
    fn sparse_rows_become_missing_cells() {
        let text = "item_id,question_id,annotator_id,label\nx,q,a,yes\ny,q,b,no\nz,q,a,\n";
        let t = &parse_annotations(text, None).unwrap().tables[0];
        assert_eq!(t.cell(0, 1), &Cell::Missing);
        assert_eq!(t.cell(1, 0), &Cell::Missing);
        assert_eq!(t.cell(2, 0), &Cell::Missing);
    }

    #[test]
    fn happy_prediction_record() {
        let qs = five();
        let text = r#"{"item":"p1","run":"1","is_political":true,"is_saxony":false,"is_intolerant":"no","is_hedonic":false,"is_eudaimonic":true}"#;
        let got = parse_predictions(text, &qs).unwrap();
        assert_eq!(got.tables.len(), 5);
        assert!(got.diagnostics.is_empty());
        let labels: Vec<_> = got
            .tables
            .iter()
            .map(|t| t.cell(0, 0).label().unwrap().to_string())
            .collect();
        assert_eq!(labels, ["yes", "no", "no", "no", "yes"]);
    }

    #[test]
    fn missing_field_invalidates_record() {
        let qs = five();
        let text = concat!(
            r#"{"item":"p1","run":"1","is_political":true,"is_intolerant":false,"is_hedonic":false,"is_eudaimonic":true}"#,
            "\n",
            r#"{"item":"p1","run":"2","is_political":true,"is_saxony":true,"is_intolerant":false,"is_hedonic":false,"is_eudaimonic":true}"#,
        );
        let got = parse_predictions(text, &qs).unwrap();
        for t in &got.tables {
            assert_eq!(t.cell(0, 0), &RunCell::Invalid);
            assert!(matches!(t.cell(0, 1), RunCell::Label(_)));
        }
        assert!(matches!(
            &got.diagnostics[..],
            [IngestDiagnostic::InvalidRecord { line: 1, problem, .. }] if problem.contains("is_saxony")
        ));
    }

    #[test]
    fn malformed_container_is_an_error() {
        let err = parse_predictions("{\"item\": \n", &five()).unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: 1, .. }));
        let err = parse_predictions("[1,2]\n", &five()).unwrap_err();
        assert!(matches!(err, IngestError::Parse { line: 1, .. }));
    }

    #[test]
    fn conflicting_records_invalidate() {
        let qs = QuestionSet::new(vec![QuestionSpec::binary("q")]).unwrap();
        let text =
            "{\"item\":\"x\",\"run\":1,\"q\":true}\n{\"item\":\"x\",\"run\":1,\"q\":false}\n{\"run\":2,\"q\":true}\n";
        let got = parse_predictions(text, &qs).unwrap();
        assert_eq!(got.tables[0].runs(), ["1"]);
        assert_eq!(got.tables[0].cell(0, 0), &RunCell::Invalid);
        assert_eq!(got.diagnostics.len(), 2);
    }

    #[test]
    fn five_runs_per_item() {
        let qs = five();
        let mut text = String::new();
        for i in 0..300 {
            for r in 1..=5 {
                let mut rec = format!("{{\"item\":\"p{i}\",\"run\":\"{r}\"");
                for q in qs.ids() {
                    rec.push_str(&format!(",\"{q}\":{}", (i + r) % 2 == 0));
                }
                rec.push_str("}\n");
                text.push_str(&rec);
            }
        }
        let got = parse_predictions(&text, &qs).unwrap();
        assert_eq!(got.tables.len(), 5);
        assert!(got.tables.iter().all(|t| t.runs().len() == 5 && t.items().len() == 300));
    }

    #[test]
    fn writers_round_trip() {
        let qs = five();
        let anns = parse_annotations(&full_csv(4, 3, &qs), None).unwrap().tables;
        let again = parse_annotations(&write_annotations(&anns), None).unwrap().tables;
        assert_eq!(anns, again);

        let text = "{\"item\":\"x\",\"run\":\"1\",\"is_political\":true,\"is_saxony\":false,\"is_intolerant\":false,\"is_hedonic\":false,\"is_eudaimonic\":true}\n";
        let preds = parse_predictions(text, &qs).unwrap().tables;
        let written = write_predictions(&preds, &qs);
        assert_eq!(parse_predictions(&written, &qs).unwrap().tables, preds);
    }
}
