use std::fmt;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context};

use hlv_core::ingest::{ingest_annotations, ingest_predictions};
use hlv_core::protocol::{run_protocol, ModelPredictions, ProtocolError};
use hlv_core::reliability::{fleiss_kappa, krippendorff_alpha, partition_questions};
use hlv_core::report::{emit_report, parse_machine, ReportFormat};
use hlv_core::synth::{generate_bundle, BundleSpec};
use hlv_core::{plan_frames, Config};

pub const ANNOTATIONS_FILE: &str = "annotations.csv";
pub const CONFIG_FILE: &str = "config.toml";

/// Exit 1 for unreadable or invalid input, 2 for a bundle with nothing to
/// evaluate.
pub enum Failure {
    Input(anyhow::Error),
    NotEvaluable(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::NotEvaluable(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(e) | Failure::NotEvaluable(e) => {
                if f.alternate() {
                    write!(f, "{e:#}")
                } else {
                    write!(f, "{e}")
                }
            }
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

type CmdResult = Result<(), Failure>;

pub fn parse_question(s: &str) -> Result<(String, f64), String> {
    let (id, sharpness) = s
        .split_once('=')
        .ok_or_else(|| format!("expected id=sharpness, got `{s}`"))?;
    let sharpness: f64 = sharpness
        .trim()
        .parse()
        .map_err(|e| format!("bad sharpness in `{s}`: {e}"))?;
    Ok((id.trim().to_string(), sharpness))
}

fn stdout_write(bytes: &[u8]) -> CmdResult {
    std::io::stdout().write_all(bytes).context("writing to stdout")?;
    Ok(())
}

pub fn reliability(annotations: &Path, fleiss: bool, precision: usize) -> CmdResult {
    let ingested =
        ingest_annotations(annotations, None).with_context(|| format!("reading {}", annotations.display()))?;
    let mut out = String::from(if fleiss {
        "question\talpha\tkappa\tunits\tpairable\n"
    } else {
        "question\talpha\tunits\tpairable\n"
    });
    for table in &ingested.tables {
        let q = table.question();
        let (alpha, units, pairable) = match krippendorff_alpha(table) {
            Ok(s) => (format!("{:.precision$}", s.value), s.n_units, s.n_pairable),
            Err(e) => (format!("n/a ({e})"), 0, 0),
        };
        if fleiss {
            let kappa = match fleiss_kappa(table) {
                Ok(s) => format!("{:.precision$}", s.value),
                Err(e) => format!("n/a ({e})"),
            };
            out.push_str(&format!("{q}\t{alpha}\t{kappa}\t{units}\t{pairable}\n"));
        } else {
            out.push_str(&format!("{q}\t{alpha}\t{units}\t{pairable}\n"));
        }
    }
    for d in &ingested.diagnostics {
        eprintln!("warning: {d}");
    }
    stdout_write(out.as_bytes())
}

pub fn partition(annotations: &Path, threshold: f64, precision: usize) -> CmdResult {
    if !threshold.is_finite() {
        return Err(anyhow!("threshold must be finite").into());
    }
    let ingested =
        ingest_annotations(annotations, None).with_context(|| format!("reading {}", annotations.display()))?;
    let mut scores = Vec::new();
    for table in &ingested.tables {
        match krippendorff_alpha(table) {
            Ok(s) => scores.push(s),
            Err(e) => eprintln!("warning: {e}"),
        }
    }
    if scores.is_empty() {
        return Err(Failure::NotEvaluable(anyhow!("no question has a computable alpha")));
    }
    let p = partition_questions(&scores, threshold);
    let mut out = String::from("question\talpha\tsubset\n");
    for s in &scores {
        let subset = if p.agreement.contains(&s.question) {
            "agreement"
        } else {
            "disagreement"
        };
        out.push_str(&format!("{}\t{:.precision$}\t{subset}\n", s.question, s.value));
    }
    stdout_write(out.as_bytes())
}

pub fn evaluate(
    annotations: &Path,
    predictions: &[std::path::PathBuf],
    config_path: &Path,
    format: ReportFormat,
    out: Option<&Path>,
) -> CmdResult {
    let config = Config::load(config_path).context("loading config")?;
    let questions = config.question_set().context("loading config")?;
    let anns = ingest_annotations(annotations, Some(&questions))
        .with_context(|| format!("reading {}", annotations.display()))?;
    for d in &anns.diagnostics {
        eprintln!("warning: {}: {d}", annotations.display());
    }
    let mut models = Vec::new();
    for path in predictions {
        let ingested = ingest_predictions(path, &questions).with_context(|| format!("reading {}", path.display()))?;
        for d in &ingested.diagnostics {
            eprintln!("warning: {}: {d}", path.display());
        }
        let (name, family) = config.model_for(path);
        models.push(ModelPredictions {
            name,
            family,
            tables: ingested.tables,
            diagnostics: ingested.diagnostics,
        });
    }
    let report = match run_protocol(&anns.tables, &anns.diagnostics, &models, &config) {
        Ok(r) => r,
        Err(ProtocolError::NotEvaluable(validations)) => {
            for (model, v) in &validations {
                for q in &v.questions {
                    for d in &q.diagnostics {
                        eprintln!("{model}/{}: {d:?}", q.question);
                    }
                }
            }
            return Err(Failure::NotEvaluable(anyhow!(
                "bundle is not evaluable: no question can be scored for any model"
            )));
        }
        Err(e) => return Err(anyhow!(e).into()),
    };
    let bytes = emit_report(&report, format);
    match out {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
            Ok(())
        }
        None => stdout_write(&bytes),
    }
}

pub fn frames(total: u64, fps: f64, budget: u64) -> CmdResult {
    let plan = plan_frames(total, fps, budget).map_err(|e| anyhow!(e))?;
    let mut out = String::with_capacity(plan.indices.len() * 8);
    for i in &plan.indices {
        out.push_str(&i.to_string());
        out.push('\n');
    }
    stdout_write(out.as_bytes())
}

pub fn report(input: &Path, format: ReportFormat) -> CmdResult {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let report = parse_machine(&text).with_context(|| format!("parsing {}", input.display()))?;
    stdout_write(&emit_report(&report, format))
}

pub fn synth(out: &Path, mut spec: BundleSpec) -> CmdResult {
    if spec.questions.is_empty() {
        spec.questions = vec![("agree".into(), 0.95), ("disagree".into(), 0.3)];
    }
    let bundle = generate_bundle(&spec).map_err(|e| anyhow!(e))?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let files = [
        (ANNOTATIONS_FILE.to_string(), bundle.annotations_csv()),
        (bundle.predictions_file(), bundle.predictions_jsonl()),
        (CONFIG_FILE.to_string(), bundle.config.to_toml()),
    ];
    for (name, contents) in files {
        let path = out.join(&name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}
