//! Seeded generators for annotator panels and model runs with controllable
//! agreement, used to exercise the metrics against known answers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agreement::majority_vote;
use crate::config::{Config, ModelConfig, QuestionConfig};
use crate::ingest::{write_annotations, write_predictions};
use crate::model::{AnnotationTable, Cell, PredictionRunSet, QuestionSet, QuestionSpec, RunCell};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("{name} must lie in [0, 1], got {value}")]
    Rate { name: &'static str, value: f64 },
    #[error("expected {expected} latent rates, got {got}")]
    RateCount { expected: usize, got: usize },
    #[error("{0} must be at least 1")]
    Empty(&'static str),
}

fn check_rate(name: &'static str, value: f64) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(SynthError::Rate { name, value })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelSpec {
    pub n_items: usize,
    pub n_annotators: usize,
    /// Probability that an annotator labels each item positive.
    pub latent_rates: Vec<f64>,
    pub missing_rate: f64,
    pub seed: u64,
}

impl PanelSpec {
    /// Every item shares the same latent positive rate.
    pub fn uniform(n_items: usize, n_annotators: usize, rate: f64, missing_rate: f64, seed: u64) -> Self {
        Self {
            n_items,
            n_annotators,
            latent_rates: vec![rate; n_items],
            missing_rate,
            seed,
        }
    }

    /// Items lean towards one category: the rate is `0.5 + sharpness / 2` or
    /// `0.5 - sharpness / 2`, the direction drawn per item. Sharpness 1 gives
    /// unanimous items, sharpness 0 gives coin flips.
    pub fn polarized(
        n_items: usize,
        n_annotators: usize,
        sharpness: f64,
        missing_rate: f64,
        seed: u64,
    ) -> Result<Self, SynthError> {
        check_rate("sharpness", sharpness)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        let latent_rates = (0..n_items)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    0.5 + sharpness / 2.0
                } else {
                    0.5 - sharpness / 2.0
                }
            })
            .collect();
        Ok(Self {
            n_items,
            n_annotators,
            latent_rates,
            missing_rate,
            seed,
        })
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_items == 0 {
            return Err(SynthError::Empty("n_items"));
        }
        if self.n_annotators == 0 {
            return Err(SynthError::Empty("n_annotators"));
        }
        if self.latent_rates.len() != self.n_items {
            return Err(SynthError::RateCount {
                expected: self.n_items,
                got: self.latent_rates.len(),
            });
        }
        for &r in &self.latent_rates {
            check_rate("latent rate", r)?;
        }
        check_rate("missing rate", self.missing_rate)
    }
}

fn pad_width(n: usize) -> usize {
    n.max(1).to_string().len()
}

pub fn item_ids(n: usize) -> Vec<String> {
    let w = pad_width(n);
    (1..=n).map(|i| format!("item-{i:0w$}")).collect()
}

fn prefixed_ids(prefix: &str, n: usize) -> Vec<String> {
    let w = pad_width(n);
    (1..=n).map(|i| format!("{prefix}{i:0w$}")).collect()
}

/// Each cell is positive with its item's latent rate, then masked missing
/// with the missing rate.
pub fn generate_panel(question: &QuestionSpec, spec: &PanelSpec) -> Result<AnnotationTable, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cells = spec
        .latent_rates
        .iter()
        .map(|&rate| {
            (0..spec.n_annotators)
                .map(|_| {
                    // Draw both so the label stream does not depend on the mask.
                    let positive = rng.gen::<f64>() < rate;
                    let missing = rng.gen::<f64>() < spec.missing_rate;
                    if missing {
                        Cell::Missing
                    } else if positive {
                        Cell::Label(question.positive.clone())
                    } else {
                        Cell::Label(question.negative().to_string())
                    }
                })
                .collect()
        })
        .collect();
    Ok(AnnotationTable::new(
        question.id.clone(),
        item_ids(spec.n_items),
        prefixed_ids("ann-", spec.n_annotators),
        cells,
    )
    .expect("generated ids are unique"))
}

fn flip<'a>(question: &'a QuestionSpec, label: &str) -> &'a str {
    let cats = question.domain.categories();
    let i = question.domain.index_of(label).unwrap_or(0);
    &cats[(i + 1) % cats.len()]
}

/// Each run copies the item's human majority label with probability
/// `fidelity` and otherwise flips it. Items without a human majority (ties,
/// empty panels) use the positive category as the reference.
pub fn generate_runs(
    table: &AnnotationTable,
    question: &QuestionSpec,
    fidelity: f64,
    n_runs: usize,
    seed: u64,
) -> Result<PredictionRunSet, SynthError> {
    check_rate("fidelity", fidelity)?;
    if n_runs == 0 {
        return Err(SynthError::Empty("n_runs"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = (0..table.items().len())
        .map(|i| {
            let reference = majority_vote(table.values(i).map(Some))
                .ok()
                .and_then(|m| m.winner().map(str::to_string))
                .unwrap_or_else(|| question.positive.clone());
            (0..n_runs)
                .map(|_| {
                    if rng.gen::<f64>() < fidelity {
                        RunCell::Label(reference.clone())
                    } else {
                        RunCell::Label(flip(question, &reference).to_string())
                    }
                })
                .collect()
        })
        .collect();
    Ok(PredictionRunSet::new(
        table.question(),
        table.items().to_vec(),
        (1..=n_runs).map(|r| r.to_string()).collect(),
        cells,
    )
    .expect("generated ids are unique"))
}

/// Parameters for a complete synthetic bundle: annotations, one model's
/// predictions and a matching config.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleSpec {
    /// Question id and panel sharpness (see [`PanelSpec::polarized`]).
    pub questions: Vec<(String, f64)>,
    pub n_items: usize,
    pub n_annotators: usize,
    pub missing_rate: f64,
    pub fidelity: f64,
    pub n_runs: usize,
    pub model: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthBundle {
    pub annotations: Vec<AnnotationTable>,
    pub predictions: Vec<PredictionRunSet>,
    pub config: Config,
}

impl SynthBundle {
    pub fn predictions_file(&self) -> String {
        self.config
            .models
            .first()
            .map_or_else(|| "predictions.jsonl".to_string(), |m| m.file.clone())
    }

    pub fn annotations_csv(&self) -> String {
        write_annotations(&self.annotations)
    }

    pub fn predictions_jsonl(&self) -> String {
        let qs: QuestionSet = self.config.question_set().expect("generated config is valid");
        write_predictions(&self.predictions, &qs)
    }
}

/// Seeds for question `i`: independent streams derived from the bundle seed.
fn question_seed(seed: u64, i: usize, salt: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((i as u64) << 1) | salt);
    rng.gen()
}

pub fn generate_bundle(spec: &BundleSpec) -> Result<SynthBundle, SynthError> {
    if spec.questions.is_empty() {
        return Err(SynthError::Empty("questions"));
    }
    let mut annotations = Vec::new();
    let mut predictions = Vec::new();
    for (i, (id, sharpness)) in spec.questions.iter().enumerate() {
        let question = QuestionSpec::binary(id.clone());
        let panel = PanelSpec::polarized(
            spec.n_items,
            spec.n_annotators,
            *sharpness,
            spec.missing_rate,
            question_seed(spec.seed, i, 0),
        )?;
        let table = generate_panel(&question, &panel)?;
        predictions.push(generate_runs(
            &table,
            &question,
            spec.fidelity,
            spec.n_runs,
            question_seed(spec.seed, i, 1),
        )?);
        annotations.push(table);
    }
    let config = Config {
        expected_runs: spec.n_runs,
        questions: spec
            .questions
            .iter()
            .map(|(id, _)| QuestionConfig::binary(id.clone()))
            .collect(),
        models: vec![ModelConfig {
            file: format!("{}.jsonl", spec.model),
            name: Some(spec.model.clone()),
            family: Some(spec.model.clone()),
        }],
        ..Config::default()
    };
    Ok(SynthBundle {
        annotations,
        predictions,
        config,
    })
}
