//! Protocol configuration, read from TOML.
//!
//! ```toml
//! threshold = 0.667
//! precision = 2
//! expected_runs = 5
//! jsd_log_base = 2
//!
//! [[questions]]
//! id = "is_political"
//! categories = ["yes", "no"]
//! positive = "yes"
//!
//! [[models]]
//! file = "gemma-3-4b.jsonl"
//! name = "gemma-3-4b"
//! family = "gemma-3"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disagreement::JSD_LOG_BASE;
use crate::model::{LabelDomain, ModelError, QuestionSet, QuestionSpec};
use crate::reliability::DEFAULT_THRESHOLD;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid question in config: {0}")]
    Question(#[from] ModelError),
    #[error("threshold must be a finite number, got {0}")]
    Threshold(f64),
    #[error("only log base 2 is supported for JSD, got {0}")]
    LogBase(u32),
    #[error("config declares no questions")]
    NoQuestions,
    #[error("expected_runs must be at least 1")]
    Runs,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_precision() -> usize {
    2
}

fn default_runs() -> usize {
    5
}

fn default_base() -> u32 {
    JSD_LOG_BASE
}

fn default_categories() -> Vec<String> {
    vec!["yes".into(), "no".into()]
}

fn default_positive() -> String {
    "yes".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionConfig {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default = "default_categories")]
    pub categories: Vec<String>,
    #[serde(default = "default_positive")]
    pub positive: String,
}

impl QuestionConfig {
    pub fn binary(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            description: String::new(),
            categories: default_categories(),
            positive: default_positive(),
        }
    }
}

/// Display name and family of the model behind one predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// File name (without directories) the entry applies to.
    pub file: String,
    pub name: Option<String>,
    pub family: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Decimal places in human-readable output.
    #[serde(default = "default_precision")]
    pub precision: usize,
    #[serde(default = "default_runs")]
    pub expected_runs: usize,
    #[serde(default = "default_base")]
    pub jsd_log_base: u32,
    #[serde(default)]
    pub questions: Vec<QuestionConfig>,
    #[serde(default)]
    pub models: Vec<ModelConfig>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            precision: default_precision(),
            expected_runs: default_runs(),
            jsd_log_base: JSD_LOG_BASE,
            questions: Vec::new(),
            models: Vec::new(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.threshold.is_finite() {
            return Err(ConfigError::Threshold(self.threshold));
        }
        if self.jsd_log_base != JSD_LOG_BASE {
            return Err(ConfigError::LogBase(self.jsd_log_base));
        }
        if self.questions.is_empty() {
            return Err(ConfigError::NoQuestions);
        }
        if self.expected_runs == 0 {
            return Err(ConfigError::Runs);
        }
        self.question_set()?;
        Ok(())
    }

    pub fn question_set(&self) -> Result<QuestionSet, ModelError> {
        let specs = self
            .questions
            .iter()
            .map(|q| {
                QuestionSpec::new(
                    q.id.clone(),
                    q.description.clone(),
                    LabelDomain::new(q.categories.clone())?,
                    q.positive.clone(),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        QuestionSet::new(specs)
    }

    /// Model name and family for a predictions file; unlisted files are named
    /// after their stem and form their own family.
    pub fn model_for(&self, path: &Path) -> (String, String) {
        let file = path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default();
        let stem = path
            .file_stem()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_else(|| file.clone());
        match self.models.iter().find(|m| m.file == file) {
            Some(m) => {
                let name = m.name.clone().unwrap_or(stem);
                let family = m.family.clone().unwrap_or_else(|| name.clone());
                (name, family)
            }
            None => (stem.clone(), stem),
        }
    }
}
