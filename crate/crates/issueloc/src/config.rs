//! Run configuration: a TOML file whose values command-line flags override.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use issueloc_core::dataset::{ExtensionFilter, DEFAULT_EXTENSIONS};
use issueloc_core::retrieval::{DeltaPlacement, ModelConfig, ModelKind};
use issueloc_core::text::{MarkupMode, PreprocessConfig, DEFAULT_MARKER_WORD};

use crate::analysis::{TypeCategory, TypeMapping};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MarkupSetting {
    KeepRaw,
    StripFormatting,
    StripBlocks,
    BlocksToMarker,
}

impl From<MarkupSetting> for MarkupMode {
    fn from(m: MarkupSetting) -> Self {
        match m {
            MarkupSetting::KeepRaw => MarkupMode::KeepRaw,
            MarkupSetting::StripFormatting => MarkupMode::StripFormatting,
            MarkupSetting::StripBlocks => MarkupMode::StripBlocks,
            MarkupSetting::BlocksToMarker => MarkupMode::BlocksToMarker,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    pub markup: MarkupSetting,
    pub lowercase: bool,
    pub stem: bool,
    pub subtoken_split: bool,
    pub marker_word: String,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        PreprocessSection {
            markup: MarkupSetting::KeepRaw,
            lowercase: true,
            stem: true,
            subtoken_split: false,
            marker_word: DEFAULT_MARKER_WORD.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// Model names, or `["all"]`.
    pub models: Vec<String>,
    pub k1: f64,
    pub b: f64,
    pub delta: f64,
    pub delta_matched_only: bool,
    pub name_weight: f64,
    pub content_weight: f64,
    pub lsi_dims: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = ModelConfig::default();
        ModelSection {
            models: vec!["bm25".to_owned()],
            k1: d.k1,
            b: d.b,
            delta: d.delta,
            delta_matched_only: false,
            name_weight: d.name_weight,
            content_weight: d.content_weight,
            lsi_dims: d.lsi_dims,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SplitChoice {
    Validation,
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub repo_path: PathBuf,
    pub head_ref: String,
    pub project_prefix: String,
    pub issues_path: PathBuf,
    pub output_dir: PathBuf,
    pub extensions: Vec<String>,
    pub split_ratio: f64,
    pub split: SplitChoice,
    pub parallelism: usize,
    /// Ranking entries written per issue; 0 writes every file.
    pub rankings_top: usize,
    /// Raw tracker type to category, on top of the built-in mapping.
    pub type_mapping: BTreeMap<String, TypeCategory>,
    /// Include the `Other` category in group tests.
    pub analyze_other: bool,
    pub preprocess: PreprocessSection,
    pub model: ModelSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            repo_path: PathBuf::from("."),
            head_ref: "HEAD".to_owned(),
            project_prefix: String::new(),
            issues_path: PathBuf::from("issues.jsonl"),
            output_dir: PathBuf::from("out"),
            extensions: DEFAULT_EXTENSIONS.iter().map(|s| (*s).to_owned()).collect(),
            split_ratio: 0.5,
            split: SplitChoice::Test,
            parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
            rankings_top: 100,
            type_mapping: BTreeMap::new(),
            analyze_other: false,
            preprocess: PreprocessSection::default(),
            model: ModelSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.split_ratio) {
            return bad("split_ratio must lie in [0, 1]");
        }
        if self.extension_filter().is_none() {
            return bad("extensions must not be empty");
        }
        if !self.preprocess_config().marker_is_valid() {
            return bad("marker_word must be a single alphanumeric word");
        }
        let kinds = self.model_kinds()?;
        for kind in kinds {
            self.model_config(kind)
                .validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn require_prefix(&self) -> Result<&str, ConfigError> {
        if self.project_prefix.is_empty() {
            return Err(ConfigError::Invalid(
                "project_prefix is required".to_owned(),
            ));
        }
        let valid = self
            .project_prefix
            .starts_with(|c: char| c.is_ascii_uppercase())
            && self
                .project_prefix
                .chars()
                .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_');
        if !valid {
            return Err(ConfigError::Invalid(format!(
                "project_prefix {:?} must be uppercase letters, digits or underscores",
                self.project_prefix
            )));
        }
        Ok(&self.project_prefix)
    }

    pub fn extension_filter(&self) -> Option<ExtensionFilter> {
        ExtensionFilter::new(&self.extensions)
    }

    pub fn preprocess_config(&self) -> PreprocessConfig {
        let p = &self.preprocess;
        PreprocessConfig {
            markup_mode: p.markup.into(),
            lowercase: p.lowercase,
            stem: p.stem,
            subtoken_split: p.subtoken_split,
            marker_word: p.marker_word.clone(),
        }
    }

    pub fn model_kinds(&self) -> Result<Vec<ModelKind>, ConfigError> {
        let mut kinds = Vec::new();
        for name in &self.model.models {
            if name.eq_ignore_ascii_case("all") {
                kinds.extend(ModelKind::ALL);
            } else {
                kinds.push(
                    name.parse()
                        .map_err(|_| ConfigError::Invalid(format!("unknown model {name:?}")))?,
                );
            }
        }
        kinds.sort();
        kinds.dedup();
        if kinds.is_empty() {
            return Err(ConfigError::Invalid("no model selected".to_owned()));
        }
        Ok(kinds)
    }

    pub fn model_config(&self, kind: ModelKind) -> ModelConfig {
        let m = &self.model;
        ModelConfig {
            model: kind,
            k1: m.k1,
            b: m.b,
            delta: m.delta,
            delta_placement: if m.delta_matched_only {
                DeltaPlacement::MatchedOnly
            } else {
                DeltaPlacement::Unconditional
            },
            name_weight: m.name_weight,
            content_weight: m.content_weight,
            lsi_dims: m.lsi_dims,
        }
    }

    pub fn type_mapping(&self) -> TypeMapping {
        TypeMapping::with_overrides(self.type_mapping.clone())
    }

    pub fn out(&self, file: &str) -> PathBuf {
        self.output_dir.join(file)
    }
}
