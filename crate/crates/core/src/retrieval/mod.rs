//! Per-snapshot corpus index and the four ranking models: TF-IDF vector
//! space, latent semantic indexing, the revised vector space model and
//! BM25F with the BM25+ lower bound.

mod index;
mod lsi;
mod models;

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

pub use index::{CorpusIndex, IndexedDoc, TermFreqs, TermId};
pub use lsi::score_lsi;
pub use models::{
    bm25_idf, bm25_term_score, length_boost, score_bm25, score_rvsm, score_vsm, smooth_idf,
    vsm_scores_with_tf, TfWeighting,
};

use crate::text::TokenStream;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RetrievalError {
    EmptyCorpus,
    InvalidConfig(&'static str),
    DecompositionFailure,
}

impl fmt::Display for RetrievalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RetrievalError::EmptyCorpus => f.write_str("cannot index an empty corpus"),
            RetrievalError::InvalidConfig(why) => write!(f, "invalid model configuration: {why}"),
            RetrievalError::DecompositionFailure => {
                f.write_str("eigen-decomposition did not converge")
            }
        }
    }
}

impl core::error::Error for RetrievalError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Vsm,
    Lsi,
    Rvsm,
    Bm25,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Vsm,
        ModelKind::Lsi,
        ModelKind::Rvsm,
        ModelKind::Bm25,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Vsm => "vsm",
            ModelKind::Lsi => "lsi",
            ModelKind::Rvsm => "rvsm",
            ModelKind::Bm25 => "bm25",
        }
    }
}

impl core::str::FromStr for ModelKind {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vsm" | "tfidf" | "tf-idf" => Ok(ModelKind::Vsm),
            "lsi" => Ok(ModelKind::Lsi),
            "rvsm" => Ok(ModelKind::Rvsm),
            "bm25" => Ok(ModelKind::Bm25),
            _ => Err(RetrievalError::InvalidConfig("unknown model name")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the BM25+ `delta` is added.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaPlacement {
    /// For every query term, matched or not.
    #[default]
    Unconditional,
    /// Only for query terms present in the document.
    MatchedOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub model: ModelKind,
    pub k1: f64,
    pub b: f64,
    pub delta: f64,
    pub delta_placement: DeltaPlacement,
    pub name_weight: f64,
    pub content_weight: f64,
    pub lsi_dims: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            model: ModelKind::Bm25,
            k1: 1.2,
            b: 0.75,
            delta: 1.0,
            delta_placement: DeltaPlacement::Unconditional,
            name_weight: 1.0,
            content_weight: 1.0,
            lsi_dims: 500,
        }
    }
}

impl ModelConfig {
    pub fn with_model(model: ModelKind) -> Self {
        ModelConfig {
            model,
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        let bad = |why| Err(RetrievalError::InvalidConfig(why));
        if self.k1.is_nan() || self.k1 <= 0.0 {
            return bad("k1 must be positive");
        }
        if !(0.0..=1.0).contains(&self.b) {
            return bad("b must lie in [0, 1]");
        }
        if self.delta.is_nan() || self.delta < 0.0 {
            return bad("delta must be non-negative");
        }
        if [self.name_weight, self.content_weight]
            .iter()
            .any(|w| w.is_nan() || *w < 0.0)
        {
            return bad("field weights must be non-negative");
        }
        if self.name_weight + self.content_weight <= 0.0 {
            return bad("field weights must not all be zero");
        }
        if self.lsi_dims == 0 {
            return bad("lsi_dims must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedFile {
    pub path: String,
    pub score: f64,
}

/// Every document of a snapshot, best first. Equal scores are ordered by
/// ascending path.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ranking {
    entries: Vec<RankedFile>,
}

impl Ranking {
    pub fn from_scores(scores: Vec<(String, f64)>) -> Self {
        let mut entries: Vec<RankedFile> = scores
            .into_iter()
            .map(|(path, score)| RankedFile { path, score })
            .collect();
        entries.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.path.cmp(&b.path))
        });
        Ranking { entries }
    }

    pub fn entries(&self) -> &[RankedFile] {
        &self.entries
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.path.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn score_of(&self, path: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.path == path)
            .map(|e| e.score)
    }
}

pub(crate) fn ranking_from(index: &CorpusIndex, scores: Vec<f64>) -> Ranking {
    Ranking::from_scores(
        index
            .docs()
            .iter()
            .zip(scores)
            .map(|(d, s)| (d.path.clone(), s))
            .collect(),
    )
}

/// Scores every indexed document against `query` with the configured model.
pub fn rank(
    index: &CorpusIndex,
    query: &TokenStream,
    config: &ModelConfig,
) -> Result<Ranking, RetrievalError> {
    config.validate()?;
    Ok(match config.model {
        ModelKind::Vsm => score_vsm(query, index),
        ModelKind::Lsi => score_lsi(query, index, config.lsi_dims)?,
        ModelKind::Rvsm => score_rvsm(query, index),
        ModelKind::Bm25 => score_bm25(query, index, config),
    })
}

/// Builds a fresh index over `documents` and ranks them.
pub fn rank_documents(
    documents: Vec<crate::text::Document>,
    query: &TokenStream,
    config: &ModelConfig,
) -> Result<Ranking, RetrievalError> {
    let index = CorpusIndex::build(documents)?;
    rank(&index, query, config)
}

/// Smooth IDF for `term` under `index`.
pub fn idf_smooth(index: &CorpusIndex, term: &str) -> f64 {
    smooth_idf(index.n_docs(), index.doc_freq(term))
}

#[cfg(test)]
mod tests;
