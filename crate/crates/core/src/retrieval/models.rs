use alloc::vec;
use alloc::vec::Vec;

use super::index::{lookup, CorpusIndex, IndexedDoc, TermFreqs};
use super::{ranking_from, DeltaPlacement, ModelConfig, Ranking};
use crate::text::TokenStream;

/// `ln((N + 1) / (n + 1)) + 1`
pub fn smooth_idf(n_docs: usize, doc_freq: usize) -> f64 {
    libm::log((n_docs as f64 + 1.0) / (doc_freq as f64 + 1.0)) + 1.0
}

/// `ln((N - n + 0.5) / (n + 0.5) + 1)`
pub fn bm25_idf(n_docs: usize, doc_freq: usize) -> f64 {
    let n = doc_freq as f64;
    libm::log((n_docs as f64 - n + 0.5) / (n + 0.5) + 1.0)
}

/// Saturated term weight plus the `delta` lower bound.
pub fn bm25_term_score(tf: f64, doc_len: f64, avg_len: f64, k1: f64, b: f64, delta: f64) -> f64 {
    let rel_len = if avg_len > 0.0 {
        doc_len / avg_len
    } else {
        0.0
    };
    (k1 + 1.0) * tf / (tf + k1 * (1.0 - b + b * rel_len)) + delta
}

/// Logistic length multiplier over min-max normalised lengths; 0.5 for
/// every document when all lengths are equal.
pub fn length_boost(len: usize, min_len: usize, max_len: usize) -> f64 {
    let g = if max_len > min_len {
        (len - min_len) as f64 / (max_len - min_len) as f64
    } else {
        0.0
    };
    1.0 / (1.0 + libm::exp(-g))
}

/// Term-frequency transform for the vector-space models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfWeighting {
    /// Raw count.
    Raw,
    /// Count divided by document length.
    LengthNormalized,
    /// `ln(count + 1)`.
    Log,
}

impl TfWeighting {
    fn apply(self, tf: u32, len: usize) -> f64 {
        match self {
            TfWeighting::Raw => tf as f64,
            TfWeighting::LengthNormalized => {
                if len == 0 {
                    0.0
                } else {
                    tf as f64 / len as f64
                }
            }
            TfWeighting::Log => libm::log(tf as f64 + 1.0),
        }
    }
}

pub(crate) fn weighted(
    index: &CorpusIndex,
    freqs: &TermFreqs,
    len: usize,
    tf: TfWeighting,
) -> Vec<(u32, f64)> {
    let n = index.n_docs();
    freqs
        .iter()
        .map(|&(t, f)| (t, tf.apply(f, len) * smooth_idf(n, index.doc_freq_of(t))))
        .collect()
}

pub(crate) fn norm(v: &[(u32, f64)]) -> f64 {
    libm::sqrt(v.iter().map(|(_, w)| w * w).sum())
}

fn sparse_dot(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot
}

fn cosine(a: &[(u32, f64)], a_norm: f64, b: &[(u32, f64)]) -> f64 {
    let b_norm = norm(b);
    if a_norm == 0.0 || b_norm == 0.0 {
        return 0.0;
    }
    sparse_dot(a, b) / (a_norm * b_norm)
}

/// Cosine scores of every document (concatenated view) with the given
/// term-frequency transform, applied to documents and query alike.
pub fn vsm_scores_with_tf(query: &TokenStream, index: &CorpusIndex, tf: TfWeighting) -> Vec<f64> {
    let q = weighted(index, &index.query_freqs(query), query.len(), tf);
    let q_norm = norm(&q);
    index
        .docs()
        .iter()
        .map(|d| {
            cosine(
                &q,
                q_norm,
                &weighted(index, &d.concat_tf, d.concat_len(), tf),
            )
        })
        .collect()
}

pub fn score_vsm(query: &TokenStream, index: &CorpusIndex) -> Ranking {
    ranking_from(
        index,
        vsm_scores_with_tf(query, index, TfWeighting::LengthNormalized),
    )
}

pub fn score_rvsm(query: &TokenStream, index: &CorpusIndex) -> Ranking {
    let cos = vsm_scores_with_tf(query, index, TfWeighting::Log);
    let scores = index
        .docs()
        .iter()
        .zip(cos)
        .map(|(d, c)| length_boost(d.concat_len(), index.min_len(), index.max_len()) * c)
        .collect();
    ranking_from(index, scores)
}

fn field_tf(doc: &IndexedDoc, term: Option<u32>, config: &ModelConfig) -> f64 {
    match term {
        None => 0.0,
        Some(t) => {
            config.name_weight * lookup(&doc.name_tf, t) as f64
                + config.content_weight * lookup(&doc.content_tf, t) as f64
        }
    }
}

/// BM25F with the BM25+ lower bound, summed over query tokens with
/// multiplicity. Out-of-vocabulary tokens contribute `delta * IDF` under
/// unconditional placement.
pub fn score_bm25(query: &TokenStream, index: &CorpusIndex, config: &ModelConfig) -> Ranking {
    let n = index.n_docs();
    let avg = index.avg_weighted_len(config.name_weight, config.content_weight);
    let terms: Vec<(Option<u32>, f64)> = query
        .iter()
        .map(|t| {
            let id = index.term_id(t);
            (id, bm25_idf(n, id.map_or(0, |i| index.doc_freq_of(i))))
        })
        .collect();
    let mut scores = vec![0.0; n];
    for (doc, score) in index.docs().iter().zip(scores.iter_mut()) {
        let len = doc.weighted_len(config.name_weight, config.content_weight);
        for &(term, idf) in &terms {
            let tf = field_tf(doc, term, config);
            let delta = match config.delta_placement {
                DeltaPlacement::Unconditional => config.delta,
                DeltaPlacement::MatchedOnly if tf > 0.0 => config.delta,
                DeltaPlacement::MatchedOnly => 0.0,
            };
            *score += idf * bm25_term_score(tf, len, avg, config.k1, config.b, delta);
        }
    }
    ranking_from(index, scores)
}
