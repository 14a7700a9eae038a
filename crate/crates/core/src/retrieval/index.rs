use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::RetrievalError;
use crate::text::{Document, TokenStream};

pub type TermId = u32;

/// Sorted `(term, frequency)` pairs.
pub type TermFreqs = Vec<(TermId, u32)>;

fn term_freqs(tokens: &TokenStream, vocab: &BTreeMap<String, TermId>) -> TermFreqs {
    let mut counts: BTreeMap<TermId, u32> = BTreeMap::new();
    for t in tokens {
        *counts.entry(vocab[t]).or_default() += 1;
    }
    counts.into_iter().collect()
}

fn merge_freqs(a: &TermFreqs, b: &TermFreqs) -> TermFreqs {
    let mut counts: BTreeMap<TermId, u32> = a.iter().copied().collect();
    for &(t, f) in b {
        *counts.entry(t).or_default() += f;
    }
    counts.into_iter().collect()
}

pub(crate) fn lookup(freqs: &TermFreqs, term: TermId) -> u32 {
    freqs
        .binary_search_by_key(&term, |&(t, _)| t)
        .map_or(0, |i| freqs[i].1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedDoc {
    pub path: String,
    pub name_tf: TermFreqs,
    pub content_tf: TermFreqs,
    /// Name and content merged, used by the vector-space models.
    pub concat_tf: TermFreqs,
    pub name_len: usize,
    pub content_len: usize,
}

impl IndexedDoc {
    pub fn concat_len(&self) -> usize {
        self.name_len + self.content_len
    }

    pub fn weighted_len(&self, name_weight: f64, content_weight: f64) -> f64 {
        name_weight * self.name_len as f64 + content_weight * self.content_len as f64
    }
}

/// Term and document statistics over one snapshot. Documents are kept in
/// path order so results never depend on input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusIndex {
    vocab: BTreeMap<String, TermId>,
    df: Vec<u32>,
    docs: Vec<IndexedDoc>,
    min_len: usize,
    max_len: usize,
}

impl CorpusIndex {
    pub fn build(mut documents: Vec<Document>) -> Result<Self, RetrievalError> {
        if documents.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        documents.sort_by(|a, b| a.path.cmp(&b.path));

        let mut vocab: BTreeMap<String, TermId> = BTreeMap::new();
        for d in &documents {
            for t in d.name.iter().chain(d.content.iter()) {
                if !vocab.contains_key(t) {
                    vocab.insert(t.clone(), 0);
                }
            }
        }
        for (i, id) in vocab.values_mut().enumerate() {
            *id = i as TermId;
        }

        let mut df = alloc::vec![0u32; vocab.len()];
        let docs: Vec<IndexedDoc> = documents
            .into_iter()
            .map(|d| {
                let name_tf = term_freqs(&d.name, &vocab);
                let content_tf = term_freqs(&d.content, &vocab);
                let concat_tf = merge_freqs(&name_tf, &content_tf);
                for &(t, _) in &concat_tf {
                    df[t as usize] += 1;
                }
                IndexedDoc {
                    path: d.path,
                    name_tf,
                    content_tf,
                    concat_tf,
                    name_len: d.name.len(),
                    content_len: d.content.len(),
                }
            })
            .collect();
        let min_len = docs.iter().map(IndexedDoc::concat_len).min().unwrap_or(0);
        let max_len = docs.iter().map(IndexedDoc::concat_len).max().unwrap_or(0);
        Ok(CorpusIndex {
            vocab,
            df,
            docs,
            min_len,
            max_len,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocab.len()
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.vocab.get(term).copied()
    }

    /// Number of documents containing `term` (0 when unseen).
    pub fn doc_freq(&self, term: &str) -> usize {
        self.term_id(term)
            .map_or(0, |t| self.df[t as usize] as usize)
    }

    pub fn doc_freq_of(&self, term: TermId) -> usize {
        self.df[term as usize] as usize
    }

    pub fn docs(&self) -> &[IndexedDoc] {
        &self.docs
    }

    pub fn min_len(&self) -> usize {
        self.min_len
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn avg_weighted_len(&self, name_weight: f64, content_weight: f64) -> f64 {
        let total: f64 = self
            .docs
            .iter()
            .map(|d| d.weighted_len(name_weight, content_weight))
            .sum();
        total / self.docs.len() as f64
    }

    /// Query term counts restricted to the index vocabulary.
    pub fn query_freqs(&self, query: &TokenStream) -> TermFreqs {
        let mut counts: BTreeMap<TermId, u32> = BTreeMap::new();
        for t in query {
            if let Some(id) = self.term_id(t) {
                *counts.entry(id).or_default() += 1;
            }
        }
        counts.into_iter().collect()
    }
}
