//! Okapi BM25 over a single example's candidate paragraphs.
//!
//! Each example is its own micro-corpus: document frequencies, lengths and
//! the average length come from that example's candidates only.
//!
//! ```text
//! score(q, d) = Σ_{t ∈ q} idf(t) · tf·(k1+1) / (tf + k1·(1 − b + b·|d|/avgdl))
//! idf(t)      = ln(1 + (N − df + 0.5) / (df + 0.5))
//! ```
//!
//! Query terms are summed with multiplicity.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{link_context, tokenize, Corpus};
use crate::dataset::Example;
use crate::error::{Error, Result};
use crate::ranking::Prediction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone)]
pub struct Bm25Index {
    term_freqs: Vec<HashMap<String, u32>>,
    doc_freqs: HashMap<String, u32>,
    lengths: Vec<usize>,
    avg_len: f64,
    params: Bm25Params,
}

impl Bm25Index {
    /// Index pre-tokenized candidates. Fails when there are no candidates or
    /// every candidate is empty.
    pub fn from_tokens(docs: Vec<Vec<String>>, params: Bm25Params) -> Result<Self> {
        if docs.iter().all(|d| d.is_empty()) {
            return Err(Error::EmptyIndex);
        }
        let mut doc_freqs: HashMap<String, u32> = HashMap::new();
        let mut term_freqs = Vec::with_capacity(docs.len());
        let mut lengths = Vec::with_capacity(docs.len());
        for doc in docs {
            let mut tf: HashMap<String, u32> = HashMap::new();
            lengths.push(doc.len());
            for t in doc {
                *tf.entry(t).or_default() += 1;
            }
            for t in tf.keys() {
                *doc_freqs.entry(t.clone()).or_default() += 1;
            }
            term_freqs.push(tf);
        }
        let avg_len = lengths.iter().sum::<usize>() as f64 / lengths.len() as f64;
        Ok(Bm25Index {
            term_freqs,
            doc_freqs,
            lengths,
            avg_len,
            params,
        })
    }

    pub fn build<S: AsRef<str>>(candidates: &[S], params: Bm25Params) -> Result<Self> {
        Self::from_tokens(candidates.iter().map(|c| tokenize(c.as_ref())).collect(), params)
    }

    pub fn num_docs(&self) -> usize {
        self.lengths.len()
    }

    pub fn doc_freq(&self, term: &str) -> u32 {
        self.doc_freqs.get(term).copied().unwrap_or(0)
    }

    pub fn term_freq(&self, doc: usize, term: &str) -> u32 {
        self.term_freqs[doc].get(term).copied().unwrap_or(0)
    }

    pub fn doc_len(&self, doc: usize) -> usize {
        self.lengths[doc]
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.num_docs() as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    pub fn score<S: AsRef<str>>(&self, query: &[S], doc: usize) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let norm = k1 * (1.0 - b + b * self.lengths[doc] as f64 / self.avg_len);
        query
            .iter()
            .map(|t| {
                let tf = self.term_freq(doc, t.as_ref()) as f64;
                if tf == 0.0 {
                    0.0
                } else {
                    self.idf(t.as_ref()) * tf * (k1 + 1.0) / (tf + norm)
                }
            })
            .sum()
    }

    pub fn score_all<S: AsRef<str>>(&self, query: &[S]) -> Vec<f64> {
        (0..self.num_docs()).map(|d| self.score(query, d)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    Title,
    Context,
}

/// Highest score wins, lowest index on ties; when nothing overlaps the
/// query, the lead candidate.
pub fn choose(scores: &[f64], lead_index: usize) -> usize {
    if scores.iter().all(|&s| s == 0.0) {
        lead_index
    } else {
        crate::ranking::argmax(scores)
    }
}

pub fn candidate_texts<'a>(example: &Example, corpus: &'a Corpus) -> Result<Vec<&'a str>> {
    let target = corpus.article(&example.target_id)?;
    example
        .candidates
        .iter()
        .map(|c| {
            target.try_slice(c.span).ok_or(Error::SpanOutOfBounds {
                article: target.id.clone(),
                begin: c.span.begin,
                end: c.span.end,
                len: target.char_len(),
            })
        })
        .collect()
}

pub fn query_tokens(
    example: &Example,
    corpus: &Corpus,
    mode: QueryMode,
    window_tokens: usize,
) -> Result<Vec<String>> {
    let source = corpus.article(&example.source_id)?;
    Ok(match mode {
        QueryMode::Title => tokenize(&source.title),
        QueryMode::Context => tokenize(&link_context(source, example.link_span, window_tokens)?),
    })
}

pub fn rank_bm25(
    example: &Example,
    corpus: &Corpus,
    mode: QueryMode,
    window_tokens: usize,
    params: Bm25Params,
) -> Result<Prediction> {
    let texts = candidate_texts(example, corpus)?;
    let query = query_tokens(example, corpus, mode, window_tokens)?;
    let scores = match Bm25Index::build(&texts, params) {
        Ok(index) => index.score_all(&query),
        Err(Error::EmptyIndex) => vec![0.0; texts.len()],
        Err(e) => return Err(e),
    };
    Ok(Prediction {
        example_id: example.example_id.clone(),
        chosen_index: choose(&scores, example.lead_index()),
        scores,
        fragment_url: None,
    })
}
