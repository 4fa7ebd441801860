//! Tokenization and the five feature representations: token-id sequences,
//! word unigrams and bigrams, character 5-grams and tf-idf.

mod sparse;
mod tokenize;
mod vocab;

use serde::{Deserialize, Serialize};

pub use sparse::SparseVector;
pub use tokenize::{normalize_text, tokenize, TokenSeq, URL_TOKEN, USER_TOKEN};
pub use vocab::{
    build_vocab, encode_sequence, extract_ngrams, AnalyzedDoc, VocabMode, Vocabulary, OOV_ID, PAD_ID, RESERVED_IDS,
};

use crate::{Error, Result};

/// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
pub fn idf(n_docs: usize, doc_freq: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + doc_freq as f64)).ln() + 1.0
}

/// Reweights count vectors by smoothed idf and L2-normalizes each one.
/// All-zero vectors stay all-zero.
pub fn tfidf_weight(count_vectors: &[SparseVector], vocab: &Vocabulary) -> Vec<SparseVector> {
    count_vectors.iter().map(|v| tfidf_one(v, vocab)).collect()
}

fn tfidf_one(counts: &SparseVector, vocab: &Vocabulary) -> SparseVector {
    let weighted = counts.map_weights(|id, c| c * idf(vocab.n_docs(), vocab.doc_freq(id)));
    let norm = weighted.norm();
    if norm == 0.0 {
        return weighted;
    }
    weighted.map_weights(|_, w| w / norm)
}

/// Feature extractor choice, one per row family of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Tokenizer,
    Unigram,
    Bigram,
    Char5,
    Tfidf,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 5] = [
        FeatureKind::Tokenizer,
        FeatureKind::Unigram,
        FeatureKind::Bigram,
        FeatureKind::Char5,
        FeatureKind::Tfidf,
    ];

    pub fn vocab_mode(self) -> VocabMode {
        match self {
            FeatureKind::Tokenizer => VocabMode::TokenId,
            FeatureKind::Unigram | FeatureKind::Tfidf => VocabMode::WordNgram { n: 1 },
            FeatureKind::Bigram => VocabMode::WordNgram { n: 2 },
            FeatureKind::Char5 => VocabMode::CharNgram { n: 5 },
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            FeatureKind::Tokenizer => "Tokenizer",
            FeatureKind::Unigram => "Unigram",
            FeatureKind::Bigram => "Bigram",
            FeatureKind::Char5 => "5-char-gram",
            FeatureKind::Tfidf => "tf-idf",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Tokenizer => "tokenizer",
            FeatureKind::Unigram => "unigram",
            FeatureKind::Bigram => "bigram",
            FeatureKind::Char5 => "char5",
            FeatureKind::Tfidf => "tfidf",
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown feature kind {s:?} (expected tokenizer, unigram, bigram, char5 or tfidf)")))
    }
}

/// A fitted sparse feature extractor (every kind except `Tokenizer`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Featurizer {
    pub kind: FeatureKind,
    pub vocab: Vocabulary,
}

impl Featurizer {
    pub fn fit(kind: FeatureKind, docs: &[AnalyzedDoc], min_df: usize) -> Result<Self> {
        if kind == FeatureKind::Tokenizer {
            return Err(Error::invalid("tokenizer features feed the sequence model, not sparse classifiers"));
        }
        Ok(Featurizer {
            kind,
            vocab: build_vocab(docs, kind.vocab_mode(), min_df)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.vocab.len()
    }

    pub fn transform(&self, doc: &AnalyzedDoc) -> Result<SparseVector> {
        let counts = extract_ngrams(doc, &self.vocab)?;
        Ok(match self.kind {
            FeatureKind::Tfidf => tfidf_one(&counts, &self.vocab),
            _ => counts,
        })
    }

    pub fn transform_all(&self, docs: &[AnalyzedDoc]) -> Result<Vec<SparseVector>> {
        docs.iter().map(|d| self.transform(d)).collect()
    }
}
