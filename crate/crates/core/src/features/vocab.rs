use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::tokenize::{normalize_text, tokenize, TokenSeq};
use super::SparseVector;
use crate::{Error, Result};

/// Reserved sequence ids for token-id encoding.
pub const OOV_ID: usize = 0;
pub const PAD_ID: usize = 1;
pub const RESERVED_IDS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VocabMode {
    WordNgram { n: usize },
    CharNgram { n: usize },
    TokenId,
}

/// A document seen both as tokens (word features) and as normalized text
/// (character features).
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzedDoc {
    pub tokens: TokenSeq,
    pub normalized: String,
}

impl AnalyzedDoc {
    pub fn from_text(text: &str) -> Self {
        AnalyzedDoc {
            tokens: tokenize(text),
            normalized: normalize_text(text),
        }
    }

    pub fn from_tokens(tokens: TokenSeq) -> Self {
        let normalized = tokens.tokens().join(" ");
        AnalyzedDoc { tokens, normalized }
    }
}

impl VocabMode {
    fn validate(self) -> Result<()> {
        match self {
            VocabMode::WordNgram { n: 0 } | VocabMode::CharNgram { n: 0 } => {
                Err(Error::invalid("n-gram width must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    /// Every term occurrence of `doc` under this mode, in order.
    pub fn terms(self, doc: &AnalyzedDoc) -> Vec<String> {
        match self {
            VocabMode::TokenId => doc.tokens.tokens().to_vec(),
            VocabMode::WordNgram { n } => doc.tokens.tokens().windows(n).map(|w| w.join(" ")).collect(),
            VocabMode::CharNgram { n } => {
                let chars: Vec<char> = doc.normalized.chars().collect();
                chars.windows(n).map(|w| w.iter().collect()).collect()
            }
        }
    }
}

/// Term to dense id map with document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "VocabFile", try_from = "VocabFile")]
pub struct Vocabulary {
    mode: VocabMode,
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn mode(&self) -> VocabMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> Option<&str> {
        self.terms.get(id).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, id: usize) -> usize {
        self.doc_freq[id]
    }

    pub fn doc_freq_of(&self, term: &str) -> Option<usize> {
        self.id(term).map(|i| self.doc_freq[i])
    }

    fn from_parts(mode: VocabMode, terms: Vec<String>, doc_freq: Vec<usize>, n_docs: usize) -> Result<Self> {
        let index: HashMap<String, usize> = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if index.len() != terms.len() {
            return Err(Error::invalid("vocabulary terms are not unique"));
        }
        if doc_freq.iter().any(|&df| df > n_docs) {
            return Err(Error::invalid("document frequency exceeds document count"));
        }
        Ok(Vocabulary {
            mode,
            terms,
            doc_freq,
            n_docs,
            index,
        })
    }
}

/// Builds a vocabulary of every term with document frequency at least
/// `min_df`. Ids run by descending document frequency, ties broken
/// lexicographically.
pub fn build_vocab(docs: &[AnalyzedDoc], mode: VocabMode, min_df: usize) -> Result<Vocabulary> {
    mode.validate()?;
    if docs.is_empty() {
        return Err(Error::invalid("cannot build a vocabulary from zero documents"));
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for doc in docs {
        let unique: HashSet<String> = mode.terms(doc).into_iter().collect();
        for t in unique {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = df.into_iter().filter(|&(_, c)| c >= min_df).collect();
    if kept.is_empty() {
        return Err(Error::invalid(format!("vocabulary is empty at min_df = {min_df}")));
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let (terms, doc_freq) = kept.into_iter().unzip();
    Vocabulary::from_parts(mode, terms, doc_freq, docs.len())
}

/// Counts of in-vocabulary n-grams of `doc`; out-of-vocabulary n-grams are
/// ignored.
pub fn extract_ngrams(doc: &AnalyzedDoc, vocab: &Vocabulary) -> Result<SparseVector> {
    if vocab.mode() == VocabMode::TokenId {
        return Err(Error::invalid("token-id vocabularies encode sequences, not n-gram counts"));
    }
    Ok(SparseVector::from_pairs(
        vocab.mode().terms(doc).iter().filter_map(|t| vocab.id(t)).map(|id| (id, 1.0)),
    ))
}

/// Maps tokens to sequence ids (vocabulary id + 2), unknown tokens to
/// [`OOV_ID`], keeps the last `max_len` tokens and left-pads with [`PAD_ID`].
pub fn encode_sequence(tokens: &TokenSeq, vocab: &Vocabulary, max_len: usize) -> Result<Vec<usize>> {
    if max_len == 0 {
        return Err(Error::invalid("max_len must be positive"));
    }
    if vocab.mode() != VocabMode::TokenId {
        return Err(Error::invalid("sequence encoding needs a token-id vocabulary"));
    }
    let toks = tokens.tokens();
    let tail = &toks[toks.len().saturating_sub(max_len)..];
    let mut out = vec![PAD_ID; max_len - tail.len()];
    out.extend(tail.iter().map(|t| vocab.id(t).map_or(OOV_ID, |i| i + RESERVED_IDS)));
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    mode: VocabMode,
    n_docs: usize,
    index: BTreeMap<String, usize>,
    doc_freq: BTreeMap<String, usize>,
}

impl From<Vocabulary> for VocabFile {
    fn from(v: Vocabulary) -> Self {
        VocabFile {
            mode: v.mode,
            n_docs: v.n_docs,
            index: v.terms.iter().cloned().zip(0..).collect(),
            doc_freq: v.terms.iter().cloned().zip(v.doc_freq.iter().copied()).collect(),
        }
    }
}

impl TryFrom<VocabFile> for Vocabulary {
    type Error = Error;

    fn try_from(f: VocabFile) -> Result<Self> {
        let n = f.index.len();
        let mut terms = vec![None; n];
        for (term, id) in f.index {
            match terms.get_mut(id) {
                Some(slot @ None) => *slot = Some(term),
                _ => return Err(Error::invalid(format!("vocabulary ids are not contiguous 0..{n}"))),
            }
        }
        let terms: Vec<String> = terms.into_iter().map(|t| t.expect("filled")).collect();
        let doc_freq = terms
            .iter()
            .map(|t| {
                f.doc_freq
                    .get(t)
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("missing document frequency for {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Vocabulary::from_parts(f.mode, terms, doc_freq, f.n_docs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&[&str]]) -> Vec<AnalyzedDoc> {
        raw.iter().map(|d| AnalyzedDoc::from_tokens(TokenSeq::new(d.iter().copied()))).collect()
    }

    const UNIGRAM: VocabMode = VocabMode::WordNgram { n: 1 };
    const BIGRAM: VocabMode = VocabMode::WordNgram { n: 2 };

    #[test]
    fn ids_by_frequency() {
        let v = build_vocab(&docs(&[&["a", "b"], &["a"]]), UNIGRAM, 1).unwrap();
        assert_eq!((v.id("a"), v.id("b")), (Some(0), Some(1)));
        assert_eq!((v.doc_freq_of("a"), v.doc_freq_of("b")), (Some(2), Some(1)));
        assert_eq!(v.n_docs(), 2);
    }

    #[test]
    fn min_df_filters() {
        let v = build_vocab(&docs(&[&["a", "b"], &["a"]]), UNIGRAM, 2).unwrap();
        assert_eq!(v.terms(), ["a"]);
        assert!(build_vocab(&docs(&[&["a"]]), UNIGRAM, 2).is_err());
    }

    #[test]
    fn ties_break_lexicographically() {
        let v = build_vocab(&docs(&[&["zeta", "alpha", "mid"]]), UNIGRAM, 1).unwrap();
        assert_eq!(v.terms(), ["alpha", "mid", "zeta"]);
    }

    #[test]
    fn char_five_gram_of_one_word() {
        let v = build_vocab(&[AnalyzedDoc::from_text("storm")], VocabMode::CharNgram { n: 5 }, 1).unwrap();
        assert_eq!(v.terms(), ["storm"]);
    }

    #[test]
    fn unigram_and_bigram_counts() {
        let d = docs(&[&["a", "b", "a"]]);
        let uni = build_vocab(&d, UNIGRAM, 1).unwrap();
        let x = extract_ngrams(&d[0], &uni).unwrap();
        assert_eq!((x.get(uni.id("a").unwrap()), x.get(uni.id("b").unwrap())), (2.0, 1.0));

        let bi = build_vocab(&d, BIGRAM, 1).unwrap();
        let x = extract_ngrams(&d[0], &bi).unwrap();
        assert_eq!(x.nnz(), 2);
        assert_eq!(x.get(bi.id("a b").unwrap()), 1.0);
        assert_eq!(x.get(bi.id("b a").unwrap()), 1.0);
    }

    #[test]
    fn char_window_includes_space() {
        let d = AnalyzedDoc::from_text("ab   CD");
        let v = build_vocab(std::slice::from_ref(&d), VocabMode::CharNgram { n: 5 }, 1).unwrap();
        assert_eq!(v.terms(), ["ab cd"]);
        assert_eq!(extract_ngrams(&d, &v).unwrap().get(0), 1.0);
    }

    #[test]
    fn oov_ngrams_ignored() {
        let v = build_vocab(&docs(&[&["a"]]), UNIGRAM, 1).unwrap();
        let x = extract_ngrams(&docs(&[&["a", "q", "r"]])[0], &v).unwrap();
        assert_eq!(x.sum(), 1.0);
    }

    #[test]
    fn encode_pads_left() {
        let v = build_vocab(&docs(&[&["a", "b"], &["a"]]), VocabMode::TokenId, 1).unwrap();
        assert_eq!(encode_sequence(&TokenSeq::new(["a", "b"]), &v, 4).unwrap(), vec![1, 1, 2, 3]);
        assert_eq!(encode_sequence(&TokenSeq::new(["a", "zzz"]), &v, 3).unwrap(), vec![1, 2, 0]);
        assert!(encode_sequence(&TokenSeq::new(["a"]), &v, 0).is_err());
    }

    #[test]
    fn encode_truncates_keeping_tail() {
        let words: Vec<String> = (0..60).map(|i| format!("w{i:02}")).collect();
        let seq = TokenSeq::new(words.clone());
        let v = build_vocab(&[AnalyzedDoc::from_tokens(seq.clone())], VocabMode::TokenId, 1).unwrap();
        let ids = encode_sequence(&seq, &v, 50).unwrap();
        let expected: Vec<usize> = words[10..].iter().map(|w| v.id(w).unwrap() + 2).collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn mode_mismatch_rejected() {
        let d = docs(&[&["a"]]);
        let tok = build_vocab(&d, VocabMode::TokenId, 1).unwrap();
        assert!(extract_ngrams(&d[0], &tok).is_err());
        let uni = build_vocab(&d, UNIGRAM, 1).unwrap();
        assert!(encode_sequence(&d[0].tokens, &uni, 3).is_err());
    }

    #[test]
    fn json_round_trip() {
        let v = build_vocab(&docs(&[&["a", "b", "c"], &["a", "c"], &["c"]]), BIGRAM, 1).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&s).unwrap();
        assert_eq!(v, back);
        assert_eq!(s, serde_json::to_string(&back).unwrap());
    }
}
