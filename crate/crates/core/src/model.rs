//! A trained classifier bundled with its feature pipeline, so a saved model
//! file is enough to predict on raw text.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::features::{build_vocab, encode_sequence, AnalyzedDoc, FeatureKind, Featurizer, SparseVector, VocabMode, Vocabulary};
use crate::linear_models::{
    train_kmeans_classifier, train_linear_svm, train_naive_bayes, Example, KMeansClassifierModel, LinearSvmModel, NaiveBayesModel,
    DEFAULT_ALPHA, DEFAULT_KMEANS_K, DEFAULT_LAMBDA, DEFAULT_KMEANS_MAX_ITER, DEFAULT_SVM_EPOCHS, DEFAULT_KMEANS_TOL,
};
use crate::neural::{load_embeddings, parse_embeddings, train_rnn, EmbeddingMatrix, RnnConfig, RnnModel, SeqExample, TrainHistory};
use crate::{Error, Result, Stance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Nb,
    Svm,
    Kmeans,
    Rnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Nb, ModelKind::Svm, ModelKind::Kmeans, ModelKind::Rnn];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Nb => "nb",
            ModelKind::Svm => "svm",
            ModelKind::Kmeans => "kmeans",
            ModelKind::Rnn => "rnn",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Nb => "Naive Bayes",
            ModelKind::Svm => "SVM",
            ModelKind::Kmeans => "k-means",
            ModelKind::Rnn => "RNN",
        }
    }

    /// The RNN consumes token sequences; the rest consume sparse vectors.
    pub fn check_features(self, features: FeatureKind) -> Result<()> {
        match (self, features) {
            (ModelKind::Rnn, FeatureKind::Tokenizer) => Ok(()),
            (ModelKind::Rnn, f) => Err(Error::InvalidConfig(format!("rnn requires tokenizer features, got {}", f.as_str()))),
            (m, FeatureKind::Tokenizer) => Err(Error::InvalidConfig(format!(
                "{} needs sparse features (unigram, bigram, char5 or tfidf), not tokenizer",
                m.as_str()
            ))),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model {s:?} (expected nb, svm, kmeans or rnn)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum TrainedModel {
    NaiveBayes(NaiveBayesModel),
    LinearSvm(LinearSvmModel),
    KMeans(KMeansClassifierModel),
    Rnn(RnnModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::NaiveBayes(_) => ModelKind::Nb,
            TrainedModel::LinearSvm(_) => ModelKind::Svm,
            TrainedModel::KMeans(_) => ModelKind::Kmeans,
            TrainedModel::Rnn(_) => ModelKind::Rnn,
        }
    }
}

/// Prediction for one sparse feature vector. The RNN takes sequences and
/// is rejected here.
pub fn predict(model: &TrainedModel, features: &SparseVector) -> Result<Stance> {
    match model {
        TrainedModel::NaiveBayes(m) => m.predict(features),
        TrainedModel::LinearSvm(m) => m.predict(features),
        TrainedModel::KMeans(m) => m.predict(features),
        TrainedModel::Rnn(_) => Err(Error::invalid("the rnn predicts from token sequences, not sparse vectors")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureEncoder {
    Sparse { featurizer: Featurizer },
    Sequence { vocab: Vocabulary, max_len: usize },
}

impl FeatureEncoder {
    pub fn feature_kind(&self) -> FeatureKind {
        match self {
            FeatureEncoder::Sparse { featurizer } => featurizer.kind,
            FeatureEncoder::Sequence { .. } => FeatureKind::Tokenizer,
        }
    }
}

/// Hyperparameters for every model kind; only the selected model's apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub min_df: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub svm_epochs: usize,
    pub k: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub rnn: RnnConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            min_df: 1,
            alpha: DEFAULT_ALPHA,
            lambda: DEFAULT_LAMBDA,
            svm_epochs: DEFAULT_SVM_EPOCHS,
            k: DEFAULT_KMEANS_K,
            kmeans_max_iter: DEFAULT_KMEANS_MAX_ITER,
            kmeans_tol: DEFAULT_KMEANS_TOL,
            rnn: RnnConfig::default(),
        }
    }
}

/// Where the RNN's pretrained vectors come from.
#[derive(Debug, Clone, Copy)]
pub enum EmbeddingSource<'a> {
    File(&'a Path),
    Text(&'a str),
}

impl EmbeddingSource<'_> {
    fn load(self, vocab: &Vocabulary) -> Result<EmbeddingMatrix> {
        match self {
            EmbeddingSource::File(p) => load_embeddings(p, vocab),
            EmbeddingSource::Text(t) => parse_embeddings(t.as_bytes(), vocab),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub encoder: FeatureEncoder,
    pub model: TrainedModel,
}

impl Classifier {
    /// Fits features on `train` and trains `kind`. The RNN needs embeddings
    /// and uses `val` only for per-epoch accuracy in the returned history.
    pub fn train(
        kind: ModelKind,
        features: FeatureKind,
        train: &[(AnalyzedDoc, Stance)],
        val: &[(AnalyzedDoc, Stance)],
        config: &TrainConfig,
        embeddings: Option<EmbeddingSource<'_>>,
        seed: u64,
    ) -> Result<(Self, Option<TrainHistory>)> {
        kind.check_features(features)?;
        let docs: Vec<AnalyzedDoc> = train.iter().map(|(d, _)| d.clone()).collect();
        if kind == ModelKind::Rnn {
            let source = embeddings.ok_or_else(|| Error::InvalidConfig("rnn requires --embeddings".into()))?;
            let vocab = build_vocab(&docs, VocabMode::TokenId, config.min_df)?;
            let matrix = source.load(&vocab)?;
            let max_len = config.rnn.max_len;
            let encode = |set: &[(AnalyzedDoc, Stance)]| -> Result<Vec<SeqExample>> {
                set.iter()
                    .map(|(d, y)| Ok((encode_sequence(&d.tokens, &vocab, max_len)?, *y)))
                    .collect()
            };
            let (model, history) = train_rnn(matrix, &encode(train)?, &encode(val)?, &config.rnn, seed)?;
            let classifier = Classifier {
                encoder: FeatureEncoder::Sequence { vocab, max_len },
                model: TrainedModel::Rnn(model),
            };
            return Ok((classifier, Some(history)));
        }
        let featurizer = Featurizer::fit(features, &docs, config.min_df)?;
        let dim = featurizer.dim();
        let examples: Vec<Example> = train
            .iter()
            .map(|(d, y)| Ok((featurizer.transform(d)?, *y)))
            .collect::<Result<_>>()?;
        let model = match kind {
            ModelKind::Nb => TrainedModel::NaiveBayes(train_naive_bayes(&examples, dim, config.alpha)?),
            ModelKind::Svm => TrainedModel::LinearSvm(train_linear_svm(&examples, dim, config.lambda, config.svm_epochs, seed)?),
            ModelKind::Kmeans => TrainedModel::KMeans(train_kmeans_classifier(
                &examples,
                dim,
                config.k,
                seed,
                config.kmeans_max_iter,
                config.kmeans_tol,
            )?),
            ModelKind::Rnn => unreachable!("handled above"),
        };
        Ok((
            Classifier {
                encoder: FeatureEncoder::Sparse { featurizer },
                model,
            },
            None,
        ))
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn feature_kind(&self) -> FeatureKind {
        self.encoder.feature_kind()
    }

    /// "<features> <model>", e.g. "Unigram SVM".
    pub fn method_name(&self) -> String {
        format!("{} {}", self.feature_kind().display_name(), self.kind().display_name())
    }

    pub fn predict_docs(&self, docs: &[AnalyzedDoc]) -> Result<Vec<Stance>> {
        match (&self.encoder, &self.model) {
            (FeatureEncoder::Sequence { vocab, max_len }, TrainedModel::Rnn(m)) => {
                let seqs: Vec<Vec<usize>> = docs
                    .iter()
                    .map(|d| encode_sequence(&d.tokens, vocab, *max_len))
                    .collect::<Result<_>>()?;
                let refs: Vec<&[usize]> = seqs.iter().map(Vec::as_slice).collect();
                Ok(m.predict_proba(&refs)?.into_iter().map(|p| Stance::from_score(p - 0.5)).collect())
            }
            (FeatureEncoder::Sparse { featurizer }, m) => docs.iter().map(|d| predict(m, &featurizer.transform(d)?)).collect(),
            _ => Err(Error::InvalidConfig("model and feature encoder do not match".into())),
        }
    }

    pub fn predict_texts<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<Stance>> {
        let docs: Vec<AnalyzedDoc> = texts.iter().map(|t| AnalyzedDoc::from_text(t.as_ref())).collect();
        self.predict_docs(&docs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Classifier = serde_json::from_str(s)?;
        c.kind().check_features(c.feature_kind())?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer(&mut out, self)?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let c: Classifier = serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        c.kind().check_features(c.feature_kind())?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> Vec<(AnalyzedDoc, Stance)> {
        let texts = [
            ("climate action now", Stance::Positive),
            ("science says warming is real", Stance::Positive),
            ("act on climate science", Stance::Positive),
            ("global warming hoax", Stance::Negative),
            ("climate scam again", Stance::Negative),
            ("hoax hoax scam", Stance::Negative),
        ];
        texts.iter().map(|(t, y)| (AnalyzedDoc::from_text(t), *y)).collect()
    }

    #[test]
    fn combinations_validated() {
        assert!(ModelKind::Rnn.check_features(FeatureKind::Unigram).is_err());
        assert!(ModelKind::Nb.check_features(FeatureKind::Tokenizer).is_err());
        assert!(ModelKind::Svm.check_features(FeatureKind::Char5).is_ok());
        let r = Classifier::train(ModelKind::Rnn, FeatureKind::Tokenizer, &data(), &[], &TrainConfig::default(), None, 0);
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn save_load_predicts_identically() {
        for kind in [ModelKind::Nb, ModelKind::Svm, ModelKind::Kmeans] {
            for features in [FeatureKind::Unigram, FeatureKind::Tfidf, FeatureKind::Char5] {
                let (c, _) = Classifier::train(kind, features, &data(), &[], &TrainConfig::default(), None, 7).unwrap();
                let back = Classifier::from_json(&c.to_json().unwrap()).unwrap();
                assert_eq!(back, c);
                let texts = ["climate hoax", "warming science", "unseen words"];
                assert_eq!(back.predict_texts(&texts).unwrap(), c.predict_texts(&texts).unwrap());
            }
        }
    }

    #[test]
    fn method_name_row_label() {
        let (c, _) = Classifier::train(ModelKind::Svm, FeatureKind::Unigram, &data(), &[], &TrainConfig::default(), None, 0).unwrap();
        assert_eq!(c.method_name(), "Unigram SVM");
        assert_eq!(c.predict_texts(&["hoax scam"]).unwrap(), [Stance::Negative]);
    }
}
