//! Classical classifiers over sparse features (multinomial Naive Bayes with
//! Laplace smoothing, a linear SVM trained by primal SGD, a k-means
//! classifier) and the accuracy/confusion harness.

mod eval;
mod kmeans_classifier;
mod naive_bayes;
mod svm;

use crate::features::SparseVector;
use crate::{Error, Result, Stance};

pub use eval::{evaluate, format_table_row, Confusion, EvalReport};
pub use kmeans_classifier::{train_kmeans_classifier, KMeansClassifierModel};
pub use naive_bayes::{train_naive_bayes, NaiveBayesModel};
pub use svm::{svm_objective, train_linear_svm, train_linear_svm_traced, LinearSvmModel};

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_LAMBDA: f64 = 1e-4;
pub const DEFAULT_SVM_EPOCHS: usize = 10;
pub const DEFAULT_KMEANS_K: usize = 2;
pub const DEFAULT_KMEANS_MAX_ITER: usize = 100;
pub const DEFAULT_KMEANS_TOL: f64 = 1e-6;

pub type Example = (SparseVector, Stance);

fn require_both_classes(examples: &[Example]) -> Result<()> {
    let pos = examples.iter().filter(|(_, y)| *y == Stance::Positive).count();
    if pos == 0 || pos == examples.len() {
        return Err(Error::invalid("training data must contain both classes"));
    }
    Ok(())
}

fn check_ids(x: &SparseVector, vocab_size: usize) -> Result<()> {
    match x.max_id() {
        Some(id) if id >= vocab_size => Err(Error::invalid(format!(
            "feature id {id} out of range for vocabulary of size {vocab_size}"
        ))),
        _ => Ok(()),
    }
}
