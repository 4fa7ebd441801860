use serde::{Deserialize, Serialize};

use super::{check_ids, Example};
use crate::features::SparseVector;
use crate::kmeans::{kmeans, nearest, KMeansConfig};
use crate::{Error, Result, Stance};

/// Nearest-centroid classifier whose clusters carry the majority training
/// label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansClassifierModel {
    pub centroids: Vec<Vec<f64>>,
    pub cluster_label: Vec<Stance>,
    pub vocab_size: usize,
}

pub fn train_kmeans_classifier(
    examples: &[Example],
    vocab_size: usize,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansClassifierModel> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    let points: Vec<SparseVector> = examples.iter().map(|(x, _)| x.clone()).collect();
    for p in &points {
        check_ids(p, vocab_size)?;
    }
    let fit = kmeans(&points, vocab_size, &KMeansConfig { k, max_iter, tol, seed })?;
    let mut votes = vec![0i64; k];
    for ((_, y), &a) in examples.iter().zip(&fit.assignments) {
        votes[a] += i64::from(y.as_i8());
    }
    Ok(KMeansClassifierModel {
        centroids: fit.centroids,
        cluster_label: votes.into_iter().map(|v| Stance::from_score(v as f64)).collect(),
        vocab_size,
    })
}

impl KMeansClassifierModel {
    /// Cluster of the nearest centroid; ties go to the lowest id.
    pub fn cluster_of(&self, x: &SparseVector) -> Result<usize> {
        check_ids(x, self.vocab_size)?;
        let norms: Vec<f64> = self.centroids.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
        Ok(nearest(x, &self.centroids, &norms).0)
    }

    pub fn predict(&self, x: &SparseVector) -> Result<Stance> {
        Ok(self.cluster_label[self.cluster_of(x)?])
    }
}
