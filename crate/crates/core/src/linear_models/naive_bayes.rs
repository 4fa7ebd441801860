use serde::{Deserialize, Serialize};

use super::{check_ids, require_both_classes, Example};
use crate::features::SparseVector;
use crate::{Error, Result, Stance};

/// Multinomial Naive Bayes. Per-class arrays are indexed by
/// [`Stance::index`] (positive first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub log_prior: [f64; 2],
    pub log_cond: [Vec<f64>; 2],
    pub alpha: f64,
    pub vocab_size: usize,
}

/// `log_prior[c] = ln(n_c / n)`,
/// `log_cond[c][t] = ln((count(t, c) + alpha) / (total(c) + alpha * V))`.
pub fn train_naive_bayes(examples: &[Example], vocab_size: usize, alpha: f64) -> Result<NaiveBayesModel> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if vocab_size == 0 {
        return Err(Error::invalid("vocabulary is empty"));
    }
    require_both_classes(examples)?;
    let mut counts = [vec![0.0; vocab_size], vec![0.0; vocab_size]];
    let mut docs = [0usize; 2];
    for (x, y) in examples {
        check_ids(x, vocab_size)?;
        let c = y.index();
        docs[c] += 1;
        for (id, w) in x.iter() {
            counts[c][id] += w;
        }
    }
    let n = examples.len() as f64;
    let log_prior = docs.map(|d| (d as f64 / n).ln());
    let log_cond = counts.map(|cnt| {
        let denom = cnt.iter().sum::<f64>() + alpha * vocab_size as f64;
        cnt.iter().map(|&c| ((c + alpha) / denom).ln()).collect()
    });
    Ok(NaiveBayesModel {
        log_prior,
        log_cond,
        alpha,
        vocab_size,
    })
}

impl NaiveBayesModel {
    /// Unnormalized log posterior of `class`.
    pub fn log_score(&self, x: &SparseVector, class: Stance) -> f64 {
        let c = class.index();
        self.log_prior[c] + x.dot_dense(&self.log_cond[c])
    }

    /// Argmax class; ties go to the larger prior, then to +1.
    pub fn predict(&self, x: &SparseVector) -> Result<Stance> {
        check_ids(x, self.vocab_size)?;
        let pos = self.log_score(x, Stance::Positive);
        let neg = self.log_score(x, Stance::Negative);
        Ok(if pos > neg {
            Stance::Positive
        } else if neg > pos {
            Stance::Negative
        } else if self.log_prior[Stance::Negative.index()] > self.log_prior[Stance::Positive.index()] {
            Stance::Negative
        } else {
            Stance::Positive
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WARM: usize = 0;
    const HOAX: usize = 1;

    fn one(id: usize) -> SparseVector {
        SparseVector::from_pairs([(id, 1.0)])
    }

    fn toy() -> Vec<Example> {
        vec![
            (one(WARM), Stance::Positive),
            (one(WARM), Stance::Positive),
            (one(HOAX), Stance::Negative),
        ]
    }

    #[test]
    fn hand_computed_smoothing() {
        let m = train_naive_bayes(&toy(), 2, 1.0).unwrap();
        let p = |c: Stance, t: usize| m.log_cond[c.index()][t].exp();
        assert!((p(Stance::Positive, WARM) - 0.75).abs() < 1e-15);
        assert!((p(Stance::Positive, HOAX) - 0.25).abs() < 1e-15);
        assert!((p(Stance::Negative, WARM) - 1.0 / 3.0).abs() < 1e-15);
        assert!((p(Stance::Negative, HOAX) - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.log_prior[0].exp() - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.log_prior[1].exp() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_posterior() {
        let m = train_naive_bayes(&toy(), 2, 1.0).unwrap();
        // ln(2/3 * 3/4) > ln(1/3 * 1/3)
        assert_eq!(m.predict(&one(WARM)).unwrap(), Stance::Positive);
        assert!((m.log_score(&one(WARM), Stance::Positive) - 0.5f64.ln()).abs() < 1e-15);
        assert!((m.log_score(&one(WARM), Stance::Negative) - (1.0f64 / 9.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn empty_input_gives_larger_prior() {
        let m = train_naive_bayes(&toy(), 2, 1.0).unwrap();
        assert_eq!(m.predict(&SparseVector::new()).unwrap(), Stance::Positive);
        let flipped: Vec<_> = toy().into_iter().map(|(x, y)| (x, y.flipped())).collect();
        let m = train_naive_bayes(&flipped, 2, 1.0).unwrap();
        assert_eq!(m.predict(&SparseVector::new()).unwrap(), Stance::Negative);
    }

    #[test]
    fn exact_tie_goes_positive() {
        let data = vec![(one(0), Stance::Positive), (one(1), Stance::Negative)];
        let m = train_naive_bayes(&data, 2, 1.0).unwrap();
        assert_eq!(m.predict(&SparseVector::new()).unwrap(), Stance::Positive);
    }

    #[test]
    fn empty_vectors_give_uniform_conditionals() {
        let data = vec![(SparseVector::new(), Stance::Positive), (SparseVector::new(), Stance::Negative)];
        let m = train_naive_bayes(&data, 4, 1.0).unwrap();
        for c in &m.log_cond {
            for &l in c {
                assert!((l.exp() - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn large_alpha_approaches_uniform() {
        let mut last = f64::INFINITY;
        for alpha in [1.0, 10.0, 100.0, 1e4, 1e6] {
            let m = train_naive_bayes(&toy(), 2, alpha).unwrap();
            let gap = m
                .log_cond
                .iter()
                .flat_map(|c| c.iter().map(|l| (l.exp() - 0.5).abs()))
                .fold(0.0, f64::max);
            assert!(gap < last, "alpha {alpha}: {gap} !< {last}");
            last = gap;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn probabilities_normalize() {
        let m = train_naive_bayes(&toy(), 5, 0.5).unwrap();
        let prior: f64 = m.log_prior.iter().map(|l| l.exp()).sum();
        assert!((prior - 1.0).abs() < 1e-12);
        for c in &m.log_cond {
            assert!((c.iter().map(|l| l.exp()).sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn errors() {
        let single: Vec<_> = toy().into_iter().filter(|(_, y)| *y == Stance::Positive).collect();
        assert!(train_naive_bayes(&single, 2, 1.0).is_err());
        assert!(train_naive_bayes(&toy(), 2, 0.0).is_err());
        assert!(train_naive_bayes(&toy(), 1, 1.0).is_err());
        let m = train_naive_bayes(&toy(), 2, 1.0).unwrap();
        assert!(m.predict(&one(2)).is_err());
    }
}
