use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Corpus;
use crate::{Error, Result, Stance};

/// Stratified seeded train/validation split.
///
/// Within each class the record indices are shuffled and the first
/// `floor(train_fraction * n_class)` go to training. Both outputs keep the
/// input's relative order.
pub fn split_train_val(corpus: &Corpus, train_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!("train fraction must be in (0, 1), got {train_fraction}")));
    }
    let labels = corpus.labels()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; labels.len()];
    for class in Stance::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < 2 {
            return Err(Error::invalid(format!("class {class} has {} records; need at least 2", idx.len())));
        }
        idx.shuffle(&mut rng);
        let n_train = (train_fraction * idx.len() as f64).floor() as usize;
        for &i in &idx[..n_train] {
            in_train[i] = true;
        }
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (r, keep) in corpus.records().iter().zip(in_train) {
        if keep {
            train.push(r.clone());
        } else {
            val.push(r.clone());
        }
    }
    Ok((
        Corpus::from_validated(train, corpus.provenance()),
        Corpus::from_validated(val, corpus.provenance()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Provenance, TweetRecord};
    use chrono::{TimeZone, Utc};
    use std::collections::HashSet;

    fn labeled(n_pos: usize, n_neg: usize) -> Corpus {
        let t = Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap();
        let records = (0..n_pos + n_neg)
            .map(|i| {
                let mut r = TweetRecord::new(format!("t{i}"), "u", t, "x");
                r.label = Some(if i < n_pos { Stance::Positive } else { Stance::Negative });
                r
            })
            .collect();
        Corpus::new(records, Provenance::Influential).unwrap()
    }

    #[test]
    fn ninety_ten_is_exact_and_balanced() {
        let (train, val) = split_train_val(&labeled(500, 500), 0.9, 7).unwrap();
        assert_eq!((train.len(), val.len()), (900, 100));
        let pos = |c: &Corpus| c.labels().unwrap().iter().filter(|&&s| s == Stance::Positive).count();
        assert_eq!(pos(&train), 450);
        assert_eq!(pos(&val), 50);
    }

    #[test]
    fn partition_and_determinism() {
        let c = labeled(37, 61);
        let (a1, b1) = split_train_val(&c, 0.9, 3).unwrap();
        let (a2, b2) = split_train_val(&c, 0.9, 3).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        let ta: HashSet<_> = a1.records().iter().map(|r| &r.id).collect();
        let tb: HashSet<_> = b1.records().iter().map(|r| &r.id).collect();
        assert!(ta.is_disjoint(&tb));
        assert_eq!(ta.len() + tb.len(), c.len());
        let (a3, _) = split_train_val(&c, 0.9, 4).unwrap();
        assert_ne!(a1, a3);
    }

    #[test]
    fn tiny_class_rejected() {
        assert!(split_train_val(&labeled(1, 10), 0.9, 0).is_err());
        assert!(split_train_val(&labeled(10, 10), 1.0, 0).is_err());
        assert!(split_train_val(&labeled(10, 10), 0.0, 0).is_err());
    }

    #[test]
    fn unlabeled_rejected() {
        let t = Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap();
        let c = Corpus::new(vec![TweetRecord::new("1", "u", t, "x")], Provenance::Influential).unwrap();
        assert!(split_train_val(&c, 0.9, 0).is_err());
    }
}
