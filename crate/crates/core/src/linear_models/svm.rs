use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_ids, require_both_classes, Example};
use crate::features::SparseVector;
use crate::{Error, Result, Stance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

impl LinearSvmModel {
    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }

    /// sign(w·x + b) with 0 mapped to +1.
    pub fn predict(&self, x: &SparseVector) -> Result<Stance> {
        check_ids(x, self.weights.len())?;
        Ok(Stance::from_score(self.decision(x)))
    }
}

/// `lambda/2 * (|w|^2 + b^2) + mean hinge loss`.
pub fn svm_objective(model: &LinearSvmModel, examples: &[Example]) -> f64 {
    let reg = model.weights.iter().map(|w| w * w).sum::<f64>() + model.bias * model.bias;
    let hinge: f64 = examples
        .iter()
        .map(|(x, y)| (1.0 - y.as_f64() * model.decision(x)).max(0.0))
        .sum();
    0.5 * model.lambda * reg + hinge / examples.len() as f64
}

/// Weight vector stored as `scale * v` so the per-step decay is O(1).
struct ScaledWeights {
    v: Vec<f64>,
    v_bias: f64,
    scale: f64,
}

impl ScaledWeights {
    fn decision(&self, x: &SparseVector) -> f64 {
        self.scale * (x.dot_dense(&self.v) + self.v_bias)
    }

    fn decay(&mut self, factor: f64) {
        if factor == 0.0 {
            self.v.iter_mut().for_each(|w| *w = 0.0);
            self.v_bias = 0.0;
            self.scale = 1.0;
        } else {
            self.scale *= factor;
            if self.scale < 1e-9 {
                self.v.iter_mut().for_each(|w| *w *= self.scale);
                self.v_bias *= self.scale;
                self.scale = 1.0;
            }
        }
    }

    fn add(&mut self, x: &SparseVector, coef: f64) {
        let c = coef / self.scale;
        for (i, xi) in x.iter() {
            self.v[i] += c * xi;
        }
        self.v_bias += c;
    }

    fn to_model(&self, lambda: f64) -> LinearSvmModel {
        LinearSvmModel {
            weights: self.v.iter().map(|w| w * self.scale).collect(),
            bias: self.v_bias * self.scale,
            lambda,
        }
    }
}

/// Primal SGD on the L2-regularized hinge loss with step size `1/(lambda t)`.
/// The bias is an augmented constant feature and is regularized with the
/// weights. Examples are reshuffled every epoch from `seed`.
pub fn train_linear_svm(
    examples: &[Example],
    vocab_size: usize,
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Result<LinearSvmModel> {
    train_linear_svm_traced(examples, vocab_size, lambda, epochs, seed).map(|(m, _)| m)
}

/// As [`train_linear_svm`], also returning the training objective at the end
/// of every epoch.
pub fn train_linear_svm_traced(
    examples: &[Example],
    vocab_size: usize,
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Result<(LinearSvmModel, Vec<f64>)> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    if epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    require_both_classes(examples)?;
    for (x, _) in examples {
        check_ids(x, vocab_size)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = ScaledWeights {
        v: vec![0.0; vocab_size],
        v_bias: 0.0,
        scale: 1.0,
    };
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut objectives = Vec::with_capacity(epochs);
    let mut t = 0u64;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let (x, y) = &examples[i];
            let y = y.as_f64();
            let eta = 1.0 / (lambda * t as f64);
            let violated = y * w.decision(x) < 1.0;
            w.decay(1.0 - eta * lambda);
            if violated {
                w.add(x, eta * y);
            }
        }
        objectives.push(svm_objective(&w.to_model(lambda), examples));
    }
    Ok((w.to_model(lambda), objectives))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(id: usize) -> SparseVector {
        SparseVector::from_pairs([(id, 1.0)])
    }

    /// Plain dense re-statement of the update rule.
    fn reference_sgd(examples: &[Example], dim: usize, lambda: f64, epochs: usize, seed: u64) -> (Vec<f64>, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        let mut order: Vec<usize> = (0..examples.len()).collect();
        let mut t = 0.0;
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1.0;
                let eta = 1.0 / (lambda * t);
                let x = examples[i].0.to_dense(dim);
                let y = examples[i].1.as_f64();
                let margin = y * (x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b);
                for (wj, xj) in w.iter_mut().zip(&x) {
                    *wj *= 1.0 - eta * lambda;
                    if margin < 1.0 {
                        *wj += eta * y * xj;
                    }
                }
                b *= 1.0 - eta * lambda;
                if margin < 1.0 {
                    b += eta * y;
                }
            }
        }
        (w, b)
    }

    #[test]
    fn separable_one_hot_pair() {
        let data = vec![(one(0), Stance::Positive), (one(1), Stance::Negative)];
        let m = train_linear_svm(&data, 2, 1e-4, 10, 3).unwrap();
        for (x, y) in &data {
            assert_eq!(m.predict(x).unwrap(), *y);
        }
        let (w, b) = reference_sgd(&data, 2, 1e-4, 10, 3);
        for (a, r) in m.weights.iter().zip(&w) {
            assert!((a - r).abs() <= 1e-9 * r.abs().max(1.0), "{a} vs {r}");
        }
        assert!((m.bias - b).abs() <= 1e-9 * b.abs().max(1.0));
    }

    #[test]
    fn matches_reference_on_overlapping_data() {
        let data: Vec<Example> = (0..40)
            .map(|i| {
                let x = SparseVector::from_pairs([(i % 5, 1.0 + (i % 3) as f64), ((i * 7) % 6, 0.5)]);
                (x, if i % 2 == 0 { Stance::Positive } else { Stance::Negative })
            })
            .collect();
        for lambda in [1e-4, 0.1] {
            let m = train_linear_svm(&data, 6, lambda, 7, 11).unwrap();
            let (w, b) = reference_sgd(&data, 6, lambda, 7, 11);
            for (a, r) in m.weights.iter().zip(&w) {
                assert!((a - r).abs() <= 1e-9 * r.abs().max(1.0), "{a} vs {r}");
            }
            assert!((m.bias - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn zero_features_predict_bias_sign() {
        let data = vec![
            (SparseVector::new(), Stance::Positive),
            (SparseVector::new(), Stance::Negative),
            (SparseVector::new(), Stance::Negative),
        ];
        let m = train_linear_svm(&data, 3, 0.1, 5, 0).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0));
        let expected = Stance::from_score(m.bias);
        assert_eq!(m.predict(&SparseVector::new()).unwrap(), expected);
    }

    #[test]
    fn bit_identical_for_same_seed() {
        let data: Vec<Example> = (0..30)
            .map(|i| (SparseVector::from_pairs([(i % 4, 1.0)]), if i % 3 == 0 { Stance::Positive } else { Stance::Negative }))
            .collect();
        let a = train_linear_svm(&data, 4, 1e-3, 4, 9).unwrap();
        let b = train_linear_svm(&data, 4, 1e-3, 4, 9).unwrap();
        assert_eq!(a.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>(), b.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>());
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
    }

    #[test]
    fn sign_rule_maps_zero_to_positive() {
        let m = LinearSvmModel {
            weights: vec![1.0, -1.0],
            bias: 0.0,
            lambda: 1.0,
        };
        assert_eq!(m.predict(&one(0)).unwrap(), Stance::Positive);
        assert_eq!(m.predict(&one(1)).unwrap(), Stance::Negative);
        assert_eq!(m.predict(&SparseVector::new()).unwrap(), Stance::Positive);
        assert!(m.predict(&one(2)).is_err());
    }

    #[test]
    fn objective_non_increasing_on_separable_toy() {
        let data = vec![(one(0), Stance::Positive), (one(1), Stance::Negative)];
        for seed in 0..10 {
            let (_, obj) = train_linear_svm_traced(&data, 2, 1e-4, 10, seed).unwrap();
            for w in obj.windows(2) {
                assert!(w[1] <= w[0] + 1e-6, "{obj:?}");
            }
        }
    }

    #[test]
    fn errors() {
        let data = vec![(one(0), Stance::Positive)];
        assert!(train_linear_svm(&data, 2, 1e-4, 1, 0).is_err());
        let data = vec![(one(0), Stance::Positive), (one(1), Stance::Negative)];
        assert!(train_linear_svm(&data, 2, 0.0, 1, 0).is_err());
        assert!(train_linear_svm(&data, 2, 1e-4, 0, 0).is_err());
        assert!(train_linear_svm(&data, 1, 1e-4, 1, 0).is_err());
    }
}
