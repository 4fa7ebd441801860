use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_update, AdamConfig, AdamState};
use super::embedding::EmbeddingMatrix;
use super::lstm::{RnnModel, BLOCK_NAMES};
use crate::{Error, Result, Stance};

/// A token-id sequence and its label.
pub type SeqExample = (Vec<usize>, Stance);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RnnConfig {
    pub hidden_size: usize,
    pub dense_size: usize,
    pub dropout: f64,
    pub max_len: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub init_scale: f64,
    pub adam: AdamConfig,
}

impl Default for RnnConfig {
    fn default() -> Self {
        RnnConfig {
            hidden_size: 128,
            dense_size: 64,
            dropout: 0.5,
            max_len: 50,
            batch_size: 32,
            epochs: 5,
            init_scale: 0.08,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// Mean per-example BCE over the epoch's training batches.
    pub train_loss: f64,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

fn refs(examples: &[SeqExample]) -> (Vec<&[usize]>, Vec<Stance>) {
    examples.iter().map(|(s, y)| (s.as_slice(), *y)).unzip()
}

/// Eval-mode accuracy with threshold 0.5.
pub fn rnn_accuracy(model: &RnnModel, examples: &[SeqExample]) -> Result<f64> {
    let (seqs, labels) = refs(examples);
    let probs = model.predict_proba(&seqs)?;
    let correct = probs
        .iter()
        .zip(&labels)
        .filter(|(&p, &y)| (p >= 0.5) == (y == Stance::Positive))
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Trains the classifier with Adam on mean minibatch BCE. Embeddings stay
/// frozen. Initialization, shuffling and dropout masks all derive from `seed`.
pub fn train_rnn(
    embedding: EmbeddingMatrix,
    train: &[SeqExample],
    val: &[SeqExample],
    config: &RnnConfig,
    seed: u64,
) -> Result<(RnnModel, TrainHistory)> {
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(Error::InvalidConfig("batch_size and epochs must be positive".into()));
    }
    let pos = train.iter().filter(|(_, y)| *y == Stance::Positive).count();
    if pos == 0 || pos == train.len() {
        return Err(Error::invalid("training data must contain both classes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = RnnModel::init(
        embedding,
        config.hidden_size,
        config.dense_size,
        config.max_len,
        config.dropout,
        config.init_scale,
        rng.random(),
    )?;
    let mut adam = AdamState::new(config.adam, &model.block_sizes());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_no, chunk) in order.chunks(config.batch_size).enumerate() {
            let seqs: Vec<&[usize]> = chunk.iter().map(|&i| train[i].0.as_slice()).collect();
            let labels: Vec<Stance> = chunk.iter().map(|&i| train[i].1).collect();
            let mask = model.dropout_mask(chunk.len(), &mut rng);
            let (loss, grads) = model.loss_and_grads(&seqs, &labels, mask)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch_no + 1,
                    loss,
                });
            }
            loss_sum += loss * chunk.len() as f64;
            adam_update(&mut model.param_blocks(&grads), &mut adam)?;
        }
        let val_accuracy = if val.is_empty() {
            None
        } else {
            Some(rnn_accuracy(&model, val)?)
        };
        history.epochs.push(EpochStats {
            train_loss: loss_sum / train.len() as f64,
            val_accuracy,
        });
    }
    Ok((model, history))
}

/// Compares analytic gradients of the eval-mode mean BCE against central
/// finite differences on `samples_per_block` random coordinates of every
/// trainable block. Returns the largest
/// `|g_a - g_n| / max(|g_a| + |g_n|, 1e-12)`.
pub fn gradient_check(
    model: &RnnModel,
    batch: &[SeqExample],
    epsilon: f64,
    samples_per_block: usize,
    seed: u64,
) -> Result<f64> {
    let (seqs, labels) = refs(batch);
    let (_, grads) = model.loss_and_grads(&seqs, &labels, None)?;
    let analytic = grads.blocks();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (b, name) in BLOCK_NAMES.iter().enumerate() {
        let n = analytic[b].len();
        for _ in 0..samples_per_block.min(n) {
            let j = rng.random_range(0..n);
            let orig = probe.blocks_mut()[b][j];
            probe.blocks_mut()[b][j] = orig + epsilon;
            let plus = probe.batch_loss(&seqs, &labels)?;
            probe.blocks_mut()[b][j] = orig - epsilon;
            let minus = probe.batch_loss(&seqs, &labels)?;
            probe.blocks_mut()[b][j] = orig;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic[b][j];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-12);
            if !rel.is_finite() {
                return Err(Error::NonFiniteGradient((*name).to_string()));
            }
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
