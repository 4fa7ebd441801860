use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::ParamBlock;
use super::embedding::EmbeddingMatrix;
use crate::{Error, Result, Stance};

/// Probabilities are clamped to `[P_CLAMP, 1 - P_CLAMP]` inside the loss.
pub const P_CLAMP: f64 = 1e-7;

/// Binary cross-entropy of probability `p` against a ±1 label.
pub fn bce_loss(p: f64, y: Stance) -> f64 {
    let p = p.clamp(P_CLAMP, 1.0 - P_CLAMP);
    match y {
        Stance::Positive => -p.ln(),
        Stance::Negative => -(1.0 - p).ln(),
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active with a mask drawn from `seed`.
    Train { seed: u64 },
    Eval,
}

/// Embedding → LSTM → dropout on the final hidden state → dense + ReLU →
/// dense + sigmoid.
///
/// The four LSTM gate blocks are laid out as input, forget, cell candidate
/// and output along the `4H` axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnModel {
    pub embedding: EmbeddingMatrix,
    pub hidden_size: usize,
    pub dense_size: usize,
    pub max_len: usize,
    pub dropout_rate: f64,
    /// E × 4H
    pub lstm_w: Array2<f64>,
    /// H × 4H
    pub lstm_u: Array2<f64>,
    pub lstm_b: Array1<f64>,
    /// H × D
    pub dense_w: Array2<f64>,
    pub dense_b: Array1<f64>,
    pub out_w: Array1<f64>,
    pub out_b: Array1<f64>,
}

/// Gradients of every trainable block, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnGrads {
    pub lstm_w: Array2<f64>,
    pub lstm_u: Array2<f64>,
    pub lstm_b: Array1<f64>,
    pub dense_w: Array2<f64>,
    pub dense_b: Array1<f64>,
    pub out_w: Array1<f64>,
    pub out_b: Array1<f64>,
}

pub const BLOCK_NAMES: [&str; 7] = ["lstm.w", "lstm.u", "lstm.b", "dense.w", "dense.b", "out.w", "out.b"];

impl RnnGrads {
    pub fn blocks(&self) -> [&[f64]; 7] {
        [
            self.lstm_w.as_slice().expect("standard layout"),
            self.lstm_u.as_slice().expect("standard layout"),
            self.lstm_b.as_slice().expect("standard layout"),
            self.dense_w.as_slice().expect("standard layout"),
            self.dense_b.as_slice().expect("standard layout"),
            self.out_w.as_slice().expect("standard layout"),
            self.out_b.as_slice().expect("standard layout"),
        ]
    }
}

struct StepCache {
    i: Array2<f64>,
    f: Array2<f64>,
    g: Array2<f64>,
    o: Array2<f64>,
    c: Array2<f64>,
    tanh_c: Array2<f64>,
}

struct ForwardCache {
    /// Embedded inputs, (T·B) × E, time-major.
    x_all: Array2<f64>,
    /// Hidden state entering each step, (T·B) × H, time-major.
    h_prev_all: Array2<f64>,
    steps: Vec<StepCache>,
    mask: Option<Array2<f64>>,
    /// Final hidden state after dropout.
    h_drop: Array2<f64>,
    dense_pre: Array2<f64>,
    dense_act: Array2<f64>,
    probs: Array1<f64>,
}

fn uniform(rng: &mut ChaCha8Rng, shape: (usize, usize), scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || rng.random_range(-scale..=scale))
}

impl RnnModel {
    /// Non-embedding parameters drawn uniformly from ±`init_scale`.
    pub fn init(
        embedding: EmbeddingMatrix,
        hidden_size: usize,
        dense_size: usize,
        max_len: usize,
        dropout_rate: f64,
        init_scale: f64,
        seed: u64,
    ) -> Result<Self> {
        if hidden_size == 0 || dense_size == 0 || max_len == 0 {
            return Err(Error::InvalidConfig("hidden, dense and max_len must be positive".into()));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::InvalidConfig(format!("dropout rate must be in [0, 1), got {dropout_rate}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = embedding.dim;
        let h4 = 4 * hidden_size;
        let lstm_w = uniform(&mut rng, (e, h4), init_scale);
        let lstm_u = uniform(&mut rng, (hidden_size, h4), init_scale);
        let lstm_b = uniform(&mut rng, (1, h4), init_scale).remove_axis(Axis(0));
        let dense_w = uniform(&mut rng, (hidden_size, dense_size), init_scale);
        let dense_b = uniform(&mut rng, (1, dense_size), init_scale).remove_axis(Axis(0));
        let out_w = uniform(&mut rng, (1, dense_size), init_scale).remove_axis(Axis(0));
        let out_b = uniform(&mut rng, (1, 1), init_scale).remove_axis(Axis(0));
        Ok(RnnModel {
            embedding,
            hidden_size,
            dense_size,
            max_len,
            dropout_rate,
            lstm_w,
            lstm_u,
            lstm_b,
            dense_w,
            dense_b,
            out_w,
            out_b,
        })
    }

    pub fn zero_grads(&self) -> RnnGrads {
        RnnGrads {
            lstm_w: Array2::zeros(self.lstm_w.raw_dim()),
            lstm_u: Array2::zeros(self.lstm_u.raw_dim()),
            lstm_b: Array1::zeros(self.lstm_b.raw_dim()),
            dense_w: Array2::zeros(self.dense_w.raw_dim()),
            dense_b: Array1::zeros(self.dense_b.raw_dim()),
            out_w: Array1::zeros(self.out_w.raw_dim()),
            out_b: Array1::zeros(self.out_b.raw_dim()),
        }
    }

    pub fn block_sizes(&self) -> [usize; 7] {
        [
            self.lstm_w.len(),
            self.lstm_u.len(),
            self.lstm_b.len(),
            self.dense_w.len(),
            self.dense_b.len(),
            self.out_w.len(),
            self.out_b.len(),
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 7] {
        [
            self.lstm_w.as_slice_mut().expect("standard layout"),
            self.lstm_u.as_slice_mut().expect("standard layout"),
            self.lstm_b.as_slice_mut().expect("standard layout"),
            self.dense_w.as_slice_mut().expect("standard layout"),
            self.dense_b.as_slice_mut().expect("standard layout"),
            self.out_w.as_slice_mut().expect("standard layout"),
            self.out_b.as_slice_mut().expect("standard layout"),
        ]
    }

    /// Pairs every trainable block with its gradient for the optimizer.
    pub fn param_blocks<'a>(&'a mut self, grads: &'a RnnGrads) -> Vec<ParamBlock<'a>> {
        self.blocks_mut()
            .into_iter()
            .zip(grads.blocks())
            .zip(BLOCK_NAMES)
            .map(|((values, grads), name)| ParamBlock { name, values, grads })
            .collect()
    }

    fn check_ids(&self, seqs: &[&[usize]]) -> Result<()> {
        let rows = self.embedding.n_rows();
        for seq in seqs {
            if seq.len() != self.max_len {
                return Err(Error::invalid(format!("sequence length {} != max_len {}", seq.len(), self.max_len)));
            }
            if let Some(&id) = seq.iter().find(|&&id| id >= rows) {
                return Err(Error::invalid(format!("token id {id} out of range for {rows} embedding rows")));
            }
        }
        Ok(())
    }

    /// Inverted-dropout mask for a batch of `batch` final hidden states.
    pub fn dropout_mask(&self, batch: usize, rng: &mut impl Rng) -> Option<Array2<f64>> {
        if self.dropout_rate == 0.0 {
            return None;
        }
        let keep = 1.0 - self.dropout_rate;
        Some(Array2::from_shape_simple_fn((batch, self.hidden_size), || {
            if rng.random_bool(keep) {
                1.0 / keep
            } else {
                0.0
            }
        }))
    }

    fn forward(&self, seqs: &[&[usize]], mask: Option<Array2<f64>>) -> ForwardCache {
        let b = seqs.len();
        let t_len = self.max_len;
        let hs = self.hidden_size;
        let e = self.embedding.dim;

        let mut x_all = Array2::zeros((t_len * b, e));
        for t in 0..t_len {
            for (k, seq) in seqs.iter().enumerate() {
                x_all.row_mut(t * b + k).assign(&self.embedding.rows.row(seq[t]));
            }
        }
        let xw = x_all.dot(&self.lstm_w) + &self.lstm_b;

        let mut h = Array2::<f64>::zeros((b, hs));
        let mut c = Array2::<f64>::zeros((b, hs));
        let mut h_prev_all = Array2::zeros((t_len * b, hs));
        let mut steps = Vec::with_capacity(t_len);
        for t in 0..t_len {
            h_prev_all.slice_mut(s![t * b..(t + 1) * b, ..]).assign(&h);
            let z = &xw.slice(s![t * b..(t + 1) * b, ..]) + &h.dot(&self.lstm_u);
            let i = z.slice(s![.., 0..hs]).mapv(sigmoid);
            let f = z.slice(s![.., hs..2 * hs]).mapv(sigmoid);
            let g = z.slice(s![.., 2 * hs..3 * hs]).mapv(f64::tanh);
            let o = z.slice(s![.., 3 * hs..4 * hs]).mapv(sigmoid);
            c = &f * &c + &i * &g;
            let tanh_c = c.mapv(f64::tanh);
            h = &o * &tanh_c;
            steps.push(StepCache {
                i,
                f,
                g,
                o,
                c: c.clone(),
                tanh_c,
            });
        }
        let h_drop = match &mask {
            Some(m) => &h * m,
            None => h,
        };
        let dense_pre = h_drop.dot(&self.dense_w) + &self.dense_b;
        let dense_act = dense_pre.mapv(|x| x.max(0.0));
        let logits = dense_act.dot(&self.out_w) + self.out_b[0];
        let probs = logits.mapv(sigmoid);
        ForwardCache {
            x_all,
            h_prev_all,
            steps,
            mask,
            h_drop,
            dense_pre,
            dense_act,
            probs,
        }
    }

    fn backward(&self, cache: &ForwardCache, labels: &[Stance]) -> RnnGrads {
        let b = labels.len();
        let hs = self.hidden_size;
        let t_len = self.max_len;
        let dlogit: Array1<f64> = cache
            .probs
            .iter()
            .zip(labels)
            .map(|(&p, y)| (p - y.as_target()) / b as f64)
            .collect();

        let mut grads = self.zero_grads();
        grads.out_w = cache.dense_act.t().dot(&dlogit);
        grads.out_b[0] = dlogit.sum();

        let mut d_dense = Array2::zeros((b, self.dense_size));
        for (k, mut row) in d_dense.rows_mut().into_iter().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if cache.dense_pre[[k, j]] > 0.0 {
                    *v = dlogit[k] * self.out_w[j];
                }
            }
        }
        grads.dense_w = cache.h_drop.t().dot(&d_dense);
        grads.dense_b = d_dense.sum_axis(Axis(0));
        let mut dh = d_dense.dot(&self.dense_w.t());
        if let Some(m) = &cache.mask {
            dh *= m;
        }

        let mut dc = Array2::<f64>::zeros((b, hs));
        let mut dz_all = Array2::<f64>::zeros((t_len * b, 4 * hs));
        let zero = Array2::<f64>::zeros((b, hs));
        for t in (0..t_len).rev() {
            let st = &cache.steps[t];
            let c_prev = if t == 0 { zero.view() } else { cache.steps[t - 1].c.view() };
            dc = dc + &dh * &st.o * &st.tanh_c.mapv(|x| 1.0 - x * x);
            let d_o = &dh * &st.tanh_c;
            let d_i = &dc * &st.g;
            let d_g = &dc * &st.i;
            let d_f = &dc * &c_prev;
            let mut dz = dz_all.slice_mut(s![t * b..(t + 1) * b, ..]);
            dz.slice_mut(s![.., 0..hs]).assign(&(&d_i * &st.i.mapv(|x| x * (1.0 - x))));
            dz.slice_mut(s![.., hs..2 * hs]).assign(&(&d_f * &st.f.mapv(|x| x * (1.0 - x))));
            dz.slice_mut(s![.., 2 * hs..3 * hs]).assign(&(&d_g * &st.g.mapv(|x| 1.0 - x * x)));
            dz.slice_mut(s![.., 3 * hs..4 * hs]).assign(&(&d_o * &st.o.mapv(|x| x * (1.0 - x))));
            dh = dz.dot(&self.lstm_u.t());
            dc = &dc * &st.f;
        }
        grads.lstm_w = cache.x_all.t().dot(&dz_all);
        grads.lstm_u = cache.h_prev_all.t().dot(&dz_all);
        grads.lstm_b = dz_all.sum_axis(Axis(0));
        grads
    }

    /// Mean BCE of a batch and its gradient with respect to every trainable
    /// block. `mask` is the dropout mask (None for eval behaviour).
    pub fn loss_and_grads(
        &self,
        seqs: &[&[usize]],
        labels: &[Stance],
        mask: Option<Array2<f64>>,
    ) -> Result<(f64, RnnGrads)> {
        if seqs.is_empty() || seqs.len() != labels.len() {
            return Err(Error::invalid("batch must be non-empty with one label per sequence"));
        }
        self.check_ids(seqs)?;
        let cache = self.forward(seqs, mask);
        let loss = cache.probs.iter().zip(labels).map(|(&p, &y)| bce_loss(p, y)).sum::<f64>() / labels.len() as f64;
        Ok((loss, self.backward(&cache, labels)))
    }

    /// Mean BCE of a batch in eval mode, without gradients.
    pub fn batch_loss(&self, seqs: &[&[usize]], labels: &[Stance]) -> Result<f64> {
        let probs = self.predict_proba(seqs)?;
        Ok(probs.iter().zip(labels).map(|(&p, &y)| bce_loss(p, y)).sum::<f64>() / labels.len() as f64)
    }

    /// Eval-mode probabilities of the positive class.
    pub fn predict_proba(&self, seqs: &[&[usize]]) -> Result<Vec<f64>> {
        self.check_ids(seqs)?;
        let mut out = Vec::with_capacity(seqs.len());
        for chunk in seqs.chunks(256) {
            out.extend(self.forward(chunk, None).probs.iter().copied());
        }
        Ok(out)
    }

    /// Probability ≥ 0.5 → +1.
    pub fn predict(&self, seq: &[usize]) -> Result<Stance> {
        let p = rnn_forward(self, seq, Mode::Eval)?;
        Ok(if p >= 0.5 { Stance::Positive } else { Stance::Negative })
    }

    pub fn embedding_view(&self) -> ArrayView2<'_, f64> {
        self.embedding.rows.view()
    }
}

/// Probability that one sequence is positive.
pub fn rnn_forward(model: &RnnModel, ids: &[usize], mode: Mode) -> Result<f64> {
    model.check_ids(&[ids])?;
    let mask = match mode {
        Mode::Eval => None,
        Mode::Train { seed } => model.dropout_mask(1, &mut ChaCha8Rng::seed_from_u64(seed)),
    };
    Ok(model.forward(&[ids], mask).probs[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_model(seed: u64, dropout: f64) -> RnnModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let mut rows = Array2::from_shape_simple_fn((12, 4), || rng.random_range(-1.0..1.0));
        rows.row_mut(1).fill(0.0);
        let emb = EmbeddingMatrix::from_rows(rows).unwrap();
        RnnModel::init(emb, 5, 3, 6, dropout, 0.3, seed).unwrap()
    }

    #[test]
    fn bce_values() {
        let ln2 = std::f64::consts::LN_2;
        assert!((bce_loss(0.5, Stance::Positive) - ln2).abs() < 1e-15);
        assert!((bce_loss(0.5, Stance::Negative) - ln2).abs() < 1e-15);
        assert!((bce_loss(1.0 - 1e-7, Stance::Positive) - 1e-7).abs() < 1e-12);
        assert!(bce_loss(1.0, Stance::Positive) >= 0.0);
        assert!(bce_loss(0.0, Stance::Positive).is_finite());
    }

    #[test]
    fn zero_parameters_give_half() {
        let mut m = small_model(1, 0.5);
        for block in m.blocks_mut() {
            block.fill(0.0);
        }
        let p = rnn_forward(&m, &[1, 1, 2, 3, 4, 5], Mode::Eval).unwrap();
        assert_eq!(p, 0.5);
        let p = rnn_forward(&m, &[1, 1, 2, 3, 4, 5], Mode::Train { seed: 3 }).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn eval_is_deterministic_and_in_range() {
        let m = small_model(2, 0.5);
        let ids = [0, 11, 2, 7, 3, 9];
        let a = rnn_forward(&m, &ids, Mode::Eval).unwrap();
        let b = rnn_forward(&m, &ids, Mode::Eval).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn eval_ignores_dropout_rate() {
        let mut m = small_model(3, 0.5);
        let ids = [1, 1, 4, 5, 6, 7];
        let a = rnn_forward(&m, &ids, Mode::Eval).unwrap();
        m.dropout_rate = 0.0;
        let b = rnn_forward(&m, &ids, Mode::Eval).unwrap();
        m.dropout_rate = 0.9;
        let c = rnn_forward(&m, &ids, Mode::Eval).unwrap();
        assert_eq!((a, a), (b, c));
    }

    #[test]
    fn bad_ids_rejected() {
        let m = small_model(4, 0.0);
        assert!(rnn_forward(&m, &[0, 1, 2, 3, 4, 12], Mode::Eval).is_err());
        assert!(rnn_forward(&m, &[0, 1, 2], Mode::Eval).is_err());
    }

    #[test]
    fn batched_matches_single() {
        let m = small_model(5, 0.2);
        let seqs: Vec<Vec<usize>> = vec![vec![1, 1, 2, 3, 4, 5], vec![6, 7, 8, 9, 10, 11], vec![0, 0, 0, 2, 2, 2]];
        let refs: Vec<&[usize]> = seqs.iter().map(Vec::as_slice).collect();
        let batch = m.predict_proba(&refs).unwrap();
        for (s, p) in seqs.iter().zip(batch) {
            assert!((rnn_forward(&m, s, Mode::Eval).unwrap() - p).abs() < 1e-15);
        }
    }
}
