//! The sequence classifier: frozen pretrained embeddings, a single LSTM,
//! dropout, a ReLU dense layer and a sigmoid output, trained with Adam on
//! binary cross-entropy. Gradients come from hand-written backpropagation
//! through time and are verified against finite differences.

mod adam;
mod embedding;
mod lstm;
mod train;

pub use adam::{adam_update, AdamConfig, AdamState, ParamBlock};
pub use embedding::{load_embeddings, parse_embeddings, write_embeddings, EmbeddingMatrix};
pub use lstm::{bce_loss, rnn_forward, Mode, RnnGrads, RnnModel, BLOCK_NAMES, P_CLAMP};
pub use train::{gradient_check, rnn_accuracy, train_rnn, EpochStats, RnnConfig, SeqExample, TrainHistory};
