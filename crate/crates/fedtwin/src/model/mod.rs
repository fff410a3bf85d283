//! The local forecasting model: a 3-layer GRU encoder over the 14-day
//! history, a GRU + three-fully-connected-layer decoder unrolled over the
//! 7-day horizon, hand-derived backpropagation, and MSE training.

mod gru;
mod seq2seq;
mod training;

pub use gru::{gru_cell_forward, GruCellCache, GruLayerParams};
pub use seq2seq::{DecodeCache, EncodeCache, ModelConfig, Seq2seqModel};
pub use training::mse_loss;

use crate::numerics::Tensor;

/// One training instance: `history_len` days of `[value, plan...]` rows,
/// the plan vectors for the following `horizon` days, and the smoothed,
/// normalized infection values those days actually saw.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// `history_len x (1 + plan_dim)`; column 0 holds the normalized value.
    pub history: Tensor,
    /// `horizon x plan_dim`, entries in `{0, 1}`.
    pub future_plans: Tensor,
    /// `horizon` normalized values.
    pub targets: Vec<f64>,
}
