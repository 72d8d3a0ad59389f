//! Differentiable components of the Q-network, written out by hand:
//! LSTM cell, metafeature-conditioned hidden-state initialization, dense
//! layers, backpropagation through time and an Adam optimizer.

mod adam;
mod checkpoint;
mod lstm;
mod network;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_VERSION};
pub use lstm::{lstm_cell_forward, LstmParams};
pub use network::{NetworkShape, QNetworkParams, ARRAY_NAMES};
