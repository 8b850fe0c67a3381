//! Fully connected classifiers, Adam and the training loop.

mod activation;
mod adam;
mod network;
mod train;

pub use activation::{Activation, SELU_ALPHA, SELU_LAMBDA};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use network::{argmax, build, softmax_rows, ForwardPass, Gradients, Network, NetworkConfig};
pub use train::{accuracy, dead_unit_fraction, train, EpochRow, TrainConfig, TrainReport};
