//! Network kernels, the segmentation layer stack, training and checkpoints.

pub mod activation;
pub mod adam;
pub mod checkpoint;
pub mod conv;
pub mod loss;
pub mod network;
pub mod opcount;
pub mod train;

pub use activation::{softmax_channels, softsign};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::{conv2d_backward, conv2d_forward, Activation, ConvParams, ConvSpec};
pub use loss::cross_entropy_loss;
pub use network::{build_network, LayerKind, Network, NetworkSpec, OutputGrad, Parameters, Tape};
pub use opcount::{format_ops, inner_ops_count};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use train::{evaluate, network_input, predict_labels, train, train_with, EpochLog, LrSchedule, TrainConfig};
