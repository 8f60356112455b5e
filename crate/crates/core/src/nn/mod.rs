//! A small CNN engine: tensors, convolution, spatial batch normalization,
//! ReLU, dropout, MSE, momentum SGD and a finite-difference gradient checker.

mod activation;
mod batchnorm;
pub mod checkpoint;
mod conv;
mod gradcheck;
mod loss;
mod network;
mod optim;
mod real;
mod tensor;

pub use activation::{relu, Dropout, Relu};
pub use batchnorm::{BatchNorm2d, BN_EPS, BN_MOMENTUM};
pub use checkpoint::{load_checkpoint, load_checkpoint_file, save_checkpoint, save_checkpoint_file, CheckpointMeta};
pub use conv::Conv2d;
pub use gradcheck::{grad_check, grad_check_with, relative_error, GradCheckConfig, GradCheckReport, LayerCheck};
pub use loss::{mse_loss, mse_loss_over};
pub use network::{ActivationStats, Gradients, LayerKind, LayerSpec, Network, NetworkSpec, Phase};
pub use optim::sgd_step;
pub use real::Real;
pub use tensor::Tensor4;
