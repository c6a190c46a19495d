//! A small dense-tensor network engine: layers with analytic backward passes,
//! the four classifier architectures, cross-entropy losses and Adam.

pub mod adam;
pub mod layers;
pub mod loss;
pub mod lstm;
pub mod model;
pub mod tensor;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::LossKind;
pub use model::{
    build_bilstm, build_lstm, build_model, build_parallel_cnn, build_single_cnn, LayerSpec, ModelKind,
    ModelSpec, Network, OutputHead,
};
pub use tensor::Tensor;
pub use train::{predict, predict_class, predict_classes, train, train_network, EpochStats, Sample, TrainConfig};
