//! Multi-layer graph convolutional network trained full-batch on a text
//! graph: forward propagation, masked cross-entropy, hand-derived gradients,
//! Adam and early stopping.
//!
//! Layer `l` computes `S = Â · (dropout(H) · W)`. Hidden layers apply ReLU,
//! the last layer a row-wise softmax. Because `Â` is symmetric, the backward
//! pass propagates with `Â` in place of `Âᵀ`.

mod adam;
mod model;
mod propagate;
mod train;

pub use adam::AdamState;
pub use model::{init_model, read_checkpoint, write_checkpoint, GcnModel};
pub use propagate::{
    argmax_rows, backward, forward, masked_cross_entropy, masked_cross_entropy_from_logits,
    predict, softmax_rows, ForwardCache, Mode,
};
pub use train::{carve_validation, train, train_on, EarlyStopping, TrainConfig, TrainHistory};

use thiserror::Error;

use crate::features::FeatureError;
use crate::sparse::SparseError;
use crate::textgraph::GraphError;

#[derive(Debug, Error)]
pub enum GcnError {
    #[error("a model needs at least an input and an output dimension, got {0:?}")]
    InvalidDims(Vec<usize>),
    #[error("number of layers must be in 1..=5, got {0}")]
    InvalidLayers(usize),
    #[error("input dimension mismatch: model expects {expected}, features have {got}")]
    InputDim { expected: usize, got: usize },
    #[error("loss needs at least one labelled document")]
    EmptyMask,
    #[error("no training documents left after the validation carve-out")]
    EmptyTrainingSet,
    #[error("label index {index} out of range for {n_labels} classes")]
    LabelOutOfRange { index: usize, n_labels: usize },
    #[error("forward cache was built for model version {cached}, model is at version {current}")]
    StaleCache { cached: u64, current: u64 },
    #[error("gradient/weight shape mismatch at layer {0}")]
    GradientShape(usize),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
