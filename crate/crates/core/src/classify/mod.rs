//! Convolutional text classifiers.
//!
//! One model type, [`ConvTextModel`], serves both the multilabel topic
//! tagger and the single-output scorer; they differ only in their
//! [`ModelSpec`] and label count.

mod gradcheck;
mod metrics;
mod model;
mod serial;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gradcheck::{gradient_check, gradient_check_against, gradient_check_sampled, GRADCHECK_STEP};
pub use metrics::{bce_loss, evaluate, gbv_probability, predict_tags, EvalMetrics, BCE_EPSILON};
pub use model::{ConvLayer, ConvTextModel, Gradients, ModelSpec};
pub use serial::MODEL_FORMAT;
pub use train::{train, train_until, Example};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("input has {got} tokens, model expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("token id {id} outside embedding table of {rows} rows")]
    TokenOutOfRange { id: u32, rows: usize },
    #[error("length mismatch: {0} probabilities vs {1} targets")]
    LengthMismatch(usize, usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("model has {0} outputs, a binary scorer needs exactly 1")]
    NotBinaryModel(usize),
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ClassifyError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 20,
            batch_size: 16,
            seed: 42,
            optimizer: Optimizer::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(ClassifyError::InvalidConfig(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(ClassifyError::InvalidConfig("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-document sigmoid outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_id: String,
    pub probabilities: Vec<f64>,
}
