//! Reference CPU forward pass.
//!
//! Naive direct loops, one example per call, single-threaded. Correctness
//! is the only goal; every op is checked against brute-force oracles in the
//! test suite.

mod forward;
pub mod io;
mod ops;
mod tensor;
mod weights;

use thiserror::Error;

use crate::arch::{GraphError, LayerId, TensorShape};

pub use forward::{forward, forward_traced, ForwardTrace};
pub use ops::{add_in_place, avg_pool2d, conv2d, conv2d_with, dense, max_pool2d, relu_in_place, softmax};
pub use tensor::Tensor;
pub use weights::{init_weights, kernel_dims, WeightEntry, WeightStore};

/// Accumulator width for convolution and dense sums.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Precision {
    #[default]
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineOptions {
    pub accumulate: Precision,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: String,
        expected: String,
        found: String,
    },
    #[error("missing weights `{0}`")]
    MissingWeights(String),
    #[error("{0}: non-finite activation")]
    NonFinite(LayerId),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("bad file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EngineError {
    pub(crate) fn shape(context: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        EngineError::ShapeMismatch {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn shapes(context: impl Into<String>, expected: TensorShape, found: TensorShape) -> Self {
        Self::shape(context, expected, found)
    }
}
