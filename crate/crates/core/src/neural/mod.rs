//! Dense tensors, a reverse-mode tape, and the optimizer used to train the model.

mod adam;
mod gradcheck;
mod layers;
mod params;
mod tape;
mod tensor;

pub use adam::{step_lr, AdamConfig, AdamState};
pub use gradcheck::{finite_diff_check, random_probes, relative_error, GradCheckReport, Probe};
pub use layers::{aggregate_alt, aggregate_keyed, mlp_apply, softmax_aggregate, AggregatorParams};
pub use params::{Gradients, Linear, MlpParams, ParamId, ParamSet};
#[doc(hidden)]
pub use tape::Fault;
pub use tape::{AggregatorMode, Segments, Tape, Var};
pub use tensor::{Precision, Scalar, Tensor};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("cannot aggregate an empty row list")]
    EmptyRows,
    #[error("tape already differentiated")]
    TapeConsumed,
    #[error("non-finite value produced by {0}")]
    NonFinite(String),
}
