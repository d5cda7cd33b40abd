//! Training, rasterization, evaluation and ablations.

mod ablation;
mod checkpoint;
mod evaluate;
mod metrics;
mod raster;
mod train;

pub use ablation::{run_ablation, standard_variants, AblationRow, AblationTable, Variant, VariantGroup};
pub use checkpoint::{digest_bytes, Checkpoint, CHECKPOINT_VERSION};
pub use evaluate::{degrade, droppable_subset, evaluate, predict_plans, score_predictions, EvalOptions};
pub use metrics::{
    eval_box_metrics, eval_constraint_metrics, eval_pixel_metrics, overlap_stat, BoxAccumulator, ConstraintCounts, MetricsReport,
    PixelAccumulator, PixelMetrics,
};
pub use raster::{class_colour, rasterize_layout, LayoutRaster, EXTERNAL};
pub use train::{train, EpochLog, TrainConfig, TrainOutcome};

use crate::data::DataError;
use crate::neural::NeuralError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("no training plans")]
    EmptyDataset,
    #[error("non-finite loss or gradient at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[cfg(test)]
mod tests;
