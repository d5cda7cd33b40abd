//! Floorplan records, the synthetic generator, partial-constraint
//! degradation, JSON persistence and boundary retrieval.

mod edges;
mod generate;
mod io;
mod partial;
mod retrieval;
mod spec;

pub use edges::{derive_edges, AdjacencyTolerance};
pub use generate::{generate_dataset, generate_floorplan, GenConfig};
pub use io::{load_dataset, load_spec, parse_json, save_dataset, save_spec, Dataset, Split};
pub use partial::{drop_constraints, PartialSpec, WithheldRoom};
pub use retrieval::{boundary_descriptor, knn_boundaries, retarget, Neighbour, DESCRIPTOR_LEN};
pub use spec::{EdgeSpec, FloorplanSpec, RoomSpec, RoomType, FORMAT_VERSION};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    /// Input is not well-formed JSON for the schema.
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    /// Well-formed but violates a value constraint.
    #[error("invalid value at `{path}`: {message}")]
    Invalid { path: String, message: String },
    /// References that do not resolve (dangling edges, self loops).
    #[error("semantic error at `{path}`: {message}")]
    Semantic { path: String, message: String },
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("cannot drop {requested} rooms, only {available} are droppable")]
    TooManyDrops { requested: usize, available: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("io error: {0}")]
    Io(String),
}

impl DataError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        DataError::Invalid { path: path.into(), message: message.into() }
    }

    pub(crate) fn dangling(edge: usize, end: &str, id: u32) -> Self {
        DataError::Semantic { path: format!("edges[{edge}].{end}"), message: format!("no room with id {id}") }
    }

    /// JSON path of the offending element, when there is one.
    pub fn path(&self) -> Option<&str> {
        match self {
            DataError::Parse { path, .. } | DataError::Invalid { path, .. } | DataError::Semantic { path, .. } => Some(path),
            _ => None,
        }
    }
}
