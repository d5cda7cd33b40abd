//! Command-line entry points and the HTTP inference service.

pub mod api;
pub mod commands;
pub mod service;

pub use api::{ApiError, InferRequest, InferResponse, LoadedModel, RasterRle, RetrieveRequest, RetrieveResponse, RoomBox};
pub use commands::{run, Cli, CliError};
pub use service::{router, ServiceState};

/// Environment variable naming the default checkpoint file.
pub const CHECKPOINT_ENV: &str = "FLOORPLAN_CHECKPOINT";
