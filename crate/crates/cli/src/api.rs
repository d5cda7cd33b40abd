//! Request and response types shared by the HTTP service and `infer`.

use std::fmt;

use floorplan_core::data::{knn_boundaries, parse_json, DataError, FloorplanSpec, RoomType};
use floorplan_core::factorgraph::build_factor_graph;
use floorplan_core::fgnn::{predict_boxes, predict_coords};
use floorplan_core::geometry::{BBox, RectPolygon};
use floorplan_core::pipeline::{rasterize_layout, score_predictions, Checkpoint, LayoutRaster, MetricsReport, PipelineError};
use serde::{Deserialize, Serialize};

/// Largest canvas side a request may ask to rasterize.
pub const MAX_CANVAS_SIDE: u32 = 2048;
pub const MAX_ROOMS: usize = 64;
pub const MAX_NEIGHBOURS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferRequest {
    pub plan: FloorplanSpec,
    /// Include the run-length encoded raster in the response.
    #[serde(default)]
    pub raster: bool,
    /// Score the prediction against ground-truth boxes carried by `plan`.
    #[serde(default)]
    pub metrics: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomBox {
    pub id: u32,
    #[serde(rename = "type")]
    pub room_type: RoomType,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RasterRle {
    pub width: u32,
    pub height: u32,
    /// `[class, count]` runs in row-major order.
    pub runs: Vec<(u8, u32)>,
}

impl From<&LayoutRaster> for RasterRle {
    fn from(r: &LayoutRaster) -> Self {
        RasterRle { width: r.width, height: r.height, runs: r.run_lengths() }
    }
}

impl RasterRle {
    pub fn decode(&self) -> Option<LayoutRaster> {
        LayoutRaster::from_run_lengths(self.width, self.height, &self.runs)
    }
}

/// Inference output. Timing travels in the `x-inference-ms` header so that
/// the body depends only on the checkpoint and the request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferResponse {
    /// Checkpoint digest.
    pub model: String,
    pub rooms: Vec<RoomBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raster: Option<RasterRle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrieveRequest {
    pub boundary: RectPolygon,
    #[serde(default = "default_k")]
    pub k: usize,
}

fn default_k() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedPlan {
    pub index: usize,
    pub distance: f64,
    pub spec: FloorplanSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrieveResponse {
    pub neighbours: Vec<RetrievedPlan>,
}

/// Error reported to clients: an HTTP status, a stable code and, for input
/// errors, the JSON path of the offending element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(p) => write!(f, "{} at `{p}`: {}", self.code, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

impl std::error::Error for ApiError {}

impl ApiError {
    pub fn new(status: u16, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), path: None }
    }

    pub fn at(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    pub fn not_loaded() -> Self {
        ApiError::new(503, "model_not_loaded", "no checkpoint is loaded")
    }

    /// `{"error": {...}}` as sent over the wire.
    pub fn body(&self) -> Vec<u8> {
        serde_json::to_vec(&serde_json::json!({ "error": self })).expect("errors serialize")
    }

    /// Maps a data error, prefixing its JSON path with `field`.
    pub fn from_data(err: DataError, field: &str) -> Self {
        let join = |p: &str| match (field.is_empty(), p.is_empty() || p == ".") {
            (true, _) => p.to_string(),
            (false, true) => field.to_string(),
            (false, false) => format!("{field}.{p}"),
        };
        match &err {
            DataError::Parse { path, message } => ApiError::new(400, "malformed_request", message.clone()).at(join(path)),
            DataError::Invalid { path, message } => ApiError::new(422, "invalid_value", message.clone()).at(join(path)),
            DataError::Semantic { path, message } => ApiError::new(422, "semantic_violation", message.clone()).at(join(path)),
            other => ApiError::new(422, "invalid_request", other.to_string()),
        }
    }

    fn internal(err: impl fmt::Display) -> Self {
        ApiError::new(500, "internal_error", err.to_string())
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Data(d) => ApiError::from_data(d, "plan"),
            other => ApiError::internal(other),
        }
    }
}

/// A checkpoint ready to serve, with its digest computed once.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub checkpoint: Checkpoint,
    pub digest: String,
}

impl LoadedModel {
    pub fn new(checkpoint: Checkpoint) -> Self {
        let digest = checkpoint.digest();
        LoadedModel { checkpoint, digest }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PipelineError> {
        Ok(LoadedModel::new(Checkpoint::from_bytes(bytes)?))
    }

    pub fn grid_k(&self) -> u32 {
        self.checkpoint.model.config.graph.grid_k
    }

    /// `/model` body.
    pub fn describe(&self) -> serde_json::Value {
        let c = &self.checkpoint;
        serde_json::json!({
            "digest": self.digest,
            "epoch": c.epoch,
            "config": c.model.config,
            "train": c.train,
        })
    }
}

pub fn parse_infer_request(body: &[u8], grid_k: u32) -> Result<InferRequest, ApiError> {
    let req: InferRequest = parse_json(body).map_err(|e| ApiError::from_data(e, ""))?;
    let plan = &req.plan;
    plan.validate(grid_k).map_err(|e| ApiError::from_data(e, "plan"))?;
    if plan.canvas.w > MAX_CANVAS_SIDE || plan.canvas.h > MAX_CANVAS_SIDE {
        return Err(ApiError::new(422, "invalid_value", format!("canvas sides are limited to {MAX_CANVAS_SIDE}")).at("plan.canvas"));
    }
    if plan.rooms.len() > MAX_ROOMS {
        return Err(ApiError::new(422, "invalid_value", format!("at most {MAX_ROOMS} rooms per plan")).at("plan.rooms"));
    }
    if req.metrics {
        plan.validate_ground_truth(grid_k).map_err(|e| ApiError::from_data(e, "plan"))?;
        if let Some(i) = plan.rooms.iter().position(|r| r.bbox.is_none()) {
            return Err(ApiError::new(422, "missing_ground_truth", "metrics need a bbox for every room").at(format!("plan.rooms[{i}].bbox")));
        }
    }
    Ok(req)
}

/// Runs the model on one validated request. Ground-truth boxes in the plan
/// are never shown to the model.
pub fn infer(model: &LoadedModel, req: &InferRequest) -> Result<InferResponse, ApiError> {
    let params = &model.checkpoint.model;
    let given = req.plan.without_ground_truth();
    let graph = build_factor_graph(&given, &params.config.graph).map_err(|e| ApiError::from_data(e, "plan"))?;
    let coords = predict_coords(params, &[&graph]).map_err(ApiError::internal)?;
    let boxes = predict_boxes(&coords[0], given.canvas);
    let types = given.room_types();
    let raster = req.raster.then(|| RasterRle::from(&rasterize_layout(&boxes, &types, &given.boundary.rasterize(given.canvas))));
    let metrics = if req.metrics {
        Some(score_predictions(&[&req.plan], &[&given], std::slice::from_ref(&boxes), model.grid_k())?)
    } else {
        None
    };
    let rooms = given.rooms.iter().zip(&boxes).map(|(r, b)| RoomBox { id: r.id, room_type: r.room_type, bbox: *b }).collect();
    Ok(InferResponse { model: model.digest.clone(), rooms, raster, metrics })
}

pub fn retrieve(plans: &[FloorplanSpec], body: &[u8], grid_k: u32) -> Result<RetrieveResponse, ApiError> {
    let req: RetrieveRequest = parse_json(body).map_err(|e| ApiError::from_data(e, ""))?;
    if req.k == 0 || req.k > MAX_NEIGHBOURS {
        return Err(ApiError::new(422, "invalid_value", format!("k must lie in 1..={MAX_NEIGHBOURS}")).at("k"));
    }
    let refs: Vec<&FloorplanSpec> = plans.iter().collect();
    let found = knn_boundaries(&req.boundary, &refs, req.k, grid_k).map_err(|e| ApiError::from_data(e, ""))?;
    Ok(RetrieveResponse {
        neighbours: found.into_iter().map(|n| RetrievedPlan { index: n.index, distance: n.distance, spec: n.spec }).collect(),
    })
}
