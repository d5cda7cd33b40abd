//! Browser bindings for the static demo page in `www/`.
//!
//! The page offers three operations: generate a synthetic plan, inspect the
//! factor graph built from it, and run a checkpoint on it (optionally with some
//! rooms withheld). Every binding wraps a plain Rust function so the logic is
//! testable off the browser.

use floorplan_core::data::{drop_constraints, generate_floorplan, load_spec, save_spec, FloorplanSpec, GenConfig};
use floorplan_core::factorgraph::{build_factor_graph, FactorGraph, FactorKind};
use floorplan_core::fgnn::{predict_boxes, predict_coords, ModelConfig, ModelParams};
use floorplan_core::geometry::BBox;
use floorplan_core::pipeline::{class_colour, eval_box_metrics, rasterize_layout, Checkpoint};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub fn generate(seed: u64, min_rooms: usize, max_rooms: usize) -> Result<String, String> {
    let cfg = GenConfig { rooms: (min_rooms, max_rooms), ..GenConfig::default() };
    let spec = generate_floorplan(seed, &cfg).map_err(|e| e.to_string())?;
    Ok(String::from_utf8(save_spec(&spec)).expect("JSON is UTF-8"))
}

#[derive(Debug, Serialize, PartialEq, Eq)]
pub struct GraphSummary {
    pub rooms: usize,
    pub variables: usize,
    pub factors: usize,
    pub edges: usize,
    pub box_factors: usize,
    pub relation_factors: usize,
    pub boundary_factors: usize,
    pub complete_factors: usize,
}

fn parse(plan_json: &str) -> Result<FloorplanSpec, String> {
    let spec = load_spec(plan_json.as_bytes()).map_err(|e| e.to_string())?;
    spec.validate(floorplan_core::geometry::DEFAULT_GRID_K).map_err(|e| e.to_string())?;
    Ok(spec)
}

pub fn summarize(plan_json: &str) -> Result<GraphSummary, String> {
    let g: FactorGraph = build_factor_graph(&parse(plan_json)?, &Default::default()).map_err(|e| e.to_string())?;
    let count = |f: fn(&FactorKind) -> bool| g.factors.iter().filter(|x| f(&x.kind)).count();
    Ok(GraphSummary {
        rooms: g.room_count(),
        variables: g.variables.len(),
        factors: g.factors.len(),
        edges: g.edge_count(),
        box_factors: count(|k| matches!(k, FactorKind::Box { .. })),
        relation_factors: count(|k| matches!(k, FactorKind::Relation { .. })),
        boundary_factors: count(|k| matches!(k, FactorKind::Boundary { .. })),
        complete_factors: count(|k| matches!(k, FactorKind::Complete)),
    })
}

/// RGBA pixels of a layout rasterized inside the plan's boundary.
pub fn rgba(spec: &FloorplanSpec, boxes: &[BBox]) -> Vec<u8> {
    let raster = rasterize_layout(boxes, &spec.room_types(), &spec.boundary.rasterize(spec.canvas));
    raster.classes.iter().flat_map(|&c| {
        let [r, g, b] = class_colour(c);
        [r, g, b, 255]
    }).collect()
}

#[derive(Debug, Serialize)]
pub struct Prediction {
    pub boxes: Vec<BBox>,
    pub withheld: Vec<u32>,
    pub box_iou_micro: Option<f64>,
}

pub struct Model {
    params: ModelParams<f32>,
}

impl Model {
    pub fn from_checkpoint(bytes: &[u8]) -> Result<Self, String> {
        Ok(Model { params: Checkpoint::from_bytes(bytes).map_err(|e| e.to_string())?.model })
    }

    /// A small randomly initialized model, for trying the page without a checkpoint.
    pub fn untrained(seed: u64) -> Self {
        let cfg = ModelConfig { hidden: 32, ..ModelConfig::default() };
        Model { params: ModelParams::init(cfg, seed).expect("valid config") }
    }

    pub fn predict(&self, spec: &FloorplanSpec, drop: usize, seed: u64) -> Result<Prediction, String> {
        let (given, withheld) = if drop == 0 {
            (spec.without_ground_truth(), Vec::new())
        } else {
            let p = drop_constraints(spec, drop, seed).map_err(|e| e.to_string())?;
            (p.spec.without_ground_truth(), p.withheld.iter().map(|w| w.id).collect())
        };
        let g = build_factor_graph(&given, &self.params.config.graph).map_err(|e| e.to_string())?;
        let coords = predict_coords(&self.params, &[&g]).map_err(|e| e.to_string())?;
        let boxes = predict_boxes(&coords[0], spec.canvas);
        let box_iou_micro = match spec.gt_boxes() {
            Some(gt) => Some(eval_box_metrics(&boxes, &gt, &spec.room_types()).map_err(|e| e.to_string())?.0),
            None => None,
        };
        Ok(Prediction { boxes, withheld, box_iou_micro })
    }
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

/// Synthetic plan as floorplan JSON.
#[wasm_bindgen(js_name = generatePlan)]
pub fn generate_plan(seed: u32, min_rooms: usize, max_rooms: usize) -> Result<String, JsError> {
    generate(seed as u64, min_rooms, max_rooms).map_err(js)
}

/// Node and edge counts of the plan's factor graph, as JSON.
#[wasm_bindgen(js_name = graphSummary)]
pub fn graph_summary(plan_json: &str) -> Result<String, JsError> {
    let s = summarize(plan_json).map_err(js)?;
    Ok(serde_json::to_string(&s).expect("summaries serialize"))
}

/// RGBA pixels of the plan's ground-truth layout.
#[wasm_bindgen(js_name = renderGroundTruth)]
pub fn render_ground_truth(plan_json: &str) -> Result<Vec<u8>, JsError> {
    let spec = parse(plan_json).map_err(js)?;
    let gt = spec.gt_boxes().ok_or_else(|| JsError::new("plan has no ground-truth boxes"))?;
    Ok(rgba(&spec, &gt))
}

#[wasm_bindgen(js_name = Model)]
pub struct JsModel {
    inner: Model,
    last: Vec<u8>,
}

#[wasm_bindgen(js_class = Model)]
impl JsModel {
    #[wasm_bindgen(js_name = fromCheckpoint)]
    pub fn from_checkpoint(bytes: &[u8]) -> Result<JsModel, JsError> {
        Ok(JsModel { inner: Model::from_checkpoint(bytes).map_err(js)?, last: Vec::new() })
    }

    pub fn untrained(seed: u32) -> JsModel {
        JsModel { inner: Model::untrained(seed as u64), last: Vec::new() }
    }

    /// Runs the model with `drop` rooms withheld; returns the prediction as
    /// JSON and keeps its RGBA rendering for `pixels`.
    pub fn infer(&mut self, plan_json: &str, drop: usize, seed: u32) -> Result<String, JsError> {
        let spec = parse(plan_json).map_err(js)?;
        let p = self.inner.predict(&spec, drop, seed as u64).map_err(js)?;
        self.last = rgba(&spec, &p.boxes);
        Ok(serde_json::to_string(&p).expect("predictions serialize"))
    }

    pub fn pixels(&self) -> Vec<u8> {
        self.last.clone()
    }
}
