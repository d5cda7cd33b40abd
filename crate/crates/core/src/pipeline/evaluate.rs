use super::metrics::{BoxAccumulator, ConstraintCounts, PixelAccumulator};
use super::{eval_constraint_metrics, overlap_stat, rasterize_layout, MetricsReport, PipelineError};
use crate::data::{drop_constraints, FloorplanSpec, RoomType};
use crate::factorgraph::build_factor_graph;
use crate::fgnn::{predict_boxes, predict_coords, ModelParams};
use crate::geometry::BBox;
use crate::neural::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    /// Rooms whose attributes are withheld from every plan.
    pub drop: usize,
    pub seed: u64,
    /// Plans evaluated per forward pass.
    pub chunk: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { drop: 0, seed: 0, chunk: 64 }
    }
}

/// Model predictions for each plan, in order.
pub fn predict_plans<T: Scalar>(model: &ModelParams<T>, plans: &[&FloorplanSpec], chunk: usize) -> Result<Vec<Vec<BBox>>, PipelineError> {
    let mut out = Vec::with_capacity(plans.len());
    for group in plans.chunks(chunk.max(1)) {
        let graphs = group.iter().map(|p| build_factor_graph(p, &model.config.graph)).collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<_> = graphs.iter().collect();
        for (coords, p) in predict_coords(model, &refs)?.into_iter().zip(group) {
            out.push(predict_boxes(&coords, p.canvas));
        }
    }
    Ok(out)
}

/// Scores `pred` against the plans' ground truth.
///
/// `given` holds the constraints the model actually saw; when rooms were
/// withheld it differs from `full`, and constraint accuracy is reported for both.
pub fn score_predictions(full: &[&FloorplanSpec], given: &[&FloorplanSpec], pred: &[Vec<BBox>], grid_k: u32) -> Result<MetricsReport, PipelineError> {
    let mut boxes = BoxAccumulator::default();
    let mut pixels = PixelAccumulator::default();
    let (mut seen, mut all) = (ConstraintCounts::default(), ConstraintCounts::default());
    let (mut overlap, mut gt_overlap, mut overlap_n) = (0.0, 0.0, 0usize);
    for ((spec, g), p) in full.iter().zip(given).zip(pred) {
        let gt = spec.gt_boxes().ok_or_else(|| PipelineError::Config("evaluation plans need ground-truth boxes".into()))?;
        let types = spec.room_types();
        boxes.add(p, &gt, &types)?;
        let mask = spec.boundary.rasterize(spec.canvas);
        pixels.add(&rasterize_layout(p, &types, &mask), &rasterize_layout(&gt, &types, &mask), &mask)?;
        seen.merge(eval_constraint_metrics(p, g, grid_k)?);
        all.merge(eval_constraint_metrics(p, spec, grid_k)?);
        if p.len() >= 2 {
            overlap += overlap_stat(p, spec.canvas)?;
            gt_overlap += overlap_stat(&gt, spec.canvas)?;
            overlap_n += 1;
        }
    }
    let named = |v: Vec<Option<f64>>| -> Vec<(String, f64)> {
        v.into_iter().enumerate().filter_map(|(c, x)| x.map(|x| (RoomType::ALL[c].name().to_string(), x))).collect()
    };
    let mean = |s: f64| if overlap_n == 0 { 0.0 } else { s / overlap_n as f64 };
    Ok(MetricsReport {
        plans: full.len(),
        box_iou_macro: boxes.macro_(),
        box_iou_micro: boxes.micro(),
        pixel_accuracy: pixels.accuracy(),
        pixel_iou_macro: pixels.iou_macro(),
        pixel_iou_micro: pixels.iou_micro(),
        pixel_iou_per_class: named(pixels.per_class()),
        box_iou_per_class: named(boxes.per_class()),
        relation_acc: seen.relation_acc(),
        location_acc: seen.location_acc(),
        relation_acc_full: all.relation_acc(),
        location_acc_full: all.location_acc(),
        mean_overlap_px: mean(overlap),
        gt_mean_overlap_px: mean(gt_overlap),
    })
}

/// Runs the model on every plan and scores it.
///
/// With `opts.drop > 0`, plans with fewer droppable rooms are skipped and the
/// rest lose that many rooms' attributes before inference.
pub fn evaluate<T: Scalar>(model: &ModelParams<T>, plans: &[&FloorplanSpec], opts: &EvalOptions) -> Result<MetricsReport, PipelineError> {
    let (full, given) = degrade(plans, opts.drop, opts.seed)?;
    let given_refs: Vec<&FloorplanSpec> = given.iter().collect();
    let pred = predict_plans(model, &given_refs, opts.chunk)?;
    score_predictions(&full, &given_refs, &pred, model.config.graph.grid_k)
}

/// Plans that can lose `drop` rooms, alongside their degraded copies.
pub fn degrade<'a>(plans: &[&'a FloorplanSpec], drop: usize, seed: u64) -> Result<(Vec<&'a FloorplanSpec>, Vec<FloorplanSpec>), PipelineError> {
    let mut full = Vec::new();
    let mut given = Vec::new();
    for (i, p) in plans.iter().enumerate() {
        if drop == 0 {
            full.push(*p);
            given.push((*p).clone());
            continue;
        }
        if p.rooms.iter().filter(|r| !r.room_type.is_protected()).count() < drop {
            continue;
        }
        full.push(*p);
        given.push(drop_constraints(p, drop, seed.wrapping_add(i as u64))?.spec);
    }
    Ok((full, given))
}

/// Plans able to lose `drop` rooms.
pub fn droppable_subset<'a>(plans: &[&'a FloorplanSpec], drop: usize) -> Vec<&'a FloorplanSpec> {
    plans.iter().copied().filter(|p| p.rooms.iter().filter(|r| !r.room_type.is_protected()).count() >= drop).collect()
}
