use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{LayoutRaster, PipelineError};
use crate::data::{FloorplanSpec, RoomType};
use crate::geometry::{relation_satisfied, BBox, BoundaryMask, Canvas, GridLocation};

const CLASSES: usize = RoomType::COUNT;

/// Per-class IOU sums for box metrics, accumulated over plans.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoxAccumulator {
    sum: [f64; CLASSES],
    count: [usize; CLASSES],
}

impl BoxAccumulator {
    pub fn add(&mut self, pred: &[BBox], gt: &[BBox], types: &[RoomType]) -> Result<(), PipelineError> {
        if pred.len() != gt.len() || gt.len() != types.len() {
            return Err(PipelineError::Mismatch(format!("{} predicted boxes, {} ground-truth, {} types", pred.len(), gt.len(), types.len())));
        }
        for ((p, g), t) in pred.iter().zip(gt).zip(types) {
            self.sum[t.index()] += p.iou(g);
            self.count[t.index()] += 1;
        }
        Ok(())
    }

    /// Mean IOU over all room instances.
    pub fn micro(&self) -> f64 {
        let n: usize = self.count.iter().sum();
        if n == 0 {
            0.0
        } else {
            self.sum.iter().sum::<f64>() / n as f64
        }
    }

    /// Mean over present classes of the class-mean IOU.
    pub fn macro_(&self) -> f64 {
        let means: Vec<f64> = self.per_class().into_iter().flatten().collect();
        if means.is_empty() {
            0.0
        } else {
            means.iter().sum::<f64>() / means.len() as f64
        }
    }

    pub fn per_class(&self) -> Vec<Option<f64>> {
        (0..CLASSES).map(|c| (self.count[c] > 0).then(|| self.sum[c] / self.count[c] as f64)).collect()
    }
}

/// `(micro, macro)` box IOU of one plan.
pub fn eval_box_metrics(pred: &[BBox], gt: &[BBox], types: &[RoomType]) -> Result<(f64, f64), PipelineError> {
    let mut acc = BoxAccumulator::default();
    acc.add(pred, gt, types)?;
    Ok((acc.micro(), acc.macro_()))
}

/// Pixel confusion counts over in-boundary pixels, pooled across plans.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelAccumulator {
    /// `confusion[gt][pred]`
    confusion: Vec<[u64; CLASSES]>,
}

impl Default for PixelAccumulator {
    fn default() -> Self {
        PixelAccumulator { confusion: vec![[0; CLASSES]; CLASSES] }
    }
}

impl PixelAccumulator {
    pub fn add(&mut self, pred: &LayoutRaster, gt: &LayoutRaster, mask: &BoundaryMask) -> Result<(), PipelineError> {
        if pred.canvas() != gt.canvas() || gt.canvas() != mask.canvas() {
            return Err(PipelineError::Mismatch("raster dimensions differ".into()));
        }
        for ((p, g), inside) in pred.classes.iter().zip(&gt.classes).zip(mask.bits()) {
            if *inside {
                let (g, p) = ((*g as usize).min(CLASSES - 1), (*p as usize).min(CLASSES - 1));
                self.confusion[g][p] += 1;
            }
        }
        Ok(())
    }

    fn tp_fp_fn(&self, c: usize) -> (u64, u64, u64) {
        let tp = self.confusion[c][c];
        let fp = (0..CLASSES).map(|g| self.confusion[g][c]).sum::<u64>() - tp;
        let fn_ = self.confusion[c].iter().sum::<u64>() - tp;
        (tp, fp, fn_)
    }

    pub fn accuracy(&self) -> f64 {
        let total: u64 = self.confusion.iter().flatten().sum();
        let right: u64 = (0..CLASSES).map(|c| self.confusion[c][c]).sum();
        if total == 0 {
            0.0
        } else {
            right as f64 / total as f64
        }
    }

    /// IOU per class present in ground truth or prediction.
    pub fn per_class(&self) -> Vec<Option<f64>> {
        (0..CLASSES)
            .map(|c| {
                let (tp, fp, fn_) = self.tp_fp_fn(c);
                (tp + fp + fn_ > 0).then(|| tp as f64 / (tp + fp + fn_) as f64)
            })
            .collect()
    }

    pub fn iou_macro(&self) -> f64 {
        let v: Vec<f64> = self.per_class().into_iter().flatten().collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }

    /// Pooled `TP / (TP + FP + FN)` over all classes.
    pub fn iou_micro(&self) -> f64 {
        let (mut tp, mut rest) = (0, 0);
        for c in 0..CLASSES {
            let (t, f, n) = self.tp_fp_fn(c);
            tp += t;
            rest += f + n;
        }
        if tp + rest == 0 {
            0.0
        } else {
            tp as f64 / (tp + rest) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PixelMetrics {
    pub accuracy: f64,
    pub iou_macro: f64,
    pub iou_micro: f64,
}

pub fn eval_pixel_metrics(pred: &LayoutRaster, gt: &LayoutRaster, mask: &BoundaryMask) -> Result<PixelMetrics, PipelineError> {
    let mut acc = PixelAccumulator::default();
    acc.add(pred, gt, mask)?;
    Ok(PixelMetrics { accuracy: acc.accuracy(), iou_macro: acc.iou_macro(), iou_micro: acc.iou_micro() })
}

/// Satisfied and total counts for relation and location constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConstraintCounts {
    pub relations_ok: usize,
    pub relations: usize,
    pub locations_ok: usize,
    pub locations: usize,
}

impl ConstraintCounts {
    pub fn relation_acc(&self) -> f64 {
        ratio(self.relations_ok, self.relations)
    }

    pub fn location_acc(&self) -> f64 {
        ratio(self.locations_ok, self.locations)
    }

    pub fn merge(&mut self, o: ConstraintCounts) {
        self.relations_ok += o.relations_ok;
        self.relations += o.relations;
        self.locations_ok += o.locations_ok;
        self.locations += o.locations;
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

/// Counts the spec's edges whose relation holds between the predicted boxes,
/// and its known rooms whose predicted centre lands in the specified cell.
pub fn eval_constraint_metrics(pred: &[BBox], spec: &FloorplanSpec, grid_k: u32) -> Result<ConstraintCounts, PipelineError> {
    if pred.len() != spec.rooms.len() {
        return Err(PipelineError::Mismatch(format!("{} boxes for {} rooms", pred.len(), spec.rooms.len())));
    }
    let edges = spec.indexed_edges()?;
    let mut out = ConstraintCounts { relations: edges.len(), ..Default::default() };
    out.relations_ok = edges.iter().filter(|(s, o, rel)| relation_satisfied(&pred[*s], &pred[*o], *rel)).count();
    for (room, b) in spec.rooms.iter().zip(pred) {
        if let (true, Some(loc)) = (room.known, room.location) {
            out.locations += 1;
            if GridLocation::of_point(b.centroid(), grid_k) == loc {
                out.locations_ok += 1;
            }
        }
    }
    Ok(out)
}

/// Mean intersection area over all unordered box pairs, in pixels.
pub fn overlap_stat(boxes: &[BBox], canvas: Canvas) -> Result<f64, PipelineError> {
    if boxes.len() < 2 {
        return Err(PipelineError::Mismatch("overlap needs at least two boxes".into()));
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            sum += boxes[i].intersect_area_px(&boxes[j], canvas);
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub plans: usize,
    pub box_iou_macro: f64,
    pub box_iou_micro: f64,
    pub pixel_accuracy: f64,
    pub pixel_iou_macro: f64,
    pub pixel_iou_micro: f64,
    /// Pixel IOU by class name, for classes that occur.
    pub pixel_iou_per_class: Vec<(String, f64)>,
    pub box_iou_per_class: Vec<(String, f64)>,
    /// Over the constraints given to the model.
    pub relation_acc: f64,
    pub location_acc: f64,
    /// Over the complete original constraint set; equal to the above without dropped rooms.
    pub relation_acc_full: f64,
    pub location_acc_full: f64,
    pub mean_overlap_px: f64,
    pub gt_mean_overlap_px: f64,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn headline(&self) -> [(&'static str, f64); 9] {
        [
            ("box_iou_macro", self.box_iou_macro),
            ("box_iou_micro", self.box_iou_micro),
            ("pixel_accuracy", self.pixel_accuracy),
            ("pixel_iou_macro", self.pixel_iou_macro),
            ("pixel_iou_micro", self.pixel_iou_micro),
            ("relation_acc", self.relation_acc),
            ("location_acc", self.location_acc),
            ("relation_acc_full", self.relation_acc_full),
            ("mean_overlap_px", self.mean_overlap_px),
        ]
    }

    /// Two aligned columns: metric name and value.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<20} {:>10}", "plans", self.plans);
        for (k, v) in self.headline() {
            let _ = writeln!(s, "{k:<20} {v:>10.4}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_dataset, GenConfig};
    use crate::geometry::{RectPolygon, RelationType};
    use crate::pipeline::rasterize_layout;

    fn b(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn box_metric_arithmetic() {
        let gt = [b(0.0, 0.0, 0.5, 0.5), b(0.5, 0.5, 1.0, 1.0)];
        let pred = [b(0.0, 0.0, 0.5, 0.25), gt[1]];
        let (micro, macro_) = eval_box_metrics(&pred, &gt, &[RoomType::Kitchen, RoomType::Bathroom]).unwrap();
        assert_eq!((micro, macro_), (0.75, 0.75));
        let (micro, macro_) = eval_box_metrics(&gt, &gt, &[RoomType::Kitchen, RoomType::Kitchen]).unwrap();
        assert_eq!((micro, macro_), (1.0, 1.0));
        assert!(eval_box_metrics(&gt, &gt[..1], &[RoomType::Kitchen]).is_err());
    }

    #[test]
    fn macro_weights_classes_equally() {
        let gt = [b(0.0, 0.0, 0.5, 0.5), b(0.0, 0.0, 0.5, 0.5), b(0.5, 0.5, 1.0, 1.0)];
        let pred = [gt[0], gt[1], b(0.5, 0.5, 1.0, 0.75)];
        let types = [RoomType::Kitchen, RoomType::Kitchen, RoomType::Bathroom];
        let (micro, macro_) = eval_box_metrics(&pred, &gt, &types).unwrap();
        assert!((micro - 2.5 / 3.0).abs() < 1e-15);
        assert_eq!(macro_, 0.75);
    }

    #[test]
    fn pixel_accuracy_on_constructed_pair() {
        let mask = BoundaryMask::from_bits(10, 10, vec![true; 100]).unwrap();
        let gt = LayoutRaster { width: 10, height: 10, classes: vec![RoomType::Kitchen as u8; 100] };
        let mut pred = gt.clone();
        for px in &mut pred.classes[..10] {
            *px = RoomType::Bathroom as u8;
        }
        let m = eval_pixel_metrics(&pred, &gt, &mask).unwrap();
        assert!((m.accuracy - 0.9).abs() < 1e-15);
        // One wrong pixel costs one false positive and one false negative.
        assert!((m.iou_micro - 0.9 / 1.1).abs() < 1e-15);
        let same = eval_pixel_metrics(&gt, &gt, &mask).unwrap();
        assert_eq!((same.accuracy, same.iou_macro, same.iou_micro), (1.0, 1.0, 1.0));
        let small = LayoutRaster { width: 5, height: 5, classes: vec![0; 25] };
        assert!(eval_pixel_metrics(&small, &gt, &mask).is_err());
    }

    #[test]
    fn constraint_counting() {
        let boxes = [b(0.0, 0.0, 0.2, 0.2), b(0.5, 0.0, 0.7, 0.2), b(0.0, 0.5, 0.2, 0.7)];
        let rooms = boxes.iter().enumerate().map(|(i, bx)| crate::data::RoomSpec::from_box(i as u32, RoomType::Kitchen, *bx, 5)).collect();
        let e = |s, o, rel| crate::data::EdgeSpec { s, o, rel };
        let edges = vec![
            e(0, 1, RelationType::LeftOf),
            e(0, 2, RelationType::Above),
            e(1, 2, RelationType::RightAbove),
            e(1, 0, RelationType::LeftOf),
        ];
        let boundary = RectPolygon::rectangle(&b(0.0, 0.0, 1.0, 1.0)).unwrap();
        let spec = FloorplanSpec::new(Canvas::default(), boundary, rooms, edges);
        let c = eval_constraint_metrics(&boxes, &spec, 5).unwrap();
        assert_eq!(c.relation_acc(), 0.75);
        assert_eq!(c.location_acc(), 1.0);
    }

    #[test]
    fn overlap_enumeration() {
        let c = Canvas::new(10, 10);
        let px = |x0: f64, y0: f64, x1: f64, y1: f64| BBox::from_pixels(c, x0, y0, x1, y1).unwrap();
        let boxes = [px(0.0, 0.0, 2.0, 2.0), px(1.0, 1.0, 3.0, 3.0), px(5.0, 5.0, 6.0, 6.0)];
        assert!((overlap_stat(&boxes, c).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(overlap_stat(&boxes[..1], c).is_err());
        let tiles = [px(0.0, 0.0, 5.0, 10.0), px(5.0, 0.0, 10.0, 10.0)];
        assert_eq!(overlap_stat(&tiles, c).unwrap(), 0.0);
    }

    #[test]
    fn ground_truth_scores_perfectly() {
        let plans = generate_dataset(8, 50, &GenConfig::default()).unwrap();
        let mut px = PixelAccumulator::default();
        let mut bx = BoxAccumulator::default();
        for p in &plans {
            let gt = p.gt_boxes().unwrap();
            let mask = p.boundary.rasterize(p.canvas);
            let r = rasterize_layout(&gt, &p.room_types(), &mask);
            px.add(&r, &r, &mask).unwrap();
            bx.add(&gt, &gt, &p.room_types()).unwrap();
            let c = eval_constraint_metrics(&gt, p, 5).unwrap();
            assert_eq!((c.relation_acc(), c.location_acc()), (1.0, 1.0));
            assert_eq!(overlap_stat(&gt, p.canvas).unwrap(), 0.0);
        }
        assert_eq!((px.accuracy(), px.iou_macro(), px.iou_micro()), (1.0, 1.0, 1.0));
        assert_eq!((bx.micro(), bx.macro_()), (1.0, 1.0));
    }

    #[test]
    fn perfect_extra_room_never_lowers_micro() {
        let gt = [b(0.0, 0.0, 0.5, 0.5), b(0.5, 0.5, 1.0, 1.0)];
        let pred = [b(0.0, 0.0, 0.4, 0.5), b(0.5, 0.6, 1.0, 1.0)];
        let types = [RoomType::Kitchen, RoomType::Bathroom];
        let (before, _) = eval_box_metrics(&pred, &gt, &types).unwrap();
        let gt3 = [gt[0], gt[1], b(0.1, 0.6, 0.3, 0.9)];
        let pred3 = [pred[0], pred[1], gt3[2]];
        let (after, _) = eval_box_metrics(&pred3, &gt3, &[types[0], types[1], RoomType::Storage]).unwrap();
        assert!(after >= before);
    }
}
