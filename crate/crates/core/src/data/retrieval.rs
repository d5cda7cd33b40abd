use std::f64::consts::PI;

use super::{DataError, FloorplanSpec, RoomSpec};
use crate::geometry::{Canvas, GridLocation, Point, RectPolygon};

const RADIAL_BINS: usize = 16;

/// Descriptor length: corner count, area, aspect ratio, radial signature.
pub const DESCRIPTOR_LEN: usize = 3 + RADIAL_BINS;

/// Shape signature of a boundary used for nearest-neighbour retrieval.
///
/// `[corners / 16, area, width / height of the enclosing box (as min/max),
/// 16-bin angular histogram of mask pixels around the mask centroid]`.
pub fn boundary_descriptor(p: &RectPolygon, canvas: Canvas) -> Vec<f64> {
    let mask = p.rasterize(canvas);
    let bb = p.bounding_box();
    let (w, h) = (bb.width(), bb.height());
    let aspect = if w.max(h) > 0.0 { w.min(h) / w.max(h) } else { 0.0 };
    let mut out = vec![p.len() as f64 / 16.0, p.area(), aspect];

    let (mut sx, mut sy, mut count) = (0.0, 0.0, 0usize);
    let cw = canvas.w as usize;
    for (i, _) in mask.bits().iter().enumerate().filter(|(_, b)| **b) {
        sx += (i % cw) as f64 + 0.5;
        sy += (i / cw) as f64 + 0.5;
        count += 1;
    }
    let mut bins = [0.0f64; RADIAL_BINS];
    if count > 0 {
        let (cx, cy) = (sx / count as f64, sy / count as f64);
        for (i, _) in mask.bits().iter().enumerate().filter(|(_, b)| **b) {
            let dx = (i % cw) as f64 + 0.5 - cx;
            let dy = cy - ((i / cw) as f64 + 0.5);
            let angle = dy.atan2(dx).rem_euclid(2.0 * PI);
            let bin = ((angle / (2.0 * PI) * RADIAL_BINS as f64) as usize).min(RADIAL_BINS - 1);
            bins[bin] += 1.0;
        }
        for b in &mut bins {
            *b /= count as f64;
        }
    }
    out.extend_from_slice(&bins);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbour {
    /// Position of the plan in the searched list.
    pub index: usize,
    pub distance: f64,
    /// The neighbour's constraint graph placed in the query boundary.
    pub spec: FloorplanSpec,
}

/// The `k` plans whose boundaries are closest to `query`, nearest first.
/// Ties keep dataset order.
pub fn knn_boundaries(query: &RectPolygon, plans: &[&FloorplanSpec], k: usize, grid_k: u32) -> Result<Vec<Neighbour>, DataError> {
    if plans.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let canvas = plans[0].canvas;
    let q = boundary_descriptor(query, canvas);
    let mut scored: Vec<(f64, usize)> = plans
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d = boundary_descriptor(&p.boundary, p.canvas);
            let dist = q.iter().zip(&d).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            (dist, i)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(distance, index)| Neighbour { index, distance, spec: retarget(plans[index], query, grid_k) })
        .collect())
}

/// Moves a plan's rooms and constraints into another boundary.
///
/// Rooms keep their types and relations. Known rooms are mapped by the affine
/// transform between the two enclosing boxes, which updates location and
/// size; ground-truth boxes are dropped since they no longer hold.
pub fn retarget(spec: &FloorplanSpec, boundary: &RectPolygon, grid_k: u32) -> FloorplanSpec {
    let from = spec.boundary.bounding_box();
    let to = boundary.bounding_box();
    let sx = if from.width() > 0.0 { to.width() / from.width() } else { 1.0 };
    let sy = if from.height() > 0.0 { to.height() / from.height() } else { 1.0 };
    let map = |p: Point| Point::new(to.x_min + (p.x - from.x_min) * sx, to.y_min + (p.y - from.y_min) * sy);
    let rooms = spec
        .rooms
        .iter()
        .map(|r| {
            if !r.known {
                return RoomSpec::type_only(r.id, r.room_type);
            }
            let size = r.size.map(|s| (s * sx * sy).clamp(0.0, 1.0));
            let location = match r.bbox {
                Some(b) => {
                    let (lo, hi) = (map(Point::new(b.x_min, b.y_min)), map(Point::new(b.x_max, b.y_max)));
                    let c = Point::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y));
                    Some(GridLocation::of_point(c, grid_k))
                }
                None => r.location.map(|l| GridLocation::of_point(map(l.center(grid_k)), grid_k)),
            };
            RoomSpec { id: r.id, room_type: r.room_type, known: true, location, size, bbox: None }
        })
        .collect();
    let mut out = FloorplanSpec::new(spec.canvas, boundary.clone(), rooms, spec.edges.clone());
    out.source = spec.source.clone();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_dataset, GenConfig};
    use crate::geometry::BBox;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> RectPolygon {
        RectPolygon::rectangle(&BBox::new(x0, y0, x1, y1).unwrap()).unwrap()
    }

    #[test]
    fn identical_boundary_ranks_first_with_zero_distance() {
        let plans = generate_dataset(5, 20, &GenConfig::default()).unwrap();
        let refs: Vec<&FloorplanSpec> = plans.iter().collect();
        let hits = knn_boundaries(&plans[7].boundary, &refs, 3, 5).unwrap();
        assert_eq!(hits[0].distance, 0.0);
        assert_eq!(refs[hits[0].index].boundary, plans[7].boundary);
        assert_eq!(hits[0].spec.edges, plans[7].edges);
    }

    #[test]
    fn large_k_returns_everything_sorted() {
        let plans = generate_dataset(6, 8, &GenConfig::default()).unwrap();
        let refs: Vec<&FloorplanSpec> = plans.iter().collect();
        let hits = knn_boundaries(&plans[0].boundary, &refs, 50, 5).unwrap();
        assert_eq!(hits.len(), 8);
        assert!(hits.windows(2).all(|w| w[0].distance <= w[1].distance));
        assert!(knn_boundaries(&plans[0].boundary, &[], 3, 5).is_err());
    }

    #[test]
    fn rectangles_rank_above_l_shapes() {
        let l_shape = |x0: f64| {
            RectPolygon::from_coords(&[[x0, 0.1], [x0 + 0.4, 0.1], [x0 + 0.4, 0.5], [x0 + 0.8, 0.5], [x0 + 0.8, 0.9], [x0, 0.9]])
                .unwrap()
        };
        let mk = |b: RectPolygon| FloorplanSpec::new(Canvas::default(), b, vec![RoomSpec::type_only(0, crate::data::RoomType::Kitchen)], vec![]);
        let plans = [mk(l_shape(0.1)), mk(rect(0.12, 0.1, 0.88, 0.85)), mk(l_shape(0.05)), mk(rect(0.1, 0.15, 0.85, 0.9))];
        let refs: Vec<&FloorplanSpec> = plans.iter().collect();
        let hits = knn_boundaries(&rect(0.1, 0.1, 0.9, 0.9), &refs, 4, 5).unwrap();
        let order: Vec<usize> = hits.iter().map(|h| h.index).collect();
        assert!(order[..2].contains(&1) && order[..2].contains(&3), "{order:?}");
    }

    #[test]
    fn descriptor_shape() {
        let d = boundary_descriptor(&rect(0.0, 0.0, 1.0, 0.5), Canvas::new(64, 64));
        assert_eq!(d.len(), DESCRIPTOR_LEN);
        assert_eq!(d[0], 0.25);
        assert!((d[1] - 0.5).abs() < 1e-12);
        assert!((d[2] - 0.5).abs() < 1e-12);
        assert!((d[3..].iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
