use super::EdgeSpec;
use crate::geometry::{classify_relation, BBox};

/// Adjacency predicate thresholds in normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjacencyTolerance {
    /// Largest wall gap still counted as touching.
    pub gap: f64,
    /// Smallest shared wall length.
    pub min_span: f64,
}

impl Default for AdjacencyTolerance {
    fn default() -> Self {
        AdjacencyTolerance { gap: 2.0 / 256.0, min_span: 8.0 / 256.0 }
    }
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    a1.min(b1) - a0.max(b0)
}

fn adjacent(a: &BBox, b: &BBox, tol: AdjacencyTolerance) -> bool {
    if a.contains(b) || b.contains(a) {
        return true;
    }
    let x_touch = (a.x_max - b.x_min).abs() <= tol.gap || (b.x_max - a.x_min).abs() <= tol.gap;
    let y_touch = (a.y_max - b.y_min).abs() <= tol.gap || (b.y_max - a.y_min).abs() <= tol.gap;
    (x_touch && overlap(a.y_min, a.y_max, b.y_min, b.y_max) >= tol.min_span)
        || (y_touch && overlap(a.x_min, a.x_max, b.x_min, b.x_max) >= tol.min_span)
}

/// Typed adjacencies between rooms given as `(id, box)`.
///
/// Each adjacent pair yields one edge whose subject has the smaller id; the
/// label is the classified relation of subject to object.
pub fn derive_edges(rooms: &[(u32, BBox)], tol: AdjacencyTolerance) -> Vec<EdgeSpec> {
    let mut sorted: Vec<(u32, BBox)> = rooms.to_vec();
    sorted.sort_by_key(|(id, _)| *id);
    let mut edges = Vec::new();
    for i in 0..sorted.len() {
        for j in (i + 1)..sorted.len() {
            let (si, bi) = sorted[i];
            let (sj, bj) = sorted[j];
            if !adjacent(&bi, &bj, tol) {
                continue;
            }
            if let Ok(rel) = classify_relation(&bi, &bj) {
                edges.push(EdgeSpec { s: si, o: sj, rel });
            }
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RelationType;

    fn b(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn shared_wall_gives_left_of() {
        let rooms = [(0, b(0.1, 0.1, 0.4, 0.5)), (1, b(0.4, 0.1, 0.7, 0.5))];
        let edges = derive_edges(&rooms, AdjacencyTolerance::default());
        assert_eq!(edges, vec![EdgeSpec { s: 0, o: 1, rel: RelationType::LeftOf }]);
        // Subject is always the smaller id.
        let swapped = [(1, b(0.1, 0.1, 0.4, 0.5)), (0, b(0.4, 0.1, 0.7, 0.5))];
        let edges = derive_edges(&swapped, AdjacencyTolerance::default());
        assert_eq!(edges, vec![EdgeSpec { s: 0, o: 1, rel: RelationType::RightOf }]);
    }

    #[test]
    fn distant_boxes_have_no_edge() {
        let rooms = [(0, b(0.0, 0.0, 0.2, 0.2)), (1, b(0.6, 0.6, 0.9, 0.9))];
        assert!(derive_edges(&rooms, AdjacencyTolerance::default()).is_empty());
    }

    #[test]
    fn nested_box_is_inside_regardless_of_gap() {
        let rooms = [(0, b(0.4, 0.4, 0.5, 0.5)), (1, b(0.0, 0.0, 1.0, 1.0))];
        let tight = AdjacencyTolerance { gap: 0.0, min_span: 0.5 };
        assert_eq!(derive_edges(&rooms, tight), vec![EdgeSpec { s: 0, o: 1, rel: RelationType::Inside }]);
    }

    #[test]
    fn short_shared_span_is_not_adjacent() {
        // Corners touch over 4 pixels only.
        let k = 4.0 / 256.0;
        let rooms = [(0, b(0.0, 0.0, 0.3, 0.3)), (1, b(0.3, 0.3 - k, 0.6, 0.6))];
        assert!(derive_edges(&rooms, AdjacencyTolerance::default()).is_empty());
    }
}
