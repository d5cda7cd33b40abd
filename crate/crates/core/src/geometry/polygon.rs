use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{BBox, Canvas, GeometryError, Point};

/// Simple rectilinear polygon, stored counter-clockwise as seen on screen
/// (x to the right, y downwards) and starting at its top-most, left-most vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct RectPolygon {
    corners: Vec<Point>,
}

impl RectPolygon {
    /// Validates `points` and puts them in canonical order. Collinear and
    /// repeated vertices are removed first.
    pub fn new(points: Vec<Point>) -> Result<Self, GeometryError> {
        let mut pts = dedup_ring(points);
        if pts.len() < 4 {
            return Err(GeometryError::InvalidPolygon(format!("needs at least 4 corners, got {}", pts.len())));
        }
        if pts.iter().any(|p| !p.x.is_finite() || !p.y.is_finite() || p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0) {
            return Err(GeometryError::InvalidPolygon("corner outside the unit canvas".into()));
        }
        let n = pts.len();
        let mut prev_horizontal = None;
        for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let horizontal = if a.y == b.y {
                true
            } else if a.x == b.x {
                false
            } else {
                return Err(GeometryError::InvalidPolygon(format!("edge {i} is not axis-parallel")));
            };
            if prev_horizontal == Some(horizontal) {
                return Err(GeometryError::InvalidPolygon(format!("edges {} and {i} do not alternate", i - 1)));
            }
            prev_horizontal = Some(horizontal);
        }
        if !n.is_multiple_of(2) {
            return Err(GeometryError::InvalidPolygon("odd corner count".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_touch((pts[i], pts[(i + 1) % n]), (pts[j], pts[(j + 1) % n])) {
                    return Err(GeometryError::InvalidPolygon(format!("edges {i} and {j} intersect")));
                }
            }
        }
        let area2 = shoelace2(&pts);
        if area2 == 0.0 {
            return Err(GeometryError::InvalidPolygon("empty interior".into()));
        }
        // Screen counter-clockwise means a negative shoelace sum in y-down coordinates.
        if area2 > 0.0 {
            pts.reverse();
        }
        let start = (0..n)
            .min_by(|&a, &b| pts[a].y.total_cmp(&pts[b].y).then(pts[a].x.total_cmp(&pts[b].x)))
            .unwrap_or(0);
        pts.rotate_left(start);
        Ok(RectPolygon { corners: pts })
    }

    pub fn from_coords(coords: &[[f64; 2]]) -> Result<Self, GeometryError> {
        Self::new(coords.iter().map(|c| Point::new(c[0], c[1])).collect())
    }

    /// Axis-aligned rectangle.
    pub fn rectangle(b: &BBox) -> Result<Self, GeometryError> {
        Self::from_coords(&[[b.x_min, b.y_min], [b.x_max, b.y_min], [b.x_max, b.y_max], [b.x_min, b.y_max]])
    }

    pub fn corners(&self) -> &[Point] {
        &self.corners
    }

    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn area(&self) -> f64 {
        shoelace2(&self.corners).abs() * 0.5
    }

    pub fn bounding_box(&self) -> BBox {
        let mut b = BBox { x_min: 1.0, y_min: 1.0, x_max: 0.0, y_max: 0.0 };
        for p in &self.corners {
            b.x_min = b.x_min.min(p.x);
            b.y_min = b.y_min.min(p.y);
            b.x_max = b.x_max.max(p.x);
            b.y_max = b.y_max.max(p.y);
        }
        b
    }

    /// Even-odd point test against a horizontal ray towards `+x`.
    pub fn contains_point(&self, p: Point) -> bool {
        let mut inside = false;
        let n = self.corners.len();
        for i in 0..n {
            let (a, b) = (self.corners[i], self.corners[(i + 1) % n]);
            if a.x != b.x {
                continue;
            }
            let (lo, hi) = if a.y < b.y { (a.y, b.y) } else { (b.y, a.y) };
            if p.y >= lo && p.y < hi && a.x > p.x {
                inside = !inside;
            }
        }
        inside
    }

    /// Vertical edges as `(x, y_lo, y_hi)`.
    fn vertical_edges(&self) -> Vec<(f64, f64, f64)> {
        let n = self.corners.len();
        (0..n)
            .filter_map(|i| {
                let (a, b) = (self.corners[i], self.corners[(i + 1) % n]);
                (a.x == b.x).then(|| (a.x, a.y.min(b.y), a.y.max(b.y)))
            })
            .collect()
    }

    /// Sets pixel `(r, c)` iff its centre lies inside the polygon (even-odd rule).
    pub fn rasterize(&self, canvas: Canvas) -> BoundaryMask {
        let (w, h) = (canvas.w as usize, canvas.h as usize);
        let mut bits = vec![false; w * h];
        let verticals = self.vertical_edges();
        let mut crossings = Vec::with_capacity(verticals.len());
        for r in 0..h {
            let yc = (r as f64 + 0.5) / h as f64;
            crossings.clear();
            crossings.extend(verticals.iter().filter(|(_, lo, hi)| yc >= *lo && yc < *hi).map(|(x, _, _)| *x));
            crossings.sort_by(f64::total_cmp);
            for span in crossings.chunks_exact(2) {
                for c in 0..w {
                    let xc = (c as f64 + 0.5) / w as f64;
                    if xc >= span[0] && xc < span[1] {
                        bits[r * w + c] = true;
                    }
                }
            }
        }
        BoundaryMask { width: canvas.w, height: canvas.h, bits }
    }

    /// Vertices in canonical order; their count is the number of boundary factors.
    pub fn extract_corners(&self) -> Vec<Point> {
        self.corners.clone()
    }
}

impl TryFrom<Vec<[f64; 2]>> for RectPolygon {
    type Error = GeometryError;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self, Self::Error> {
        Self::from_coords(&v)
    }
}

impl From<RectPolygon> for Vec<[f64; 2]> {
    fn from(p: RectPolygon) -> Self {
        p.corners.iter().map(|c| [c.x, c.y]).collect()
    }
}

fn shoelace2(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum()
}

/// Removes repeated points and vertices that sit in the middle of a straight run.
fn dedup_ring(mut pts: Vec<Point>) -> Vec<Point> {
    loop {
        let n = pts.len();
        if n < 3 {
            return pts;
        }
        let mut removed = false;
        for i in 0..n {
            let prev = pts[(i + n - 1) % n];
            let cur = pts[i];
            let next = pts[(i + 1) % n];
            let repeated = cur == next;
            let collinear = (prev.x == cur.x && cur.x == next.x) || (prev.y == cur.y && cur.y == next.y);
            if repeated || collinear {
                pts.remove(i);
                removed = true;
                break;
            }
        }
        if !removed {
            return pts;
        }
    }
}

/// Axis-parallel segments share at least one point.
fn segments_touch(s: (Point, Point), t: (Point, Point)) -> bool {
    let (sx0, sx1) = (s.0.x.min(s.1.x), s.0.x.max(s.1.x));
    let (sy0, sy1) = (s.0.y.min(s.1.y), s.0.y.max(s.1.y));
    let (tx0, tx1) = (t.0.x.min(t.1.x), t.0.x.max(t.1.x));
    let (ty0, ty1) = (t.0.y.min(t.1.y), t.0.y.max(t.1.y));
    sx0 <= tx1 && tx0 <= sx1 && sy0 <= ty1 && ty0 <= sy1
}

/// Row-major binary image; `true` marks pixels inside the building.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMask {
    pub width: u32,
    pub height: u32,
    bits: Vec<bool>,
}

impl BoundaryMask {
    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, GeometryError> {
        if bits.len() != (width as usize) * (height as usize) {
            return Err(GeometryError::InvalidMask(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(BoundaryMask { width, height, bits })
    }

    pub fn canvas(&self) -> Canvas {
        Canvas::new(self.width, self.height)
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        row < self.height as usize && col < self.width as usize && self.bits[row * self.width as usize + col]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Mask value at a normalized point. Points off the canvas read as outside.
    pub fn probe(&self, x: f64, y: f64) -> bool {
        if !(0.0..1.0).contains(&x) || !(0.0..1.0).contains(&y) {
            return false;
        }
        let col = (x * self.width as f64).floor() as usize;
        let row = (y * self.height as f64).floor() as usize;
        self.get(row, col)
    }

    /// Traces the outline of the component holding the top-most, left-most set
    /// pixel and returns it as a rectilinear polygon.
    pub fn trace_polygon(&self) -> Result<RectPolygon, GeometryError> {
        let (w, h) = (self.width as i64, self.height as i64);
        let set = |r: i64, c: i64| r >= 0 && c >= 0 && r < h && c < w && self.bits[(r * w + c) as usize];
        let start = self
            .bits
            .iter()
            .position(|b| *b)
            .ok_or_else(|| GeometryError::InvalidMask("mask has no interior pixels".into()))?;
        // Directed lattice edges with the interior kept on the same side as the
        // canonical polygon orientation.
        let mut next: HashMap<(i64, i64), Vec<(i64, i64)>> = HashMap::new();
        for r in 0..h {
            for c in 0..w {
                if !set(r, c) {
                    continue;
                }
                if !set(r - 1, c) {
                    next.entry((c + 1, r)).or_default().push((c, r));
                }
                if !set(r + 1, c) {
                    next.entry((c, r + 1)).or_default().push((c + 1, r + 1));
                }
                if !set(r, c - 1) {
                    next.entry((c, r)).or_default().push((c, r + 1));
                }
                if !set(r, c + 1) {
                    next.entry((c + 1, r + 1)).or_default().push((c + 1, r));
                }
            }
        }
        let (sr, sc) = ((start as i64) / w, (start as i64) % w);
        let origin = (sc, sr);
        let mut ring = vec![origin];
        let mut cur = origin;
        let limit = next.values().map(Vec::len).sum::<usize>() + 1;
        loop {
            let outs = next
                .get_mut(&cur)
                .ok_or_else(|| GeometryError::InvalidMask("outline is not closed".into()))?;
            let nxt = outs.pop().ok_or_else(|| GeometryError::InvalidMask("outline is not closed".into()))?;
            if nxt == origin {
                break;
            }
            ring.push(nxt);
            cur = nxt;
            if ring.len() > limit {
                return Err(GeometryError::InvalidMask("outline walk did not terminate".into()));
            }
        }
        let pts = ring
            .into_iter()
            .map(|(x, y)| Point::new(x as f64 / self.width as f64, y as f64 / self.height as f64))
            .collect();
        RectPolygon::new(pts)
    }
}

/// Input feature of a boundary corner.
///
/// Layout: `[x, y, d_left, d_right, d_top, d_bottom, p(+e,+e), p(+e,-e), p(-e,+e), p(-e,-e)]`
/// where `d_*` are distances to the sides of the boundary's enclosing box and
/// `p(dx,dy)` is the mask value at the corner shifted by `(dx, dy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerFeature(pub [f64; 10]);

impl CornerFeature {
    pub const LEN: usize = 10;
    pub const PROBE_OFFSETS: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

    pub fn compute(polygon: &RectPolygon, mask: &BoundaryMask, corner: Point, epsilon: f64) -> Self {
        let bb = polygon.bounding_box();
        let mut f = [0.0; 10];
        f[0] = corner.x;
        f[1] = corner.y;
        f[2] = corner.x - bb.x_min;
        f[3] = bb.x_max - corner.x;
        f[4] = corner.y - bb.y_min;
        f[5] = bb.y_max - corner.y;
        for (k, (dx, dy)) in Self::PROBE_OFFSETS.iter().enumerate() {
            f[6 + k] = mask.probe(corner.x + dx * epsilon, corner.y + dy * epsilon) as u8 as f64;
        }
        CornerFeature(f)
    }

    pub fn distances(&self) -> &[f64] {
        &self.0[2..6]
    }

    pub fn probes(&self) -> &[f64] {
        &self.0[6..10]
    }
}

/// Features for every corner of `polygon`, in canonical corner order.
pub fn corner_features(polygon: &RectPolygon, mask: &BoundaryMask, epsilon: f64) -> Vec<CornerFeature> {
    polygon
        .extract_corners()
        .into_iter()
        .map(|c| CornerFeature::compute(polygon, mask, c, epsilon))
        .collect()
}
