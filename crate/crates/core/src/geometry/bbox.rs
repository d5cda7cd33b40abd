use serde::{Deserialize, Serialize};

use super::{Canvas, GeometryError, Point};

/// Axis-aligned box in normalized canvas coordinates (`y` grows downwards).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        let b = BBox { x_min, y_min, x_max, y_max };
        b.check()?;
        Ok(b)
    }

    /// Builds a box from pixel coordinates on `canvas`.
    pub fn from_pixels(canvas: Canvas, x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        let (w, h) = (canvas.w as f64, canvas.h as f64);
        Self::new(x_min / w, y_min / h, x_max / w, y_max / h)
    }

    pub fn check(&self) -> Result<(), GeometryError> {
        let fields = [self.x_min, self.y_min, self.x_max, self.y_max];
        if fields.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(GeometryError::InvalidBox(format!("coordinates outside [0,1]: {fields:?}")));
        }
        if self.x_min > self.x_max || self.y_min > self.y_max {
            return Err(GeometryError::InvalidBox(format!("min exceeds max: {fields:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn centroid(&self) -> Point {
        Point::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    /// `true` when `other` lies within `self` (boundaries may touch).
    pub fn contains(&self, other: &BBox) -> bool {
        self.x_min <= other.x_min && self.y_min <= other.y_min && other.x_max <= self.x_max && other.y_max <= self.y_max
    }

    /// Containment that excludes the identical box.
    pub fn strictly_contains(&self, other: &BBox) -> bool {
        self.contains(other) && self != other
    }

    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x_min = self.x_min.max(other.x_min);
        let y_min = self.y_min.max(other.y_min);
        let x_max = self.x_max.min(other.x_max);
        let y_max = self.y_max.min(other.y_max);
        (x_min <= x_max && y_min <= y_max).then_some(BBox { x_min, y_min, x_max, y_max })
    }

    /// Overlap area in normalized units squared; zero when disjoint or only touching.
    pub fn intersect_area(&self, other: &BBox) -> f64 {
        let w = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let h = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        w * h
    }

    /// Overlap area in pixels on `canvas`.
    pub fn intersect_area_px(&self, other: &BBox, canvas: Canvas) -> f64 {
        self.intersect_area(other) * canvas.w as f64 * canvas.h as f64
    }

    /// Intersection over union. Two zero-area boxes yield 0.
    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersect_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            (inter / union).clamp(0.0, 1.0)
        }
    }

    /// Area of the box, i.e. the room-size attribute.
    pub fn normalized_size(&self) -> f64 {
        self.area()
    }

    /// Pixel coordinates on `canvas` as `[x_min, y_min, x_max, y_max]`.
    pub fn to_pixels(&self, canvas: Canvas) -> [f64; 4] {
        let (w, h) = (canvas.w as f64, canvas.h as f64);
        [self.x_min * w, self.y_min * h, self.x_max * w, self.y_max * h]
    }

    pub fn union_hull(&self, other: &BBox) -> BBox {
        BBox {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = GeometryError;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}
