//! Box arithmetic, rectilinear boundaries, corner features, grid locations and
//! the spatial-relation classifier shared by data generation and evaluation.

mod bbox;
mod polygon;
mod relation;

pub use bbox::BBox;
pub use polygon::{corner_features, BoundaryMask, CornerFeature, RectPolygon};
pub use relation::{classify_relation, relation_satisfied, RelationType};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("relation between identical boxes is undefined")]
    IdenticalBoxes,
    #[error("unknown relation type `{0}`")]
    UnknownRelation(String),
}

/// Default corner-probe offset: 3 pixels on a 256 canvas.
pub const DEFAULT_EPSILON: f64 = 3.0 / 256.0;

/// Default grid order for room locations (5x5 cells).
pub const DEFAULT_GRID_K: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Raster size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Canvas {
    pub w: u32,
    pub h: u32,
}

impl Canvas {
    pub const fn new(w: u32, h: u32) -> Self {
        Canvas { w, h }
    }

    pub fn pixels(&self) -> usize {
        self.w as usize * self.h as usize
    }
}

impl Default for Canvas {
    fn default() -> Self {
        Canvas::new(256, 256)
    }
}

/// Cell of a `K`x`K` grid over the canvas, row-major with row 0 at the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridLocation(pub u32);

impl GridLocation {
    pub fn from_row_col(row: u32, col: u32, k: u32) -> Self {
        GridLocation(row * k + col)
    }

    pub fn row(self, k: u32) -> u32 {
        self.0 / k
    }

    pub fn col(self, k: u32) -> u32 {
        self.0 % k
    }

    pub fn is_valid(self, k: u32) -> bool {
        self.0 < k * k
    }

    /// Cell containing the point, borders belonging to the higher cell.
    pub fn of_point(p: Point, k: u32) -> Self {
        let cell = |v: f64| ((v * k as f64).floor().max(0.0) as u32).min(k - 1);
        GridLocation::from_row_col(cell(p.y), cell(p.x), k)
    }

    /// Normalized centre of the cell.
    pub fn center(self, k: u32) -> Point {
        Point::new((self.col(k) as f64 + 0.5) / k as f64, (self.row(k) as f64 + 0.5) / k as f64)
    }
}

/// Grid cell holding the centroid of `b`.
pub fn location_cell(b: &BBox, k: u32) -> GridLocation {
    GridLocation::of_point(b.centroid(), k)
}
