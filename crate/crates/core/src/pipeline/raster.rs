use serde::{Deserialize, Serialize};

use crate::data::RoomType;
use crate::geometry::{BBox, BoundaryMask, Canvas};

/// Class index per pixel, row-major. Pixels outside the boundary are `External`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutRaster {
    pub width: u32,
    pub height: u32,
    pub classes: Vec<u8>,
}

impl LayoutRaster {
    pub fn canvas(&self) -> Canvas {
        Canvas::new(self.width, self.height)
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.classes[row * self.width as usize + col]
    }

    /// `(class, run length)` pairs in row-major order.
    pub fn run_lengths(&self) -> Vec<(u8, u32)> {
        let mut out: Vec<(u8, u32)> = Vec::new();
        for &c in &self.classes {
            match out.last_mut() {
                Some((last, n)) if *last == c => *n += 1,
                _ => out.push((c, 1)),
            }
        }
        out
    }

    pub fn from_run_lengths(width: u32, height: u32, runs: &[(u8, u32)]) -> Option<Self> {
        let classes: Vec<u8> = runs.iter().flat_map(|&(c, n)| std::iter::repeat_n(c, n as usize)).collect();
        (classes.len() == (width * height) as usize).then_some(LayoutRaster { width, height, classes })
    }
}

pub const EXTERNAL: u8 = RoomType::External as u8;

/// Pixel index range `[lo, hi)` whose centres fall inside `[a, b)` on an axis of `n` pixels.
fn pixel_span(a: f64, b: f64, n: u32) -> (usize, usize) {
    let lo = (a * n as f64 - 0.5).ceil().max(0.0) as usize;
    let hi = ((b * n as f64 - 0.5).ceil().max(0.0) as usize).min(n as usize);
    (lo, hi.max(lo))
}

/// Paints boxes into the boundary mask and fills the gaps.
///
/// Larger boxes are painted first so smaller rooms stay visible where they
/// overlap; equal areas go in room order. Interior pixels that no box covers
/// take the class of the box whose centre is nearest.
pub fn rasterize_layout(boxes: &[BBox], types: &[RoomType], mask: &BoundaryMask) -> LayoutRaster {
    assert_eq!(boxes.len(), types.len(), "one type per box");
    let canvas = mask.canvas();
    let (w, h) = (canvas.w as usize, canvas.h as usize);
    const UNSET: u8 = u8::MAX;
    let mut classes: Vec<u8> = mask.bits().iter().map(|&inside| if inside { UNSET } else { EXTERNAL }).collect();

    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| boxes[b].area().total_cmp(&boxes[a].area()).then(a.cmp(&b)));
    for &i in &order {
        let b = &boxes[i];
        let (c0, c1) = pixel_span(b.x_min, b.x_max, canvas.w);
        let (r0, r1) = pixel_span(b.y_min, b.y_max, canvas.h);
        let class = types[i].index() as u8;
        for r in r0..r1 {
            for px in &mut classes[r * w + c0..r * w + c1] {
                if *px != EXTERNAL {
                    *px = class;
                }
            }
        }
    }

    if !boxes.is_empty() && classes.contains(&UNSET) {
        let centres: Vec<(f64, f64)> = boxes.iter().map(|b| (b.centroid().x * w as f64, b.centroid().y * h as f64)).collect();
        for r in 0..h {
            for c in 0..w {
                if classes[r * w + c] != UNSET {
                    continue;
                }
                let (x, y) = (c as f64 + 0.5, r as f64 + 0.5);
                let mut best = (f64::INFINITY, 0);
                for (i, &(cx, cy)) in centres.iter().enumerate() {
                    let d = (x - cx).powi(2) + (y - cy).powi(2);
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                classes[r * w + c] = types[best.1].index() as u8;
            }
        }
    }
    LayoutRaster { width: canvas.w, height: canvas.h, classes }
}

/// RGB colour per class, used for PNG export and the browser demo.
pub fn class_colour(class: u8) -> [u8; 3] {
    const PALETTE: [[u8; 3]; 15] = [
        [238, 232, 170],
        [255, 165, 0],
        [240, 128, 128],
        [135, 206, 235],
        [240, 230, 140],
        [255, 182, 193],
        [152, 251, 152],
        [221, 160, 221],
        [176, 196, 222],
        [144, 238, 144],
        [210, 180, 140],
        [189, 183, 107],
        [205, 133, 63],
        [255, 255, 255],
        [64, 64, 64],
    ];
    PALETTE.get(class as usize).copied().unwrap_or([0, 0, 0])
}
