use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{derive_edges, AdjacencyTolerance, DataError, FloorplanSpec, RoomSpec, RoomType};
use crate::geometry::{BBox, Canvas, RectPolygon, DEFAULT_GRID_K};

/// Synthetic generator settings. Lengths are in grid units of
/// `canvas / grid_units`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub canvas: Canvas,
    pub grid_units: u32,
    /// Inclusive room-count range.
    pub rooms: (usize, usize),
    /// Inclusive boundary corner-count range (even values).
    pub corners: (usize, usize),
    /// Inclusive range of the boundary's enclosing-box side.
    pub extent: (u32, u32),
    /// Shortest room side.
    pub min_side: u32,
    pub grid_k: u32,
    pub adjacency: AdjacencyTolerance,
    pub max_attempts: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            canvas: Canvas::default(),
            grid_units: 32,
            rooms: (4, 10),
            corners: (4, 8),
            extent: (18, 30),
            min_side: 3,
            grid_k: DEFAULT_GRID_K,
            adjacency: AdjacencyTolerance::default(),
            max_attempts: 64,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::Generation(m.to_string()));
        if self.rooms.0 < 4 || self.rooms.0 > self.rooms.1 {
            return bad("room range must satisfy 4 <= min <= max");
        }
        if self.corners.0 < 4 || self.corners.0 > self.corners.1 || self.corners.1 > 8 {
            return bad("corner range must lie within 4..=8");
        }
        if !(self.corners.0..=self.corners.1).any(|c| c % 2 == 0) {
            return bad("corner range holds no even count");
        }
        if self.extent.0 > self.extent.1 || self.extent.1 + 2 > self.grid_units || self.min_side == 0 {
            return bad("extent must fit inside the grid with a one-unit margin");
        }
        if self.grid_k == 0 {
            return bad("grid order must be positive");
        }
        Ok(())
    }
}

/// Integer rectangle `[x0, x1) x [y0, y1)` in grid units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Cell {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

impl Cell {
    fn w(&self) -> u32 {
        self.x1 - self.x0
    }
    fn h(&self) -> u32 {
        self.y1 - self.y0
    }
    fn area(&self) -> u32 {
        self.w() * self.h()
    }
    fn capacity(&self, m: u32) -> usize {
        ((self.w() / m) * (self.h() / m)) as usize
    }
}

#[derive(Clone, Copy)]
enum Corner {
    TopLeft,
    TopRight,
    BottomRight,
    BottomLeft,
}

/// Boundary outline plus its decomposition into rectangles.
fn sample_boundary(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> (Vec<(u32, u32)>, Vec<Cell>) {
    let g = cfg.grid_units;
    let w = rng.gen_range(cfg.extent.0..=cfg.extent.1);
    let h = rng.gen_range(cfg.extent.0..=cfg.extent.1);
    let x0 = rng.gen_range(1..=g - 1 - w);
    let y0 = rng.gen_range(1..=g - 1 - h);
    let (x1, y1) = (x0 + w, y0 + h);

    let counts: Vec<usize> = (cfg.corners.0..=cfg.corners.1).filter(|c| c % 2 == 0).collect();
    let notches = (counts[rng.gen_range(0..counts.len())] - 4) / 2;
    let mut corners = [Corner::TopLeft, Corner::TopRight, Corner::BottomRight, Corner::BottomLeft];
    corners.shuffle(rng);
    // Notch sizes per corner: (width, height); zero means no notch.
    let mut cut = [(0u32, 0u32); 4];
    for c in corners.iter().take(notches) {
        let nw = rng.gen_range(cfg.min_side + 1..=(w / 2 - 2).max(cfg.min_side + 1));
        let nh = rng.gen_range(cfg.min_side + 1..=(h / 2 - 2).max(cfg.min_side + 1));
        cut[*c as usize] = (nw, nh);
    }
    let [tl, tr, br, bl] = cut;
    let outline = vec![
        (x0, y0 + tl.1),
        (x0 + tl.0, y0 + tl.1),
        (x0 + tl.0, y0),
        (x1 - tr.0, y0),
        (x1 - tr.0, y0 + tr.1),
        (x1, y0 + tr.1),
        (x1, y1 - br.1),
        (x1 - br.0, y1 - br.1),
        (x1 - br.0, y1),
        (x0 + bl.0, y1),
        (x0 + bl.0, y1 - bl.1),
        (x0, y1 - bl.1),
    ];

    // Slice the region into strips along the notch edges; merge strips with equal extent.
    let vertical = rng.gen_bool(0.5);
    let (lo, hi) = if vertical { (x0, x1) } else { (y0, y1) };
    let mut breaks = vec![lo, hi];
    let notch_edges = if vertical {
        [x0 + tl.0, x1 - tr.0, x1 - br.0, x0 + bl.0]
    } else {
        [y0 + tl.1, y0 + tr.1, y1 - br.1, y1 - bl.1]
    };
    breaks.extend(notch_edges.iter().filter(|b| **b > lo && **b < hi));
    breaks.sort_unstable();
    breaks.dedup();
    let mut pieces: Vec<Cell> = Vec::new();
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mid2 = a + b; // twice the strip midpoint
        // Notch depth when this strip lies under the notch.
        let under = |hit: bool, depth: u32| if hit { depth } else { 0 };
        let piece = if vertical {
            let top = under(mid2 < 2 * (x0 + tl.0), tl.1).max(under(mid2 > 2 * (x1 - tr.0), tr.1));
            let bottom = under(mid2 < 2 * (x0 + bl.0), bl.1).max(under(mid2 > 2 * (x1 - br.0), br.1));
            Cell { x0: a, y0: y0 + top, x1: b, y1: y1 - bottom }
        } else {
            let left = under(mid2 < 2 * (y0 + tl.1), tl.0).max(under(mid2 > 2 * (y1 - bl.1), bl.0));
            let right = under(mid2 < 2 * (y0 + tr.1), tr.0).max(under(mid2 > 2 * (y1 - br.1), br.0));
            Cell { x0: x0 + left, y0: a, x1: x1 - right, y1: b }
        };
        match pieces.last_mut() {
            Some(prev) if vertical && prev.y0 == piece.y0 && prev.y1 == piece.y1 => prev.x1 = piece.x1,
            Some(prev) if !vertical && prev.x0 == piece.x0 && prev.x1 == piece.x1 => prev.y1 = piece.y1,
            _ => pieces.push(piece),
        }
    }
    (outline, pieces)
}

/// Recursive guillotine split of `cell` into `n` rooms.
fn guillotine(rng: &mut ChaCha8Rng, cell: Cell, n: usize, m: u32, out: &mut Vec<Cell>) -> bool {
    if n == 1 {
        out.push(cell);
        return true;
    }
    let prefer_x = match cell.w().cmp(&cell.h()) {
        std::cmp::Ordering::Greater => rng.gen_bool(0.8),
        std::cmp::Ordering::Less => rng.gen_bool(0.2),
        std::cmp::Ordering::Equal => rng.gen_bool(0.5),
    };
    for along_x in [prefer_x, !prefer_x] {
        let (len, across) = if along_x { (cell.w(), cell.h()) } else { (cell.h(), cell.w()) };
        let per_strip = (across / m) as usize;
        if per_strip == 0 {
            continue;
        }
        let n1 = rng.gen_range(1..n);
        let need = |k: usize| m * k.div_ceil(per_strip) as u32;
        let (c_lo, c_hi) = (need(n1), len.saturating_sub(need(n - n1)));
        if c_lo > c_hi {
            continue;
        }
        let target = len as f64 * n1 as f64 / n as f64 + rng.gen_range(-1.5..1.5);
        let c = (target.round().max(0.0) as u32).clamp(c_lo, c_hi);
        let (a, b) = if along_x {
            (Cell { x1: cell.x0 + c, ..cell }, Cell { x0: cell.x0 + c, ..cell })
        } else {
            (Cell { y1: cell.y0 + c, ..cell }, Cell { y0: cell.y0 + c, ..cell })
        };
        return guillotine(rng, a, n1, m, out) && guillotine(rng, b, n - n1, m, out);
    }
    false
}

/// Spreads `n` rooms over the pieces, at least one each, roughly by area.
fn allot(rng: &mut ChaCha8Rng, pieces: &[Cell], n: usize, m: u32) -> Option<Vec<usize>> {
    let caps: Vec<usize> = pieces.iter().map(|p| p.capacity(m)).collect();
    if pieces.len() > n || caps.contains(&0) || caps.iter().sum::<usize>() < n {
        return None;
    }
    let mut counts = vec![1usize; pieces.len()];
    for _ in pieces.len()..n {
        let weights: Vec<f64> = pieces
            .iter()
            .zip(&counts)
            .zip(&caps)
            .map(|((p, c), cap)| if c < cap { p.area() as f64 / *c as f64 } else { 0.0 })
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let mut pick = rng.gen_range(0.0..total);
        let mut chosen = weights.len() - 1;
        for (i, wt) in weights.iter().enumerate() {
            if pick < *wt {
                chosen = i;
                break;
            }
            pick -= wt;
        }
        counts[chosen] += 1;
    }
    Some(counts)
}

fn attempt(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Option<FloorplanSpec> {
    let n = rng.gen_range(cfg.rooms.0..=cfg.rooms.1);
    let (outline, pieces) = sample_boundary(rng, cfg);
    let counts = allot(rng, &pieces, n, cfg.min_side)?;
    let mut cells = Vec::with_capacity(n);
    for (piece, k) in pieces.iter().zip(&counts) {
        if !guillotine(rng, *piece, *k, cfg.min_side, &mut cells) {
            return None;
        }
    }
    let g = cfg.grid_units as f64;
    let boundary = RectPolygon::from_coords(
        &outline.iter().map(|(x, y)| [*x as f64 / g, *y as f64 / g]).collect::<Vec<_>>(),
    )
    .ok()?;

    // Largest room is the living room, second largest the master room,
    // smallest a bathroom; the kitchen goes to a random remaining room.
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(cells[i].area()), i));
    let mut types = vec![None; cells.len()];
    types[order[0]] = Some(RoomType::LivingRoom);
    types[order[1]] = Some(RoomType::MasterRoom);
    types[order[order.len() - 1]] = Some(RoomType::Bathroom);
    let rest: Vec<usize> = order[2..order.len() - 1].to_vec();
    let kitchen = rest[rng.gen_range(0..rest.len())];
    types[kitchen] = Some(RoomType::Kitchen);
    let others = &RoomType::GENERATABLE[4..];
    let types: Vec<RoomType> = types
        .into_iter()
        .map(|t| t.unwrap_or_else(|| others[rng.gen_range(0..others.len())]))
        .collect();

    let rooms: Vec<RoomSpec> = cells
        .iter()
        .zip(&types)
        .enumerate()
        .map(|(i, (c, t))| {
            let b = BBox { x_min: c.x0 as f64 / g, y_min: c.y0 as f64 / g, x_max: c.x1 as f64 / g, y_max: c.y1 as f64 / g };
            RoomSpec::from_box(i as u32, *t, b, cfg.grid_k)
        })
        .collect();
    let pairs: Vec<(u32, BBox)> = rooms.iter().map(|r| (r.id, r.bbox.expect("generated rooms carry boxes"))).collect();
    let edges = derive_edges(&pairs, cfg.adjacency);
    let mut spec = FloorplanSpec::new(cfg.canvas, boundary, rooms, edges);
    spec.source = None;
    Some(spec)
}

/// Samples a plan whose ground truth is consistent by construction.
///
/// A rectilinear boundary with up to two corner notches is cut into
/// rectangles along the notch edges, and each rectangle is split by
/// recursive guillotine cuts. Rooms therefore tile the boundary exactly.
pub fn generate_floorplan(seed: u64, cfg: &GenConfig) -> Result<FloorplanSpec, DataError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cfg.max_attempts {
        if let Some(mut spec) = attempt(&mut rng, cfg) {
            spec.source = Some(format!("synthetic:{seed}"));
            return Ok(spec);
        }
    }
    Err(DataError::Generation(format!(
        "no valid plan after {} attempts for seed {seed} (rooms {:?}, extent {:?}, min side {})",
        cfg.max_attempts, cfg.rooms, cfg.extent, cfg.min_side
    )))
}

/// `count` plans with per-plan seeds drawn from `seed`.
pub fn generate_dataset(seed: u64, count: usize, cfg: &GenConfig) -> Result<Vec<FloorplanSpec>, DataError> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| generate_floorplan(master.gen(), cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::relation_satisfied;

    #[test]
    fn deterministic_per_seed() {
        let cfg = GenConfig::default();
        let a = generate_floorplan(7, &cfg).unwrap();
        let b = generate_floorplan(7, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
        assert_ne!(a, generate_floorplan(8, &cfg).unwrap());
    }

    #[test]
    fn generated_plans_are_consistent() {
        let cfg = GenConfig::default();
        for seed in 0..300 {
            let spec = generate_floorplan(seed, &cfg).unwrap();
            spec.validate_ground_truth(cfg.grid_k).unwrap();
            let n = spec.room_count();
            assert!((cfg.rooms.0..=cfg.rooms.1).contains(&n));
            let c = spec.boundary.len();
            assert!(c % 2 == 0 && (cfg.corners.0..=cfg.corners.1).contains(&c), "corners {c}");
            let idx = spec.index_of();
            for e in &spec.edges {
                let s = spec.rooms[idx[&e.s]].bbox.unwrap();
                let o = spec.rooms[idx[&e.o]].bbox.unwrap();
                assert!(relation_satisfied(&s, &o, e.rel));
            }
            let types = spec.room_types();
            for t in [RoomType::LivingRoom, RoomType::Kitchen, RoomType::MasterRoom] {
                assert_eq!(types.iter().filter(|x| **x == t).count(), 1);
            }
            assert!(types.contains(&RoomType::Bathroom));
            // Rooms tile the boundary: total box area equals polygon area.
            let total: f64 = spec.rooms.iter().map(|r| r.bbox.unwrap().area()).sum();
            assert!((total - spec.boundary.area()).abs() < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn room_count_histogram_covers_range() {
        let cfg = GenConfig::default();
        let mut seen = vec![0usize; cfg.rooms.1 + 1];
        let plans = generate_dataset(11, 1000, &cfg).unwrap();
        for p in &plans {
            seen[p.room_count()] += 1;
        }
        for n in cfg.rooms.0..=cfg.rooms.1 {
            assert!(seen[n] > 0, "room count {n} never generated");
        }
        let mut corners = [0usize; 9];
        for p in &plans {
            corners[p.boundary.len()] += 1;
        }
        assert!(corners[4] > 0 && corners[6] > 0 && corners[8] > 0);
    }

    #[test]
    fn impossible_config_fails_with_diagnostic() {
        let cfg = GenConfig { rooms: (40, 40), extent: (18, 18), min_side: 4, max_attempts: 4, ..GenConfig::default() };
        let err = generate_floorplan(1, &cfg).unwrap_err();
        assert!(matches!(err, DataError::Generation(_)));
        assert!(GenConfig { corners: (5, 5), ..GenConfig::default() }.validate().is_err());
    }
}
