use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, EdgeSpec, FloorplanSpec};
use crate::geometry::{BBox, GridLocation};

/// Attributes removed from a room, kept aside for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct WithheldRoom {
    pub id: u32,
    pub location: Option<GridLocation>,
    pub size: Option<f64>,
    pub bbox: Option<BBox>,
}

/// A plan with some rooms reduced to their type, plus what was taken away.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSpec {
    pub spec: FloorplanSpec,
    pub withheld: Vec<WithheldRoom>,
    pub removed_edges: Vec<EdgeSpec>,
}

impl PartialSpec {
    /// The untouched plan this one was derived from.
    pub fn original(&self) -> FloorplanSpec {
        let mut spec = self.spec.clone();
        for w in &self.withheld {
            if let Some(room) = spec.rooms.iter_mut().find(|r| r.id == w.id) {
                room.known = w.location.is_some() && w.size.is_some();
                room.location = w.location;
                room.size = w.size;
                room.bbox = w.bbox;
            }
        }
        // Restore edges in their original order: removed edges are re-merged by
        // sorting on (s, o), which is how generated edges are ordered.
        spec.edges.extend(self.removed_edges.iter().copied());
        spec.edges.sort_by_key(|e| (e.s, e.o));
        spec
    }
}

/// Reduces `k` randomly chosen unprotected rooms to their type only and
/// isolates them by removing every incident edge.
pub fn drop_constraints(spec: &FloorplanSpec, k: usize, seed: u64) -> Result<PartialSpec, DataError> {
    let candidates: Vec<usize> = spec
        .rooms
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.room_type.is_protected())
        .map(|(i, _)| i)
        .collect();
    if k > candidates.len() {
        return Err(DataError::TooManyDrops { requested: k, available: candidates.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = candidates.choose_multiple(&mut rng, k).copied().collect();
    chosen.sort_unstable();

    let mut out = spec.clone();
    let mut withheld = Vec::with_capacity(k);
    for &i in &chosen {
        let room = &mut out.rooms[i];
        withheld.push(WithheldRoom { id: room.id, location: room.location, size: room.size, bbox: room.bbox });
        room.known = false;
        room.location = None;
        room.size = None;
        room.bbox = None;
    }
    let dropped: Vec<u32> = chosen.iter().map(|&i| spec.rooms[i].id).collect();
    let (removed, kept): (Vec<EdgeSpec>, Vec<EdgeSpec>) =
        spec.edges.iter().partition(|e| dropped.contains(&e.s) || dropped.contains(&e.o));
    out.edges = kept;
    Ok(PartialSpec { spec: out, withheld, removed_edges: removed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_floorplan, GenConfig};

    fn five_room_plan() -> FloorplanSpec {
        let cfg = GenConfig { rooms: (5, 5), ..GenConfig::default() };
        generate_floorplan(3, &cfg).unwrap()
    }

    #[test]
    fn zero_drops_is_identity() {
        let spec = five_room_plan();
        let p = drop_constraints(&spec, 0, 9).unwrap();
        assert_eq!(p.spec, spec);
        assert!(p.withheld.is_empty() && p.removed_edges.is_empty());
    }

    #[test]
    fn single_drop_isolates_room() {
        let spec = five_room_plan();
        let p = drop_constraints(&spec, 1, 9).unwrap();
        let unknown: Vec<_> = p.spec.rooms.iter().filter(|r| !r.known).collect();
        assert_eq!(unknown.len(), 1);
        let id = unknown[0].id;
        assert!(unknown[0].bbox.is_none() && unknown[0].location.is_none());
        let degree = spec.edges.iter().filter(|e| e.s == id || e.o == id).count();
        assert_eq!(p.removed_edges.len(), degree);
        assert_eq!(p.spec.edges.len(), spec.edges.len() - degree);
        assert_eq!(p.spec.boundary, spec.boundary);
        assert_eq!(p.original(), spec);
    }

    #[test]
    fn protected_rooms_survive_many_trials() {
        let spec = five_room_plan();
        let droppable = spec.rooms.iter().filter(|r| !r.room_type.is_protected()).count();
        for trial in 0..1000 {
            let p = drop_constraints(&spec, droppable, trial).unwrap();
            for (a, b) in spec.rooms.iter().zip(&p.spec.rooms) {
                if a.room_type.is_protected() {
                    assert_eq!(a, b);
                }
            }
        }
        assert!(matches!(
            drop_constraints(&spec, droppable + 1, 0),
            Err(DataError::TooManyDrops { .. })
        ));
    }
}
