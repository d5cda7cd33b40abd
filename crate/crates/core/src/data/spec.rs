use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::geometry::{classify_relation, location_cell, BBox, Canvas, GridLocation, RectPolygon, RelationType};

/// Current floorplan JSON format version.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RoomType {
    LivingRoom,
    MasterRoom,
    Kitchen,
    Bathroom,
    DiningRoom,
    ChildRoom,
    StudyRoom,
    SecondRoom,
    GuestRoom,
    Balcony,
    Entrance,
    Storage,
    #[serde(rename = "Wall-in")]
    WallIn,
    External,
    ExteriorWall,
}

impl RoomType {
    pub const COUNT: usize = 15;

    pub const ALL: [RoomType; 15] = [
        RoomType::LivingRoom,
        RoomType::MasterRoom,
        RoomType::Kitchen,
        RoomType::Bathroom,
        RoomType::DiningRoom,
        RoomType::ChildRoom,
        RoomType::StudyRoom,
        RoomType::SecondRoom,
        RoomType::GuestRoom,
        RoomType::Balcony,
        RoomType::Entrance,
        RoomType::Storage,
        RoomType::WallIn,
        RoomType::External,
        RoomType::ExteriorWall,
    ];

    /// Types that appear as rooms in adjacency graphs.
    pub const GENERATABLE: [RoomType; 13] = [
        RoomType::LivingRoom,
        RoomType::MasterRoom,
        RoomType::Kitchen,
        RoomType::Bathroom,
        RoomType::DiningRoom,
        RoomType::ChildRoom,
        RoomType::StudyRoom,
        RoomType::SecondRoom,
        RoomType::GuestRoom,
        RoomType::Balcony,
        RoomType::Entrance,
        RoomType::Storage,
        RoomType::WallIn,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            RoomType::LivingRoom => "LivingRoom",
            RoomType::MasterRoom => "MasterRoom",
            RoomType::Kitchen => "Kitchen",
            RoomType::Bathroom => "Bathroom",
            RoomType::DiningRoom => "DiningRoom",
            RoomType::ChildRoom => "ChildRoom",
            RoomType::StudyRoom => "StudyRoom",
            RoomType::SecondRoom => "SecondRoom",
            RoomType::GuestRoom => "GuestRoom",
            RoomType::Balcony => "Balcony",
            RoomType::Entrance => "Entrance",
            RoomType::Storage => "Storage",
            RoomType::WallIn => "Wall-in",
            RoomType::External => "External",
            RoomType::ExteriorWall => "ExteriorWall",
        }
    }

    /// Rooms kept whenever constraints are dropped.
    pub fn is_protected(self) -> bool {
        matches!(self, RoomType::LivingRoom | RoomType::MasterRoom | RoomType::Kitchen)
    }
}

impl fmt::Display for RoomType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RoomType {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RoomType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| DataError::invalid("type", format!("unknown room type `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSpec {
    pub id: u32,
    #[serde(rename = "type")]
    pub room_type: RoomType,
    pub known: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<GridLocation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
}

impl RoomSpec {
    /// Room with known attributes derived from its ground-truth box.
    pub fn from_box(id: u32, room_type: RoomType, bbox: BBox, grid_k: u32) -> Self {
        RoomSpec {
            id,
            room_type,
            known: true,
            location: Some(location_cell(&bbox, grid_k)),
            size: Some(bbox.normalized_size()),
            bbox: Some(bbox),
        }
    }

    /// Room described only by its type.
    pub fn type_only(id: u32, room_type: RoomType) -> Self {
        RoomSpec { id, room_type, known: false, location: None, size: None, bbox: None }
    }
}

/// Typed adjacency `<s, rel, o>` between room ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub s: u32,
    pub o: u32,
    pub rel: RelationType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloorplanSpec {
    pub version: u32,
    pub canvas: Canvas,
    pub boundary: RectPolygon,
    pub rooms: Vec<RoomSpec>,
    pub edges: Vec<EdgeSpec>,
    /// Where the plan came from, e.g. `synthetic:42` or `imported`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl FloorplanSpec {
    pub fn new(canvas: Canvas, boundary: RectPolygon, rooms: Vec<RoomSpec>, edges: Vec<EdgeSpec>) -> Self {
        FloorplanSpec { version: FORMAT_VERSION, canvas, boundary, rooms, edges, source: None }
    }

    pub fn room_count(&self) -> usize {
        self.rooms.len()
    }

    /// Map from room id to its position in `rooms`.
    pub fn index_of(&self) -> HashMap<u32, usize> {
        self.rooms.iter().enumerate().map(|(i, r)| (r.id, i)).collect()
    }

    /// Edges as `(subject index, object index, relation)`.
    pub fn indexed_edges(&self) -> Result<Vec<(usize, usize, RelationType)>, DataError> {
        let idx = self.index_of();
        self.edges
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let s = *idx.get(&e.s).ok_or_else(|| DataError::dangling(k, "s", e.s))?;
                let o = *idx.get(&e.o).ok_or_else(|| DataError::dangling(k, "o", e.o))?;
                Ok((s, o, e.rel))
            })
            .collect()
    }

    pub fn gt_boxes(&self) -> Option<Vec<BBox>> {
        self.rooms.iter().map(|r| r.bbox).collect()
    }

    pub fn room_types(&self) -> Vec<RoomType> {
        self.rooms.iter().map(|r| r.room_type).collect()
    }

    /// Structural checks shared by stored plans and inference requests.
    pub fn validate(&self, grid_k: u32) -> Result<(), DataError> {
        if self.version != FORMAT_VERSION {
            return Err(DataError::invalid("version", format!("unsupported version {}", self.version)));
        }
        if self.canvas.w == 0 || self.canvas.h == 0 {
            return Err(DataError::invalid("canvas", "canvas must be non-empty"));
        }
        if self.rooms.is_empty() {
            return Err(DataError::invalid("rooms", "at least one room is required"));
        }
        let mut seen = HashMap::new();
        for (i, r) in self.rooms.iter().enumerate() {
            if let Some(prev) = seen.insert(r.id, i) {
                return Err(DataError::invalid(format!("rooms[{i}].id"), format!("duplicate id {} (also rooms[{prev}])", r.id)));
            }
            if r.known != (r.location.is_some() && r.size.is_some()) {
                return Err(DataError::invalid(
                    format!("rooms[{i}]"),
                    "known rooms need location and size; unknown rooms must omit both",
                ));
            }
            if !r.known && (r.location.is_some() || r.size.is_some()) {
                return Err(DataError::invalid(format!("rooms[{i}]"), "unknown room carries attributes"));
            }
            if let Some(loc) = r.location {
                if !loc.is_valid(grid_k) {
                    return Err(DataError::invalid(
                        format!("rooms[{i}].location"),
                        format!("cell {} outside a {grid_k}x{grid_k} grid", loc.0),
                    ));
                }
            }
            if let Some(size) = r.size {
                if !(0.0..=1.0).contains(&size) {
                    return Err(DataError::invalid(format!("rooms[{i}].size"), format!("size {size} outside [0,1]")));
                }
            }
        }
        for (k, e) in self.edges.iter().enumerate() {
            if !seen.contains_key(&e.s) {
                return Err(DataError::dangling(k, "s", e.s));
            }
            if !seen.contains_key(&e.o) {
                return Err(DataError::dangling(k, "o", e.o));
            }
            if e.s == e.o {
                return Err(DataError::Semantic { path: format!("edges[{k}]"), message: "self-loop edge".into() });
            }
        }
        Ok(())
    }

    /// Ground-truth consistency: boxes inside the boundary's enclosing box,
    /// attributes and edge labels agreeing with the boxes.
    pub fn validate_ground_truth(&self, grid_k: u32) -> Result<(), DataError> {
        self.validate(grid_k)?;
        let hull = self.boundary.bounding_box();
        const TOL: f64 = 1e-9;
        for (i, r) in self.rooms.iter().enumerate() {
            let Some(b) = r.bbox else { continue };
            if b.x_min < hull.x_min - TOL || b.y_min < hull.y_min - TOL || b.x_max > hull.x_max + TOL || b.y_max > hull.y_max + TOL {
                return Err(DataError::invalid(format!("rooms[{i}].bbox"), "box leaves the boundary's enclosing box"));
            }
            if r.known {
                if r.location != Some(location_cell(&b, grid_k)) {
                    return Err(DataError::invalid(format!("rooms[{i}].location"), "location disagrees with bbox"));
                }
                if (r.size.unwrap_or(-1.0) - b.normalized_size()).abs() > TOL {
                    return Err(DataError::invalid(format!("rooms[{i}].size"), "size disagrees with bbox"));
                }
            }
        }
        let idx = self.index_of();
        for (k, e) in self.edges.iter().enumerate() {
            let (Some(bs), Some(bo)) = (self.rooms[idx[&e.s]].bbox, self.rooms[idx[&e.o]].bbox) else {
                continue;
            };
            let actual = classify_relation(&bs, &bo).map_err(|err| DataError::invalid(format!("edges[{k}]"), err.to_string()))?;
            if actual != e.rel {
                return Err(DataError::invalid(
                    format!("edges[{k}].rel"),
                    format!("labelled {} but boxes are {}", e.rel, actual),
                ));
            }
        }
        Ok(())
    }

    /// Copy with ground-truth boxes removed, as sent to inference.
    pub fn without_ground_truth(&self) -> FloorplanSpec {
        let mut spec = self.clone();
        for r in &mut spec.rooms {
            r.bbox = None;
        }
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn room_type_names() {
        assert_eq!(RoomType::ALL.len(), RoomType::COUNT);
        for t in RoomType::ALL {
            assert_eq!(t.name().parse::<RoomType>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{}\"", t.name()));
        }
        assert!("Garage".parse::<RoomType>().is_err());
        assert!(RoomType::GENERATABLE.iter().all(|t| !matches!(t, RoomType::External | RoomType::ExteriorWall)));
    }
}
