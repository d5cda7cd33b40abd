use serde::{Deserialize, Serialize};

use super::{CoordKind, FactorKind};
use crate::data::{FloorplanSpec, RoomSpec, RoomType};
use crate::geometry::CornerFeature;

/// Offsets of the blocks inside variable and factor feature vectors.
///
/// Variable: `type[15] ++ location[K*K] ++ size[1] ++ kind[4] ++ known[1]`.
/// Factor: `kind[13] ++ type[15] ++ location[K*K] ++ size[1] ++ corner[10]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub grid_k: u32,
}

impl FeatureLayout {
    pub fn new(grid_k: u32) -> Self {
        FeatureLayout { grid_k }
    }

    pub fn cells(&self) -> usize {
        (self.grid_k * self.grid_k) as usize
    }

    /// Width of the type/location/size block shared by variables and box factors.
    pub fn room_block_len(&self) -> usize {
        RoomType::COUNT + self.cells() + 1
    }

    pub fn variable_len(&self) -> usize {
        self.room_block_len() + 4 + 1
    }

    pub fn factor_len(&self) -> usize {
        FactorKind::COUNT + self.room_block_len() + CornerFeature::LEN
    }

    fn write_room(&self, room: &RoomSpec, out: &mut [f64]) {
        out[room.room_type.index()] = 1.0;
        if room.known {
            if let Some(loc) = room.location.filter(|l| l.is_valid(self.grid_k)) {
                out[RoomType::COUNT + loc.0 as usize] = 1.0;
            }
            out[RoomType::COUNT + self.cells()] = room.size.unwrap_or(0.0);
        }
    }
}

pub fn variable_feature(room: &RoomSpec, kind: CoordKind, layout: &FeatureLayout) -> Vec<f64> {
    let mut out = vec![0.0; layout.variable_len()];
    let base = layout.room_block_len();
    layout.write_room(room, &mut out[..base]);
    out[base + kind.index()] = 1.0;
    out[base + 4] = if room.known { 1.0 } else { 0.0 };
    out
}

/// `corner` is required for boundary factors and ignored otherwise.
pub fn factor_feature(kind: &FactorKind, spec: &FloorplanSpec, corner: Option<&CornerFeature>, layout: &FeatureLayout) -> Vec<f64> {
    let mut out = vec![0.0; layout.factor_len()];
    out[kind.kind_index()] = 1.0;
    let base = FactorKind::COUNT;
    match kind {
        FactorKind::Box { room } => layout.write_room(&spec.rooms[*room], &mut out[base..base + layout.room_block_len()]),
        FactorKind::Boundary { .. } => {
            if let Some(cf) = corner {
                out[base + layout.room_block_len()..].copy_from_slice(&cf.0);
            }
        }
        FactorKind::Relation { .. } | FactorKind::Complete => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorgraph::{build_factor_graph, GraphConfig};
    use crate::geometry::{corner_features, BBox, Canvas, GridLocation, RectPolygon, RelationType};

    fn kitchen() -> RoomSpec {
        RoomSpec {
            id: 0,
            room_type: RoomType::Kitchen,
            known: true,
            location: Some(GridLocation(12)),
            size: Some(0.1),
            bbox: None,
        }
    }

    #[test]
    fn lengths() {
        let l = FeatureLayout::new(5);
        assert_eq!(l.variable_len(), 46);
        assert_eq!(l.factor_len(), 64);
    }

    #[test]
    fn kitchen_variable() {
        let l = FeatureLayout::new(5);
        let f = variable_feature(&kitchen(), CoordKind::XMin, &l);
        let mut expect = vec![0.0; 46];
        expect[RoomType::Kitchen.index()] = 1.0;
        expect[15 + 12] = 1.0;
        expect[40] = 0.1;
        expect[41] = 1.0;
        expect[45] = 1.0;
        assert_eq!(f, expect);
        assert_eq!(RoomType::Kitchen.index(), 2);
    }

    #[test]
    fn stripped_room_keeps_type_only() {
        let l = FeatureLayout::new(5);
        let f = variable_feature(&RoomSpec::type_only(0, RoomType::Kitchen), CoordKind::YMax, &l);
        let mut expect = vec![0.0; 46];
        expect[2] = 1.0;
        expect[41 + 3] = 1.0;
        assert_eq!(f, expect);
    }

    #[test]
    fn kinds_differ_only_in_kind_block() {
        let l = FeatureLayout::new(5);
        let a = variable_feature(&kitchen(), CoordKind::XMin, &l);
        let b = variable_feature(&kitchen(), CoordKind::YMin, &l);
        let diff: Vec<usize> = (0..46).filter(|&i| a[i] != b[i]).collect();
        assert_eq!(diff, vec![41, 43]);
    }

    #[test]
    fn factor_blocks() {
        let boundary = RectPolygon::rectangle(&BBox::new(0.1, 0.1, 0.9, 0.9).unwrap()).unwrap();
        let spec = FloorplanSpec::new(Canvas::default(), boundary.clone(), vec![kitchen()], vec![]);
        let l = FeatureLayout::new(5);

        let c = factor_feature(&FactorKind::Complete, &spec, None, &l);
        assert_eq!(c.iter().sum::<f64>(), 1.0);
        assert_eq!(c[12], 1.0);

        let rel = |r: RelationType| FactorKind::Relation { rel: r, s: 0, o: 0, pair: (CoordKind::XMax, CoordKind::XMin), edge: 0 };
        let a = factor_feature(&rel(RelationType::LeftOf), &spec, None, &l);
        let b = factor_feature(&rel(RelationType::RightOf), &spec, None, &l);
        let diff: Vec<usize> = (0..64).filter(|&i| a[i] != b[i]).collect();
        assert!(diff.iter().all(|&i| i < 13));

        let mask = boundary.rasterize(spec.canvas);
        let cfs = corner_features(&boundary, &mask, 3.0 / 256.0);
        let g = build_factor_graph(&spec, &GraphConfig::default()).unwrap();
        let bf: Vec<_> = g.factors.iter().filter(|f| matches!(f.kind, FactorKind::Boundary { .. })).collect();
        assert_eq!(bf.len(), 4);
        for (f, cf) in bf.iter().zip(&cfs) {
            assert_eq!(f.feature[11], 1.0);
            assert!(f.feature[13..54].iter().all(|v| *v == 0.0));
            assert_eq!(&f.feature[54..], &cf.0);
        }
        let bx = &g.factors[0];
        assert_eq!(bx.feature[0], 1.0);
        assert_eq!(&bx.feature[13..54], &variable_feature(&kitchen(), CoordKind::XMin, &l)[..41]);
    }
}
