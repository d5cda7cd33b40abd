use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{BBox, GeometryError};

/// Spatial relation of a subject room `s` with respect to an object room `o`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationType {
    LeftOf,
    RightOf,
    Above,
    Below,
    LeftAbove,
    RightAbove,
    LeftBelow,
    RightBelow,
    Inside,
    Surrounding,
}

impl RelationType {
    pub const ALL: [RelationType; 10] = [
        RelationType::LeftOf,
        RelationType::RightOf,
        RelationType::Above,
        RelationType::Below,
        RelationType::LeftAbove,
        RelationType::RightAbove,
        RelationType::LeftBelow,
        RelationType::RightBelow,
        RelationType::Inside,
        RelationType::Surrounding,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            RelationType::LeftOf => "left-of",
            RelationType::RightOf => "right-of",
            RelationType::Above => "above",
            RelationType::Below => "below",
            RelationType::LeftAbove => "left-above",
            RelationType::RightAbove => "right-above",
            RelationType::LeftBelow => "left-below",
            RelationType::RightBelow => "right-below",
            RelationType::Inside => "inside",
            RelationType::Surrounding => "surrounding",
        }
    }

    /// Relation of `o` with respect to `s` when `self` relates `s` to `o`.
    pub fn inverse(self) -> Self {
        use RelationType::*;
        match self {
            LeftOf => RightOf,
            RightOf => LeftOf,
            Above => Below,
            Below => Above,
            LeftAbove => RightBelow,
            RightBelow => LeftAbove,
            RightAbove => LeftBelow,
            LeftBelow => RightAbove,
            Inside => Surrounding,
            Surrounding => Inside,
        }
    }

    /// Mirror image under a left/right flip of the canvas.
    pub fn flip_horizontal(self) -> Self {
        use RelationType::*;
        match self {
            LeftOf => RightOf,
            RightOf => LeftOf,
            LeftAbove => RightAbove,
            RightAbove => LeftAbove,
            LeftBelow => RightBelow,
            RightBelow => LeftBelow,
            other => other,
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelationType {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationType::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| GeometryError::UnknownRelation(s.to_string()))
    }
}

/// tan(22.5 deg): sector half-width around each axis.
const SECTOR_SLOPE: f64 = std::f64::consts::SQRT_2 - 1.0;

/// Classifies how `s` sits relative to `o`.
///
/// Containment wins first. Otherwise the centroid offset `c(s) - c(o)` is
/// binned into eight 45-degree sectors centred on the axes and diagonals; an
/// offset exactly on a sector border resolves to the axis relation. Concentric
/// boxes without containment fall back to area, then width.
pub fn classify_relation(s: &BBox, o: &BBox) -> Result<RelationType, GeometryError> {
    use RelationType::*;
    if s == o {
        return Err(GeometryError::IdenticalBoxes);
    }
    if s.contains(o) {
        return Ok(Surrounding);
    }
    if o.contains(s) {
        return Ok(Inside);
    }
    let (cs, co) = (s.centroid(), o.centroid());
    let dx = cs.x - co.x;
    let dy = cs.y - co.y;
    if dx == 0.0 && dy == 0.0 {
        let bigger = s.area() > o.area() || (s.area() == o.area() && s.width() > o.width());
        return Ok(if bigger { Surrounding } else { Inside });
    }
    let (ax, ay) = (dx.abs(), dy.abs());
    let left = dx < 0.0;
    let up = dy < 0.0;
    Ok(if ay <= SECTOR_SLOPE * ax {
        if left {
            LeftOf
        } else {
            RightOf
        }
    } else if ax <= SECTOR_SLOPE * ay {
        if up {
            Above
        } else {
            Below
        }
    } else {
        match (left, up) {
            (true, true) => LeftAbove,
            (false, true) => RightAbove,
            (true, false) => LeftBelow,
            (false, false) => RightBelow,
        }
    })
}

/// `true` iff `classify_relation(s, o) == rel`; identical boxes satisfy nothing.
pub fn relation_satisfied(s: &BBox, o: &BBox, rel: RelationType) -> bool {
    classify_relation(s, o).map(|r| r == rel).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    /// Box of half-size 0.05 centred at the given point.
    fn at(cx: f64, cy: f64) -> BBox {
        b(cx - 0.05, cy - 0.05, cx + 0.05, cy + 0.05)
    }

    /// Offset at `deg` (counter-clockwise, y up) and radius 0.3 from (0.5, 0.5).
    fn at_angle(deg: f64) -> BBox {
        let r = deg.to_radians();
        at(0.5 + 0.3 * r.cos(), 0.5 - 0.3 * r.sin())
    }

    #[test]
    fn containment_cases() {
        let s = b(0.2, 0.2, 0.8, 0.8);
        let o = b(0.0, 0.0, 1.0, 1.0);
        assert_eq!(classify_relation(&s, &o).unwrap(), RelationType::Inside);
        assert_eq!(classify_relation(&o, &s).unwrap(), RelationType::Surrounding);
    }

    #[test]
    fn axis_and_diagonal_cases() {
        let s = b(0.0, 0.0, 10.0 / 22.0, 10.0 / 22.0);
        let o = b(12.0 / 22.0, 0.0, 1.0, 10.0 / 22.0);
        assert_eq!(classify_relation(&s, &o).unwrap(), RelationType::LeftOf);
        assert_eq!(classify_relation(&at(0.3, 0.3), &at(0.6, 0.6)).unwrap(), RelationType::LeftAbove);
    }

    #[test]
    fn identical_boxes_are_rejected() {
        let a = at(0.5, 0.5);
        assert!(classify_relation(&a, &a).is_err());
        assert!(RelationType::ALL.iter().all(|r| !relation_satisfied(&a, &a, *r)));
    }

    #[test]
    fn sector_borders() {
        let o = at(0.5, 0.5);
        // 44 and 46 degrees share the diagonal sector.
        assert!(relation_satisfied(&at_angle(44.0), &o, RelationType::RightAbove));
        assert!(relation_satisfied(&at_angle(46.0), &o, RelationType::RightAbove));
        // The 22.5 degree border separates the axis and diagonal sectors.
        assert_eq!(classify_relation(&at_angle(22.0), &o).unwrap(), RelationType::RightOf);
        assert_eq!(classify_relation(&at_angle(23.0), &o).unwrap(), RelationType::RightAbove);
        assert_eq!(classify_relation(&at_angle(68.0), &o).unwrap(), RelationType::Above);
    }

    #[test]
    fn exact_border_resolves_to_axis() {
        // dy == SECTOR_SLOPE * dx exactly when built from the constant.
        let o = b(0.4, 0.4, 0.5, 0.5);
        let dx = 0.2;
        let dy = SECTOR_SLOPE * dx;
        let cs = o.centroid();
        let s = b(cs.x + dx - 0.05, cs.y - dy - 0.05, cs.x + dx + 0.05, cs.y - dy + 0.05);
        let (sx, sy) = (s.centroid().x - cs.x, s.centroid().y - cs.y);
        let expected = if sy.abs() <= SECTOR_SLOPE * sx.abs() { RelationType::RightOf } else { RelationType::RightAbove };
        assert_eq!(classify_relation(&s, &o).unwrap(), expected);
    }

    #[test]
    fn swapped_boxes_fail_left_of() {
        let l = b(0.0, 0.0, 0.5, 1.0);
        let r = b(0.5, 0.0, 1.0, 1.0);
        assert!(relation_satisfied(&l, &r, RelationType::LeftOf));
        assert!(!relation_satisfied(&r, &l, RelationType::LeftOf));
    }

    #[test]
    fn names_round_trip() {
        for r in RelationType::ALL {
            assert_eq!(r.name().parse::<RelationType>().unwrap(), r);
            assert_eq!(r.inverse().inverse(), r);
            assert_ne!(r.inverse(), r);
        }
        assert!("north-of".parse::<RelationType>().is_err());
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (0u32..=64, 0u32..=64, 0u32..=64, 0u32..=64).prop_map(|(a, b_, c, d)| {
            let (x0, x1) = (a.min(c) as f64 / 64.0, a.max(c) as f64 / 64.0);
            let (y0, y1) = (b_.min(d) as f64 / 64.0, b_.max(d) as f64 / 64.0);
            BBox::new(x0, y0, x1, y1).unwrap()
        })
    }

    proptest! {
        #[test]
        fn relations_are_inverse_pairs(s in arb_box(), o in arb_box()) {
            prop_assume!(s != o);
            let fwd = classify_relation(&s, &o).unwrap();
            let back = classify_relation(&o, &s).unwrap();
            prop_assert_eq!(fwd.inverse(), back);
        }
    }
}
