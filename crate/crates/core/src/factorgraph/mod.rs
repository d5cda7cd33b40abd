//! Bipartite factor graphs built from floorplan specs.
//!
//! Every room contributes four coordinate variables. Factors tie them together:
//! one box factor per room, relation factors per constraint edge, one boundary
//! factor per outline corner, and a single complete factor over everything.

mod features;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use features::{factor_feature, variable_feature, FeatureLayout};

use crate::data::{DataError, FloorplanSpec, RoomType};
use crate::geometry::{corner_features, Canvas, CornerFeature, RelationType, DEFAULT_EPSILON, DEFAULT_GRID_K};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordKind {
    XMin,
    XMax,
    YMin,
    YMax,
}

impl CoordKind {
    pub const ALL: [CoordKind; 4] = [CoordKind::XMin, CoordKind::XMax, CoordKind::YMin, CoordKind::YMax];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Variable id of coordinate `kind` of room `room`.
pub fn variable_id(room: usize, kind: CoordKind) -> usize {
    room * 4 + kind.index()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableRef {
    pub room: usize,
    pub kind: CoordKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FactorKind {
    Box { room: usize },
    Relation { rel: RelationType, s: usize, o: usize, pair: (CoordKind, CoordKind), edge: usize },
    Boundary { corner: usize },
    Complete,
}

impl FactorKind {
    pub const COUNT: usize = 13;

    /// Position in the factor-kind one-hot: box, the ten relations, boundary, complete.
    pub fn kind_index(&self) -> usize {
        match self {
            FactorKind::Box { .. } => 0,
            FactorKind::Relation { rel, .. } => 1 + rel.index(),
            FactorKind::Boundary { .. } => 11,
            FactorKind::Complete => 12,
        }
    }
}

use CoordKind::{XMax, XMin, YMax, YMin};

const INSIDE: [(CoordKind, CoordKind); 4] = [(XMin, XMin), (YMin, YMin), (XMax, XMax), (YMin, YMax)];
const INSIDE_AMENDED: [(CoordKind, CoordKind); 4] = [(XMin, XMin), (YMin, YMin), (XMax, XMax), (YMax, YMax)];

/// Variable-kind pairs `(subject, object)` linked by one relation factor each.
pub fn relation_factor_templates(rel: RelationType) -> &'static [(CoordKind, CoordKind)] {
    use RelationType::*;
    match rel {
        LeftOf => &[(XMax, XMin)],
        RightOf => &[(XMin, XMax)],
        Above => &[(YMax, YMin)],
        Below => &[(YMin, YMax)],
        LeftAbove => &[(XMax, XMin), (YMax, YMin)],
        RightAbove => &[(XMin, XMax), (YMax, YMin)],
        LeftBelow => &[(XMax, XMin), (YMin, YMax)],
        RightBelow => &[(XMin, XMax), (YMin, YMax)],
        Inside | Surrounding => &INSIDE,
    }
}

/// Templates with the containment rows' last pair optionally replaced by `(y_max, y_max)`.
pub fn templates_for(rel: RelationType, amend_inside: bool) -> &'static [(CoordKind, CoordKind)] {
    match rel {
        RelationType::Inside | RelationType::Surrounding if amend_inside => &INSIDE_AMENDED,
        _ => relation_factor_templates(rel),
    }
}

/// Relation families that can be switched off together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelationGroups {
    pub containment: bool,
    pub horizontal: bool,
    pub vertical: bool,
    pub diagonal: bool,
}

impl Default for RelationGroups {
    fn default() -> Self {
        RelationGroups { containment: true, horizontal: true, vertical: true, diagonal: true }
    }
}

impl RelationGroups {
    pub fn allows(&self, rel: RelationType) -> bool {
        use RelationType::*;
        match rel {
            Inside | Surrounding => self.containment,
            LeftOf | RightOf => self.horizontal,
            Above | Below => self.vertical,
            LeftAbove | RightAbove | LeftBelow | RightBelow => self.diagonal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub box_factors: bool,
    pub relation_factors: bool,
    pub boundary_factors: bool,
    pub complete_factor: bool,
    pub relation_groups: RelationGroups,
    /// Keep the distance block of corner features.
    pub corner_distances: bool,
    /// Keep the mask-probe block of corner features.
    pub corner_probes: bool,
    pub amend_inside_factor: bool,
    /// Build relation factors on edges touching rooms with withheld attributes.
    pub relations_for_unknown: bool,
    pub grid_k: u32,
    pub epsilon: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            box_factors: true,
            relation_factors: true,
            boundary_factors: true,
            complete_factor: true,
            relation_groups: RelationGroups::default(),
            corner_distances: true,
            corner_probes: true,
            amend_inside_factor: false,
            relations_for_unknown: false,
            grid_k: DEFAULT_GRID_K,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl GraphConfig {
    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout::new(self.grid_k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub room: usize,
    pub kind: CoordKind,
    pub feature: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub kind: FactorKind,
    /// Neighbouring variable ids.
    pub vars: Vec<usize>,
    /// Also the feature of every edge leaving this factor.
    pub feature: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorGraph {
    pub canvas: Canvas,
    pub grid_k: u32,
    pub room_types: Vec<RoomType>,
    pub variables: Vec<Variable>,
    pub factors: Vec<Factor>,
}

impl FactorGraph {
    pub fn room_count(&self) -> usize {
        self.room_types.len()
    }

    pub fn edge_count(&self) -> usize {
        self.factors.iter().map(|f| f.vars.len()).sum()
    }

    /// `(factor id, variable id)` pairs in factor order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.factors.iter().enumerate().flat_map(|(c, f)| f.vars.iter().map(move |&v| (c, v)))
    }

    pub fn variable_ref(&self, id: usize) -> VariableRef {
        VariableRef { room: self.variables[id].room, kind: self.variables[id].kind }
    }
}

/// Builds the factor graph of a validated spec.
pub fn build_factor_graph(spec: &FloorplanSpec, cfg: &GraphConfig) -> Result<FactorGraph, DataError> {
    let edges = spec.indexed_edges()?;
    let layout = cfg.layout();
    let n = spec.rooms.len();
    let all: Vec<usize> = (0..4 * n).collect();

    let variables = (0..n)
        .flat_map(|r| CoordKind::ALL.into_iter().map(move |k| (r, k)))
        .map(|(r, k)| Variable { room: r, kind: k, feature: variable_feature(&spec.rooms[r], k, &layout) })
        .collect();

    let mut factors = Vec::new();
    let mut push = |kind: FactorKind, vars: Vec<usize>, corner: Option<&CornerFeature>| {
        let feature = factor_feature(&kind, spec, corner, &layout);
        factors.push(Factor { kind, vars, feature });
    };
    if cfg.box_factors {
        for r in 0..n {
            push(FactorKind::Box { room: r }, (4 * r..4 * r + 4).collect(), None);
        }
    }
    if cfg.relation_factors {
        for (e, &(s, o, rel)) in edges.iter().enumerate() {
            if !cfg.relation_groups.allows(rel) {
                continue;
            }
            if !cfg.relations_for_unknown && !(spec.rooms[s].known && spec.rooms[o].known) {
                continue;
            }
            for &pair in templates_for(rel, cfg.amend_inside_factor) {
                let vars = vec![variable_id(s, pair.0), variable_id(o, pair.1)];
                push(FactorKind::Relation { rel, s, o, pair, edge: e }, vars, None);
            }
        }
    }
    if cfg.boundary_factors {
        let mask = spec.boundary.rasterize(spec.canvas);
        for (k, mut cf) in corner_features(&spec.boundary, &mask, cfg.epsilon).into_iter().enumerate() {
            if !cfg.corner_distances {
                cf.0[2..6].fill(0.0);
            }
            if !cfg.corner_probes {
                cf.0[6..10].fill(0.0);
            }
            push(FactorKind::Boundary { corner: k }, all.clone(), Some(&cf));
        }
    }
    if cfg.complete_factor {
        push(FactorKind::Complete, all.clone(), None);
    }

    Ok(FactorGraph { canvas: spec.canvas, grid_k: cfg.grid_k, room_types: spec.room_types(), variables, factors })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    Arity { factor: usize, expected: usize, found: usize },
    WrongNeighbours { factor: usize },
    DanglingEdge { factor: usize, variable: usize },
    DuplicateEdge { factor: usize, variable: usize },
    FeatureLength { node: String, expected: usize, found: usize },
    UnreachableVariable { variable: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Arity { factor, expected, found } => write!(f, "factor {factor}: arity {found}, expected {expected}"),
            Diagnostic::WrongNeighbours { factor } => write!(f, "factor {factor}: neighbours do not match its kind"),
            Diagnostic::DanglingEdge { factor, variable } => write!(f, "factor {factor}: edge to missing variable {variable}"),
            Diagnostic::DuplicateEdge { factor, variable } => write!(f, "factor {factor}: duplicate edge to variable {variable}"),
            Diagnostic::FeatureLength { node, expected, found } => write!(f, "{node}: feature length {found}, expected {expected}"),
            Diagnostic::UnreachableVariable { variable } => write!(f, "variable {variable} is in no factor"),
        }
    }
}

/// Structural problems with a graph; empty when well formed.
pub fn validate(g: &FactorGraph) -> Vec<Diagnostic> {
    let layout = FeatureLayout::new(g.grid_k);
    let nv = g.variables.len();
    let mut out = Vec::new();
    let mut reached = vec![false; nv];

    for (i, v) in g.variables.iter().enumerate() {
        if v.feature.len() != layout.variable_len() {
            out.push(Diagnostic::FeatureLength { node: format!("variable {i}"), expected: layout.variable_len(), found: v.feature.len() });
        }
    }
    for (c, f) in g.factors.iter().enumerate() {
        if f.feature.len() != layout.factor_len() {
            out.push(Diagnostic::FeatureLength { node: format!("factor {c}"), expected: layout.factor_len(), found: f.feature.len() });
        }
        let mut seen = std::collections::HashSet::new();
        for &v in &f.vars {
            if v >= nv {
                out.push(Diagnostic::DanglingEdge { factor: c, variable: v });
                continue;
            }
            if !seen.insert(v) {
                out.push(Diagnostic::DuplicateEdge { factor: c, variable: v });
            }
            reached[v] = true;
        }
        let expected: Vec<usize> = match f.kind {
            FactorKind::Box { room } => (4 * room..4 * room + 4).collect(),
            FactorKind::Relation { s, o, pair, .. } => vec![variable_id(s, pair.0), variable_id(o, pair.1)],
            FactorKind::Boundary { .. } | FactorKind::Complete => (0..nv).collect(),
        };
        if f.vars.len() != expected.len() {
            out.push(Diagnostic::Arity { factor: c, expected: expected.len(), found: f.vars.len() });
        } else {
            let mut got = f.vars.clone();
            got.sort_unstable();
            let mut want = expected;
            want.sort_unstable();
            if got != want && seen.len() == got.len() {
                out.push(Diagnostic::WrongNeighbours { factor: c });
            }
        }
    }
    for (v, r) in reached.into_iter().enumerate() {
        if !r {
            out.push(Diagnostic::UnreachableVariable { variable: v });
        }
    }
    out
}
