use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{train, EpochLog, MetricsReport, PipelineError, TrainConfig};
use crate::data::Dataset;
use crate::fgnn::ModelConfig;
use crate::neural::AggregatorMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantGroup {
    Factors,
    Relations,
    Boundary,
    Aggregators,
}

impl FromStr for VariantGroup {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "factors" => Ok(VariantGroup::Factors),
            "relations" => Ok(VariantGroup::Relations),
            "boundary" => Ok(VariantGroup::Boundary),
            "aggregators" => Ok(VariantGroup::Aggregators),
            other => Err(format!("unknown variant group '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub model: ModelConfig,
}

/// The base model plus one variant per removed component in each group.
pub fn standard_variants(base: &ModelConfig, groups: &[VariantGroup], include_full: bool) -> Vec<Variant> {
    let mut out = Vec::new();
    let mut add = |name: &str, f: &dyn Fn(&mut ModelConfig)| {
        let mut m = *base;
        f(&mut m);
        out.push(Variant { name: name.to_string(), model: m });
    };
    if include_full {
        add("full", &|_| {});
    }
    for g in groups {
        match g {
            VariantGroup::Factors => {
                add("w/o box factors", &|m| m.graph.box_factors = false);
                add("w/o relation factors", &|m| m.graph.relation_factors = false);
                add("w/o boundary factors", &|m| m.graph.boundary_factors = false);
                add("w/o complete factor", &|m| m.graph.complete_factor = false);
            }
            VariantGroup::Relations => {
                add("w/o inside, surrounding", &|m| m.graph.relation_groups.containment = false);
                add("w/o left, right", &|m| m.graph.relation_groups.horizontal = false);
                add("w/o above, below", &|m| m.graph.relation_groups.vertical = false);
                add("w/o diagonal relations", &|m| m.graph.relation_groups.diagonal = false);
            }
            VariantGroup::Boundary => {
                add("w/o distance feature", &|m| m.graph.corner_distances = false);
                add("w/o surrounding feature", &|m| m.graph.corner_probes = false);
            }
            VariantGroup::Aggregators => {
                for mode in [AggregatorMode::Max, AggregatorMode::Sum, AggregatorMode::Mean] {
                    add(&format!("{} aggregator", mode.name().to_uppercase()), &move |m| m.aggregator = mode);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub best_epoch: usize,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn get(&self, variant: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<26} {:>9} {:>9} {:>9} {:>9} {:>9}", "variant", "iou_mac", "iou_mic", "pix_acc", "rel_acc", "loc_acc");
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                s,
                "{:<26} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
                r.variant, m.box_iou_macro, m.box_iou_micro, m.pixel_accuracy, m.relation_acc, m.location_acc
            );
        }
        s
    }
}

/// Trains every variant with the same data, seed and schedule and reports
/// validation metrics of each variant's best epoch.
pub fn run_ablation(
    ds: &Dataset,
    base: &TrainConfig,
    variants: &[Variant],
    mut progress: impl FnMut(&str, &EpochLog),
) -> Result<AblationTable, PipelineError> {
    let mut table = AblationTable::default();
    for v in variants {
        let cfg = TrainConfig { model: v.model, ..*base };
        let out = train(ds, &cfg, |log| progress(&v.name, log))?;
        let metrics = out.history[out.best_epoch]
            .val
            .clone()
            .ok_or_else(|| PipelineError::Config("ablation needs a validation split".into()))?;
        table.rows.push(AblationRow { variant: v.name.clone(), best_epoch: out.best_epoch, metrics });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_lists() {
        let base = ModelConfig::default();
        let v = standard_variants(&base, &[VariantGroup::Factors], true);
        assert_eq!(v.len(), 5);
        assert!(!v[3].model.graph.boundary_factors && v[3].model.graph.box_factors);
        let all = standard_variants(&base, &[VariantGroup::Factors, VariantGroup::Relations, VariantGroup::Boundary, VariantGroup::Aggregators], false);
        assert_eq!(all.len(), 13);
        assert_eq!(all[12].model.aggregator, AggregatorMode::Mean);
        assert_eq!("boundary".parse::<VariantGroup>().unwrap(), VariantGroup::Boundary);
    }
}
