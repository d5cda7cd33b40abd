use std::sync::Arc;

use crate::factorgraph::FactorGraph;
use crate::neural::{NeuralError, Scalar, Segments, Tensor};

/// Several factor graphs merged into one disjoint graph.
///
/// Edges run factor by factor. Each factor reduces its incoming messages in
/// ascending variable order and each variable in ascending factor order, so
/// the order in which a factor lists its neighbours never matters.
#[derive(Debug, Clone)]
pub struct GraphBatch<T> {
    pub var_features: Tensor<T>,
    pub fac_features: Tensor<T>,
    pub edge_factor: Arc<[usize]>,
    pub edge_variable: Arc<[usize]>,
    pub factor_segments: Arc<Segments>,
    pub variable_segments: Arc<Segments>,
    /// First variable row of each graph, plus the total.
    pub var_offsets: Vec<usize>,
}

impl<T: Scalar> GraphBatch<T> {
    pub fn new(graphs: &[&FactorGraph]) -> Result<Self, NeuralError> {
        let first = graphs.first().ok_or(NeuralError::EmptyRows)?;
        let dv = first.variables.first().map_or(0, |v| v.feature.len());
        let df = first.factors.first().map_or(0, |f| f.feature.len());
        let nv: usize = graphs.iter().map(|g| g.variables.len()).sum();
        let nf: usize = graphs.iter().map(|g| g.factors.len()).sum();
        let mut vfeat = Vec::with_capacity(nv * dv);
        let mut ffeat = Vec::with_capacity(nf * df);
        let mut edge_factor = Vec::new();
        let mut edge_variable = Vec::new();
        let mut var_offsets = vec![0];
        let (mut v0, mut f0) = (0, 0);
        for g in graphs {
            for v in &g.variables {
                if v.feature.len() != dv {
                    return Err(NeuralError::Shape("variable feature widths differ across graphs".into()));
                }
                vfeat.extend(v.feature.iter().map(|x| T::from_f64(*x)));
            }
            for (c, f) in g.factors.iter().enumerate() {
                if f.feature.len() != df {
                    return Err(NeuralError::Shape("factor feature widths differ across graphs".into()));
                }
                ffeat.extend(f.feature.iter().map(|x| T::from_f64(*x)));
                for &v in &f.vars {
                    if v >= g.variables.len() {
                        return Err(NeuralError::Shape(format!("edge to missing variable {v}")));
                    }
                    edge_factor.push(f0 + c);
                    edge_variable.push(v0 + v);
                }
            }
            v0 += g.variables.len();
            f0 += g.factors.len();
            var_offsets.push(v0);
        }

        let mut by_factor: Vec<Vec<usize>> = vec![Vec::new(); nf];
        let mut by_variable: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for e in 0..edge_factor.len() {
            by_factor[edge_factor[e]].push(e);
            by_variable[edge_variable[e]].push(e);
        }
        for grp in &mut by_factor {
            grp.sort_by_key(|&e| (edge_variable[e], e));
        }
        for grp in &mut by_variable {
            grp.sort_by_key(|&e| (edge_factor[e], e));
        }

        Ok(GraphBatch {
            var_features: Tensor::from_vec(nv, dv, vfeat)?,
            fac_features: Tensor::from_vec(nf, df, ffeat)?,
            edge_factor: edge_factor.into(),
            edge_variable: edge_variable.into(),
            factor_segments: Arc::new(Segments::from_groups(&by_factor)),
            variable_segments: Arc::new(Segments::from_groups(&by_variable)),
            var_offsets,
        })
    }

    pub fn graph_count(&self) -> usize {
        self.var_offsets.len() - 1
    }

    pub fn variable_count(&self) -> usize {
        *self.var_offsets.last().expect("offsets start at zero")
    }

    pub fn edge_count(&self) -> usize {
        self.edge_factor.len()
    }

    /// Splits per-variable values back into one vector per graph.
    pub fn split_rows(&self, flat: &[f64]) -> Vec<Vec<f64>> {
        self.var_offsets.windows(2).map(|w| flat[w[0]..w[1]].to_vec()).collect()
    }
}
