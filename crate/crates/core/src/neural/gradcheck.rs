use rand::Rng;
use serde::Serialize;

use super::{Gradients, NeuralError, ParamId, ParamSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub probes: Vec<Probe>,
    pub max_rel_error: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Below this magnitude gradients are compared absolutely.
const FLOOR: f64 = 1e-6;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FLOOR)
}

/// `count` coordinates drawn uniformly over all parameter scalars.
pub fn random_probes<R: Rng>(params: &ParamSet<f64>, count: usize, rng: &mut R) -> Vec<(ParamId, usize)> {
    let total = params.numel();
    (0..count)
        .map(|_| {
            let mut k = rng.gen_range(0..total);
            for id in params.ids() {
                let n = params.get(id).len();
                if k < n {
                    return (id, k);
                }
                k -= n;
            }
            unreachable!("index within total")
        })
        .collect()
}

/// Compares `analytic` with central differences of `loss` at each probe.
pub fn finite_diff_check<F>(
    params: &ParamSet<f64>,
    analytic: &Gradients<f64>,
    probes: &[(ParamId, usize)],
    step: f64,
    tol: f64,
    mut loss: F,
) -> Result<GradCheckReport, NeuralError>
where
    F: FnMut(&ParamSet<f64>) -> Result<f64, NeuralError>,
{
    let mut work = params.clone();
    let mut out = Vec::with_capacity(probes.len());
    for &(id, index) in probes {
        let orig = params.get(id).data()[index];
        work.get_mut(id).data_mut()[index] = orig + step;
        let up = loss(&work)?;
        work.get_mut(id).data_mut()[index] = orig - step;
        let down = loss(&work)?;
        work.get_mut(id).data_mut()[index] = orig;
        let numeric = (up - down) / (2.0 * step);
        let a = analytic.get(id).data()[index];
        out.push(Probe { param: params.name(id).to_string(), index, analytic: a, numeric, rel_error: relative_error(a, numeric) });
    }
    let max_rel_error = out.iter().map(|p| p.rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport { probes: out, max_rel_error, tol, passed: max_rel_error < tol })
}
