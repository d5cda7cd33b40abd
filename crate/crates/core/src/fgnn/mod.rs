//! Message passing over factor graphs and the box readout.

mod batch;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use batch::GraphBatch;

use crate::factorgraph::{CoordKind, FactorGraph, FactorKind, GraphConfig};
use crate::geometry::{BBox, Canvas};
use crate::neural::{
    mlp_apply, AggregatorMode, AggregatorParams, Linear, MlpParams, NeuralError, ParamSet, Precision, Scalar, Tape, Tensor, Var,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub iterations: usize,
    pub hidden: usize,
    /// Share one set of message-passing weights across all rounds.
    pub tied: bool,
    pub aggregator: AggregatorMode,
    /// Feed the factor embeddings computed in the current round to the
    /// factor-to-variable step instead of the previous round's.
    pub refresh_factors: bool,
    /// Skip message passing and read coordinates straight off the projected
    /// input features. Used as a baseline.
    pub readout_only: bool,
    pub precision: Precision,
    pub graph: GraphConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            iterations: 4,
            hidden: 128,
            tied: false,
            aggregator: AggregatorMode::Softmax,
            refresh_factors: false,
            readout_only: false,
            precision: Precision::Single,
            graph: GraphConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.iterations == 0 {
            return Err(NeuralError::Shape("at least one message-passing round is required".into()));
        }
        if self.hidden == 0 {
            return Err(NeuralError::Shape("hidden width must be positive".into()));
        }
        Ok(())
    }
}

/// Weights of one message-passing round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerParams {
    pub vf: MlpParams,
    pub fv: MlpParams,
    pub theta_vf: AggregatorParams,
    pub theta_fv: AggregatorParams,
}

/// Where each weight lives in the parameter set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelLayout {
    pub proj_v: Linear,
    pub proj_f: Linear,
    pub layers: Vec<LayerParams>,
    pub readout: MlpParams,
}

impl ModelLayout {
    pub fn layer(&self, round: usize) -> &LayerParams {
        &self.layers[round.min(self.layers.len() - 1)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub config: ModelConfig,
    pub layout: ModelLayout,
    pub set: ParamSet<T>,
}

impl<T: Scalar> ModelParams<T> {
    /// Kaiming-uniform weights, zero biases and zero aggregator directions.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, NeuralError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = ParamSet::new();
        let fl = config.graph.layout();
        let (h, dv, df) = (config.hidden, fl.variable_len(), fl.factor_len());
        let proj_v = Linear::init(&mut set, "proj_v", dv, h, &mut rng);
        let proj_f = Linear::init(&mut set, "proj_f", df, h, &mut rng);
        let rounds = match (config.readout_only, config.tied) {
            (true, _) => 0,
            (false, true) => 1,
            (false, false) => config.iterations,
        };
        let layers = (0..rounds)
            .map(|l| LayerParams {
                vf: MlpParams::init(&mut set, &format!("layer{l}.vf"), &[2 * h + df, h, h], &mut rng),
                fv: MlpParams::init(&mut set, &format!("layer{l}.fv"), &[2 * h + df, h, h], &mut rng),
                theta_vf: AggregatorParams::init(&mut set, &format!("layer{l}.agg_vf"), h),
                theta_fv: AggregatorParams::init(&mut set, &format!("layer{l}.agg_fv"), h),
            })
            .collect();
        let readout = MlpParams::init(&mut set, "readout", &[h, h, 1], &mut rng);
        Ok(ModelParams { config, layout: ModelLayout { proj_v, proj_f, layers, readout }, set })
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams { config: self.config, layout: self.layout.clone(), set: self.set.cast() }
    }
}

/// Variable and factor embeddings after some number of rounds.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingState {
    pub variables: Var,
    pub factors: Var,
    pub round: usize,
}

fn linear<T: Scalar>(tape: &mut Tape<'_, T>, l: &Linear, x: Var) -> Result<Var, NeuralError> {
    let w = tape.param(l.weight);
    let b = tape.param(l.bias);
    let y = tape.matmul(x, w)?;
    tape.add_row(y, b)
}

/// Initial embeddings: one affine projection each for variable and factor features.
pub fn embed_inputs<T: Scalar>(tape: &mut Tape<'_, T>, layout: &ModelLayout, inputs: &BatchInputs) -> Result<EmbeddingState, NeuralError> {
    Ok(EmbeddingState {
        variables: linear(tape, &layout.proj_v, inputs.var_features)?,
        factors: linear(tape, &layout.proj_f, inputs.fac_features)?,
        round: 0,
    })
}

/// The batch's constant feature tensors once recorded on a tape.
#[derive(Debug, Clone, Copy)]
pub struct BatchInputs {
    pub var_features: Var,
    pub fac_features: Var,
}

impl BatchInputs {
    pub fn record<T: Scalar>(tape: &mut Tape<'_, T>, batch: &GraphBatch<T>) -> Self {
        BatchInputs { var_features: tape.input(batch.var_features.clone()), fac_features: tape.input(batch.fac_features.clone()) }
    }
}

/// `MLP(concat[f_c, v_i, e_ci])` for every edge.
///
/// The first layer is split by input block so the factor and variable parts are
/// multiplied once per node rather than once per edge.
fn edge_messages<T: Scalar>(
    tape: &mut Tape<'_, T>,
    mlp: &MlpParams,
    factors: Var,
    variables: Var,
    inputs: &BatchInputs,
    batch: &GraphBatch<T>,
) -> Result<Var, NeuralError> {
    let h = tape.value(factors).cols();
    let df = tape.value(inputs.fac_features).cols();
    if mlp.input_dim() != 2 * h + df || tape.value(variables).cols() != h {
        return Err(NeuralError::Shape(format!("message MLP expects width {}, inputs give {}", mlp.input_dim(), 2 * h + df)));
    }
    let first = &mlp.layers[0];
    let w = tape.param(first.weight);
    let b = tape.param(first.bias);
    let f_part = tape.matmul_rows(factors, w, 0, h)?;
    let e_part = tape.matmul_rows(inputs.fac_features, w, 2 * h, 2 * h + df)?;
    let fac_term = tape.add(f_part, e_part)?;
    let fac_term = tape.add_row(fac_term, b)?;
    let var_term = tape.matmul_rows(variables, w, h, 2 * h)?;
    let mut x = tape.gather_add(fac_term, batch.edge_factor.clone(), var_term, batch.edge_variable.clone())?;
    for layer in &mlp.layers[1..] {
        x = tape.relu(x)?;
        x = linear(tape, layer, x)?;
    }
    Ok(x)
}

/// One variable-to-factor then factor-to-variable round.
pub fn message_round<T: Scalar>(
    tape: &mut Tape<'_, T>,
    state: EmbeddingState,
    layer: &LayerParams,
    cfg: &ModelConfig,
    inputs: &BatchInputs,
    batch: &GraphBatch<T>,
) -> Result<EmbeddingState, NeuralError> {
    let softmax = cfg.aggregator == AggregatorMode::Softmax;
    let to_factor = edge_messages(tape, &layer.vf, state.factors, state.variables, inputs, batch)?;
    let theta = softmax.then(|| tape.param(layer.theta_vf.theta));
    let factors = tape.segment_aggregate(to_factor, batch.factor_segments.clone(), cfg.aggregator, theta)?;

    let f_used = if cfg.refresh_factors { factors } else { state.factors };
    let to_var = edge_messages(tape, &layer.fv, f_used, state.variables, inputs, batch)?;
    let theta = softmax.then(|| tape.param(layer.theta_fv.theta));
    let variables = tape.segment_aggregate(to_var, batch.variable_segments.clone(), cfg.aggregator, theta)?;
    Ok(EmbeddingState { variables, factors, round: state.round + 1 })
}

/// Raw per-variable coordinates, one row per variable of the batch.
pub fn forward<T: Scalar>(tape: &mut Tape<'_, T>, model: &ModelParams<T>, batch: &GraphBatch<T>) -> Result<Var, NeuralError> {
    let cfg = &model.config;
    cfg.validate()?;
    let inputs = BatchInputs::record(tape, batch);
    let mut state = embed_inputs(tape, &model.layout, &inputs)?;
    if !cfg.readout_only {
        for l in 0..cfg.iterations {
            state = message_round(tape, state, model.layout.layer(l), cfg, &inputs, batch)?;
        }
    }
    mlp_apply(tape, &model.layout.readout, state.variables)
}

/// Inference: coordinates clamped to `[0, 1]`, one vector per graph.
pub fn predict_coords<T: Scalar>(model: &ModelParams<T>, graphs: &[&FactorGraph]) -> Result<Vec<Vec<f64>>, NeuralError> {
    let batch = GraphBatch::new(graphs)?;
    let mut tape = Tape::new(&model.set);
    let out = forward(&mut tape, model, &batch)?;
    let flat: Vec<f64> = tape.value(out).data().iter().map(|v| v.to_f64().clamp(0.0, 1.0)).collect();
    Ok(batch.split_rows(&flat))
}

/// Groups `[x_min, x_max, y_min, y_max]` per room into boxes, swapping reversed
/// pairs and widening anything thinner than a pixel.
pub fn predict_boxes(coords: &[f64], canvas: Canvas) -> Vec<BBox> {
    let fix = |a: f64, b: f64, px: f64| {
        let (lo, hi) = (a.clamp(0.0, 1.0).min(b.clamp(0.0, 1.0)), a.clamp(0.0, 1.0).max(b.clamp(0.0, 1.0)));
        if hi - lo >= px {
            return (lo, hi);
        }
        let mid = 0.5 * (lo + hi);
        let start = (mid - 0.5 * px).clamp(0.0, 1.0 - px);
        (start, start + px)
    };
    coords
        .chunks_exact(4)
        .map(|c| {
            let (x0, x1) = fix(c[CoordKind::XMin.index()], c[CoordKind::XMax.index()], 1.0 / canvas.w as f64);
            let (y0, y1) = fix(c[CoordKind::YMin.index()], c[CoordKind::YMax.index()], 1.0 / canvas.h as f64);
            BBox { x_min: x0, y_min: y0, x_max: x1, y_max: y1 }
        })
        .collect()
}

/// Ground-truth coordinates in variable order.
pub fn target_coords(boxes: &[BBox]) -> Vec<f64> {
    boxes.iter().flat_map(|b| [b.x_min, b.x_max, b.y_min, b.y_max]).collect()
}

/// Families present in a graph; a toggled-off family has no factors.
pub fn factor_families(g: &FactorGraph) -> [bool; 4] {
    let mut out = [false; 4];
    for f in &g.factors {
        let i = match f.kind {
            FactorKind::Box { .. } => 0,
            FactorKind::Relation { .. } => 1,
            FactorKind::Boundary { .. } => 2,
            FactorKind::Complete => 3,
        };
        out[i] = true;
    }
    out
}

/// L1 training loss of `model` on a batch with known targets.
pub fn batch_loss<T: Scalar>(tape: &mut Tape<'_, T>, model: &ModelParams<T>, batch: &GraphBatch<T>, targets: &[f64]) -> Result<Var, NeuralError> {
    let pred = forward(tape, model, batch)?;
    let target = Tensor::from_vec(targets.len(), 1, targets.iter().map(|v| T::from_f64(*v)).collect())?;
    tape.l1_loss(pred, target)
}
