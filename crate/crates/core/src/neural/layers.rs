use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AggregatorMode, MlpParams, NeuralError, ParamId, ParamSet, Scalar, Segments, Tape, Tensor, Var};

/// Learnable direction `theta` scoring rows for the softmax aggregator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatorParams {
    pub theta: ParamId,
    pub dim: usize,
}

impl AggregatorParams {
    /// Zero-initialized, so the aggregator starts out as a plain mean.
    pub fn init<T: Scalar>(params: &mut ParamSet<T>, name: &str, dim: usize) -> Self {
        AggregatorParams { theta: params.add(format!("{name}.theta"), Tensor::zeros(1, dim)), dim }
    }
}

/// Applies the MLP to every row of `x`: affine layers with ReLU in between.
pub fn mlp_apply<T: Scalar>(tape: &mut Tape<'_, T>, p: &MlpParams, x: Var) -> Result<Var, NeuralError> {
    if tape.value(x).cols() != p.input_dim() {
        return Err(NeuralError::Shape(format!("MLP expects width {}, got {}", p.input_dim(), tape.value(x).cols())));
    }
    let mut h = x;
    for (i, layer) in p.layers.iter().enumerate() {
        if i > 0 {
            h = tape.relu(h)?;
        }
        let w = tape.param(layer.weight);
        let b = tape.param(layer.bias);
        h = tape.matmul(h, w)?;
        h = tape.add_row(h, b)?;
    }
    Ok(h)
}

fn rows_tensor<T: Scalar>(rows: &[&[T]]) -> Result<Tensor<T>, NeuralError> {
    if rows.is_empty() {
        return Err(NeuralError::EmptyRows);
    }
    Tensor::from_rows(rows)
}

fn reduce<T: Scalar>(rows: &[&[T]], mode: AggregatorMode, theta: Option<&[T]>) -> Result<Vec<T>, NeuralError> {
    let x = rows_tensor(rows)?;
    let n = x.rows();
    let params = ParamSet::new();
    let mut tape = Tape::new(&params);
    let xv = tape.input(x);
    let tv = theta.map(|t| tape.input(Tensor::row_vector(t.to_vec())));
    let segs = Arc::new(Segments::from_groups(&[(0..n).collect()]));
    let out = tape.segment_aggregate(xv, segs, mode, tv)?;
    Ok(tape.value(out).data().to_vec())
}

/// `sum_i softmax_i(theta . v_i) v_i`, with the maximum score subtracted before
/// exponentiation. Rows are combined in the given order.
pub fn softmax_aggregate<T: Scalar>(rows: &[&[T]], theta: &[T]) -> Result<Vec<T>, NeuralError> {
    reduce(rows, AggregatorMode::Softmax, Some(theta))
}

/// Elementwise max, sum or mean of the rows.
pub fn aggregate_alt<T: Scalar>(rows: &[&[T]], mode: AggregatorMode) -> Result<Vec<T>, NeuralError> {
    if mode == AggregatorMode::Softmax {
        return Err(NeuralError::Shape("softmax aggregation needs theta".into()));
    }
    reduce(rows, mode, None)
}

/// Aggregates rows tagged with keys, combining them in ascending key order so
/// the result does not depend on how the caller listed them.
pub fn aggregate_keyed<T: Scalar>(rows: &[(usize, &[T])], mode: AggregatorMode, theta: Option<&[T]>) -> Result<Vec<T>, NeuralError> {
    let mut sorted: Vec<&(usize, &[T])> = rows.iter().collect();
    sorted.sort_by_key(|(k, _)| *k);
    let plain: Vec<&[T]> = sorted.iter().map(|(_, r)| *r).collect();
    reduce(&plain, mode, theta)
}
