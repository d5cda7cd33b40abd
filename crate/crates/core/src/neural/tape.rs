use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Gradients, NeuralError, ParamId, ParamSet, Scalar, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Elementwise reduction over a group of rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregatorMode {
    #[default]
    Softmax,
    Max,
    Sum,
    Mean,
}

impl AggregatorMode {
    pub const ALL: [AggregatorMode; 4] = [AggregatorMode::Softmax, AggregatorMode::Max, AggregatorMode::Sum, AggregatorMode::Mean];

    pub fn name(self) -> &'static str {
        match self {
            AggregatorMode::Softmax => "softmax",
            AggregatorMode::Max => "max",
            AggregatorMode::Sum => "sum",
            AggregatorMode::Mean => "mean",
        }
    }
}

impl std::str::FromStr for AggregatorMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        AggregatorMode::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown aggregator '{s}'"))
    }
}

/// Row groups reduced together; group `j` owns `members[offsets[j]..offsets[j+1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segments {
    offsets: Vec<usize>,
    members: Vec<usize>,
}

impl Segments {
    pub fn from_groups(groups: &[Vec<usize>]) -> Self {
        let mut offsets = Vec::with_capacity(groups.len() + 1);
        let mut members = Vec::with_capacity(groups.iter().map(Vec::len).sum());
        offsets.push(0);
        for g in groups {
            members.extend_from_slice(g);
            offsets.push(members.len());
        }
        Segments { offsets, members }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn group(&self, j: usize) -> &[usize] {
        &self.members[self.offsets[j]..self.offsets[j + 1]]
    }

    fn max_member(&self) -> Option<usize> {
        self.members.iter().copied().max()
    }
}

/// Deliberate backward-rule corruption, used to show the gradient check can fail.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// ReLU passes gradient through even where its input was negative.
    ReluIgnoresMask,
    /// The softmax aggregator drops the gradient through its weights.
    SoftmaxSkipsWeights,
}

enum SegCache<T> {
    Softmax { theta: Var, alpha: Vec<T> },
    Max { argmax: Vec<u32> },
    Sum,
    Mean,
}

enum Op<T> {
    Leaf,
    Param(ParamId),
    /// `x @ w[r0..r1, :]`
    MatMul { x: Var, w: Var, r0: usize, r1: usize },
    AddRow { x: Var, b: Var },
    Add { a: Var, b: Var },
    Relu { x: Var },
    Gather { x: Var, idx: Arc<[usize]> },
    /// `out[e] = a[ia[e]] + b[ib[e]]`
    GatherAdd { a: Var, ia: Arc<[usize]>, b: Var, ib: Arc<[usize]> },
    Segment { x: Var, segs: Arc<Segments>, cache: SegCache<T> },
    ConcatCols { parts: Vec<Var> },
    L1 { pred: Var, target: Tensor<T> },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

/// Records a forward computation so it can be differentiated in reverse.
pub struct Tape<'p, T: Scalar> {
    params: &'p ParamSet<T>,
    nodes: Vec<Node<T>>,
    param_vars: HashMap<ParamId, Var>,
    consumed: bool,
    fault: Option<Fault>,
}

impl<'p, T: Scalar> Tape<'p, T> {
    pub fn new(params: &'p ParamSet<T>) -> Self {
        Tape { params, nodes: Vec::new(), param_vars: HashMap::new(), consumed: false, fault: None }
    }

    #[doc(hidden)]
    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn params(&self) -> &'p ParamSet<T> {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Result<Var, NeuralError> {
        if cfg!(debug_assertions) && !value.all_finite() {
            return Err(NeuralError::NonFinite(op_name(&op).into()));
        }
        self.nodes.push(Node { value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// Records a constant.
    pub fn input(&mut self, value: Tensor<T>) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf });
        Var(self.nodes.len() - 1)
    }

    /// The node holding parameter `id`; repeated calls share one node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars.get(&id) {
            return *v;
        }
        self.nodes.push(Node { value: self.params.get(id).clone(), op: Op::Param(id) });
        let v = Var(self.nodes.len() - 1);
        self.param_vars.insert(id, v);
        v
    }

    pub fn matmul(&mut self, x: Var, w: Var) -> Result<Var, NeuralError> {
        let rows = self.shape(w).0;
        self.matmul_rows(x, w, 0, rows)
    }

    /// `x @ w[r0..r1, :]`: multiplies by a horizontal band of `w`.
    pub fn matmul_rows(&mut self, x: Var, w: Var, r0: usize, r1: usize) -> Result<Var, NeuralError> {
        let (m, k) = self.shape(x);
        let (wr, n) = self.shape(w);
        if r1 > wr || r0 > r1 || r1 - r0 != k {
            return Err(NeuralError::Shape(format!("matmul {m}x{k} by rows {r0}..{r1} of {wr}x{n}")));
        }
        let mut out = Tensor::zeros(m, n);
        let wd = &self.nodes[w.0].value.data()[r0 * n..];
        T::gemm(m, k, n, T::ONE, self.nodes[x.0].value.data(), k as isize, 1, wd, n as isize, 1, T::ZERO, out.data_mut(), n as isize, 1);
        self.push(out, Op::MatMul { x, w, r0, r1 })
    }

    /// Adds the `1 x n` row `b` to every row of `x`.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var, NeuralError> {
        let (m, n) = self.shape(x);
        if self.shape(b) != (1, n) {
            return Err(NeuralError::Shape(format!("bias {:?} for {m}x{n}", self.shape(b))));
        }
        let mut out = self.nodes[x.0].value.clone();
        let bias = self.nodes[b.0].value.data();
        for r in 0..m {
            for (o, bv) in out.row_mut(r).iter_mut().zip(bias) {
                *o += *bv;
            }
        }
        self.push(out, Op::AddRow { x, b })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NeuralError> {
        if self.shape(a) != self.shape(b) {
            return Err(NeuralError::Shape(format!("add {:?} and {:?}", self.shape(a), self.shape(b))));
        }
        let mut out = self.nodes[a.0].value.clone();
        out.add_assign(&self.nodes[b.0].value);
        self.push(out, Op::Add { a, b })
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, NeuralError> {
        let mut out = self.nodes[x.0].value.clone();
        for v in out.data_mut() {
            if !(*v > T::ZERO) {
                *v = T::ZERO;
            }
        }
        self.push(out, Op::Relu { x })
    }

    /// Row `e` of the output is row `idx[e]` of `x`.
    pub fn gather(&mut self, x: Var, idx: Arc<[usize]>) -> Result<Var, NeuralError> {
        let (m, n) = self.shape(x);
        if idx.iter().any(|&i| i >= m) {
            return Err(NeuralError::Shape(format!("gather index beyond {m} rows")));
        }
        let src = &self.nodes[x.0].value;
        let mut out = Tensor::zeros(idx.len(), n);
        for (e, &i) in idx.iter().enumerate() {
            out.row_mut(e).copy_from_slice(src.row(i));
        }
        self.push(out, Op::Gather { x, idx })
    }

    /// `out[e] = a[ia[e]] + b[ib[e]]`.
    pub fn gather_add(&mut self, a: Var, ia: Arc<[usize]>, b: Var, ib: Arc<[usize]>) -> Result<Var, NeuralError> {
        let ((ma, n), (mb, nb)) = (self.shape(a), self.shape(b));
        if n != nb || ia.len() != ib.len() || ia.iter().any(|&i| i >= ma) || ib.iter().any(|&i| i >= mb) {
            return Err(NeuralError::Shape("gather_add operands disagree".into()));
        }
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let mut out = Tensor::zeros(ia.len(), n);
        for e in 0..ia.len() {
            for ((o, x), y) in out.row_mut(e).iter_mut().zip(av.row(ia[e])).zip(bv.row(ib[e])) {
                *o = *x + *y;
            }
        }
        self.push(out, Op::GatherAdd { a, ia, b, ib })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, NeuralError> {
        let rows = parts.first().map(|p| self.shape(*p).0).unwrap_or(0);
        if parts.iter().any(|p| self.shape(*p).0 != rows) {
            return Err(NeuralError::Shape("concat of unequal row counts".into()));
        }
        let width: usize = parts.iter().map(|p| self.shape(*p).1).sum();
        let mut out = Tensor::zeros(rows, width);
        for r in 0..rows {
            let mut c = 0;
            for p in parts {
                let src = self.nodes[p.0].value.row(r);
                out.row_mut(r)[c..c + src.len()].copy_from_slice(src);
                c += src.len();
            }
        }
        self.push(out, Op::ConcatCols { parts: parts.to_vec() })
    }

    /// Reduces each group of rows of `x` to one output row. Empty groups give zeros.
    ///
    /// Rows are combined in the order the group lists them.
    /// `theta` is required for [`AggregatorMode::Softmax`] and ignored otherwise.
    pub fn segment_aggregate(&mut self, x: Var, segs: Arc<Segments>, mode: AggregatorMode, theta: Option<Var>) -> Result<Var, NeuralError> {
        let (m, n) = self.shape(x);
        if segs.max_member().is_some_and(|i| i >= m) {
            return Err(NeuralError::Shape(format!("segment member beyond {m} rows")));
        }
        let xv = &self.nodes[x.0].value;
        let mut out = Tensor::zeros(segs.len(), n);
        let cache = match mode {
            AggregatorMode::Softmax => {
                let theta = theta.ok_or_else(|| NeuralError::Shape("softmax aggregation needs theta".into()))?;
                let tv = &self.nodes[theta.0].value;
                if tv.shape() != (1, n) {
                    return Err(NeuralError::Shape(format!("theta {:?} for width {n}", tv.shape())));
                }
                let mut alpha = vec![T::ZERO; segs.members.len()];
                let mut scores = Vec::new();
                for j in 0..segs.len() {
                    let g = segs.group(j);
                    if g.is_empty() {
                        continue;
                    }
                    scores.clear();
                    scores.extend(g.iter().map(|&i| dot(tv.data(), xv.row(i))));
                    let top = scores.iter().copied().fold(scores[0], |a, b| if b > a { b } else { a });
                    let mut z = T::ZERO;
                    let o = out.row_mut(j);
                    for (s, &i) in scores.iter_mut().zip(g) {
                        let w = (*s - top).exp();
                        *s = w;
                        z += w;
                        for (ov, v) in o.iter_mut().zip(xv.row(i)) {
                            *ov += w * *v;
                        }
                    }
                    for ov in o.iter_mut() {
                        *ov = *ov / z;
                    }
                    for (a, w) in alpha[segs.offsets[j]..segs.offsets[j + 1]].iter_mut().zip(&scores) {
                        *a = *w / z;
                    }
                }
                SegCache::Softmax { theta, alpha }
            }
            AggregatorMode::Max => {
                let mut argmax = vec![u32::MAX; segs.len() * n];
                for j in 0..segs.len() {
                    let g = segs.group(j);
                    let Some(&first) = g.first() else { continue };
                    out.row_mut(j).copy_from_slice(xv.row(first));
                    argmax[j * n..(j + 1) * n].fill(first as u32);
                    for &i in &g[1..] {
                        for (c, v) in xv.row(i).iter().enumerate() {
                            if *v > out.get(j, c) {
                                out.row_mut(j)[c] = *v;
                                argmax[j * n + c] = i as u32;
                            }
                        }
                    }
                }
                SegCache::Max { argmax }
            }
            AggregatorMode::Sum | AggregatorMode::Mean => {
                for j in 0..segs.len() {
                    let g = segs.group(j);
                    let o = out.row_mut(j);
                    for &i in g {
                        for (ov, v) in o.iter_mut().zip(xv.row(i)) {
                            *ov += *v;
                        }
                    }
                    if mode == AggregatorMode::Mean && !g.is_empty() {
                        let count = T::from_f64(g.len() as f64);
                        for ov in o.iter_mut() {
                            *ov = *ov / count;
                        }
                    }
                }
                if mode == AggregatorMode::Sum {
                    SegCache::Sum
                } else {
                    SegCache::Mean
                }
            }
        };
        self.push(out, Op::Segment { x, segs, cache })
    }

    /// Mean absolute error against a constant target; a `1 x 1` result.
    pub fn l1_loss(&mut self, pred: Var, target: Tensor<T>) -> Result<Var, NeuralError> {
        let p = &self.nodes[pred.0].value;
        if p.shape() != target.shape() {
            return Err(NeuralError::Shape(format!("l1 of {:?} against {:?}", p.shape(), target.shape())));
        }
        if p.is_empty() {
            return Err(NeuralError::EmptyRows);
        }
        let mut sum = T::ZERO;
        for (a, b) in p.data().iter().zip(target.data()) {
            sum += (*a - *b).abs();
        }
        let loss = sum / T::from_f64(p.len() as f64);
        self.push(Tensor::row_vector(vec![loss]), Op::L1 { pred, target })
    }

    /// Reverse pass from the scalar `loss`. A tape can be differentiated once.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<T>, NeuralError> {
        if self.consumed {
            return Err(NeuralError::TapeConsumed);
        }
        if self.shape(loss) != (1, 1) {
            return Err(NeuralError::Shape(format!("loss must be 1x1, got {:?}", self.shape(loss))));
        }
        self.consumed = true;
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::row_vector(vec![T::ONE]));
        let mut out = Gradients::zeros_like(self.params);
        let fault = self.fault;

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => out.get_mut(*id).add_assign(&g),
                Op::MatMul { x, w, r0, r1 } => {
                    let xv = &self.nodes[x.0].value;
                    let wv = &self.nodes[w.0].value;
                    let (m, k) = xv.shape();
                    let n = wv.cols();
                    if needs_grad(&self.nodes, *x) {
                        let gx = grad_slot(&mut grads, *x, m, k);
                        // gx += g @ w[r0..r1]^T
                        T::gemm(m, n, k, T::ONE, g.data(), n as isize, 1, &wv.data()[r0 * n..], 1, n as isize, T::ONE, gx.data_mut(), k as isize, 1);
                    }
                    let gw = grad_slot(&mut grads, *w, wv.rows(), n);
                    // gw[r0..r1] += x^T @ g
                    T::gemm(r1 - r0, m, n, T::ONE, xv.data(), 1, k as isize, g.data(), n as isize, 1, T::ONE, &mut gw.data_mut()[r0 * n..], n as isize, 1);
                }
                Op::AddRow { x, b } => {
                    let n = g.cols();
                    let gb = grad_slot(&mut grads, *b, 1, n);
                    for r in 0..g.rows() {
                        for (a, v) in gb.data_mut().iter_mut().zip(g.row(r)) {
                            *a += *v;
                        }
                    }
                    accumulate(&mut grads, *x, &g);
                }
                Op::Add { a, b } => {
                    accumulate(&mut grads, *a, &g);
                    accumulate(&mut grads, *b, &g);
                }
                Op::Relu { x } => {
                    let mut gx = g;
                    if fault != Some(Fault::ReluIgnoresMask) {
                        for (gv, y) in gx.data_mut().iter_mut().zip(node.value.data()) {
                            if !(*y > T::ZERO) {
                                *gv = T::ZERO;
                            }
                        }
                    }
                    accumulate(&mut grads, *x, &gx);
                }
                Op::Gather { x, idx } => {
                    let (m, n) = self.shape(*x);
                    let gx = grad_slot(&mut grads, *x, m, n);
                    for (e, &i) in idx.iter().enumerate() {
                        add_into(gx.row_mut(i), g.row(e));
                    }
                }
                Op::GatherAdd { a, ia, b, ib } => {
                    let (ma, n) = self.shape(*a);
                    let ga = grad_slot(&mut grads, *a, ma, n);
                    for (e, &i) in ia.iter().enumerate() {
                        add_into(ga.row_mut(i), g.row(e));
                    }
                    let mb = self.shape(*b).0;
                    let gb = grad_slot(&mut grads, *b, mb, n);
                    for (e, &i) in ib.iter().enumerate() {
                        add_into(gb.row_mut(i), g.row(e));
                    }
                }
                Op::ConcatCols { parts } => {
                    let mut c = 0;
                    for p in parts {
                        let (m, w) = self.shape(*p);
                        let gp = grad_slot(&mut grads, *p, m, w);
                        for r in 0..m {
                            add_into(gp.row_mut(r), &g.row(r)[c..c + w]);
                        }
                        c += w;
                    }
                }
                Op::Segment { x, segs, cache } => {
                    let (m, n) = self.shape(*x);
                    let xv = &self.nodes[x.0].value;
                    match cache {
                        SegCache::Softmax { theta, alpha } => {
                            let mut gtheta = vec![T::ZERO; n];
                            {
                                let gx = grad_slot(&mut grads, *x, m, n);
                                for j in 0..segs.len() {
                                    let gj = g.row(j);
                                    let go = dot(gj, node.value.row(j));
                                    let lo = segs.offsets[j];
                                    for (t, &i) in segs.group(j).iter().enumerate() {
                                        let a = alpha[lo + t];
                                        let ds = a * (dot(gj, xv.row(i)) - go);
                                        let row = gx.row_mut(i);
                                        for (gv, gg) in row.iter_mut().zip(gj) {
                                            *gv += a * *gg;
                                        }
                                        if fault == Some(Fault::SoftmaxSkipsWeights) {
                                            continue;
                                        }
                                        let tv = self.nodes[theta.0].value.data();
                                        for (gv, t) in row.iter_mut().zip(tv) {
                                            *gv += ds * *t;
                                        }
                                        for (gt, v) in gtheta.iter_mut().zip(xv.row(i)) {
                                            *gt += ds * *v;
                                        }
                                    }
                                }
                            }
                            let gt = grad_slot(&mut grads, *theta, 1, n);
                            add_into(gt.data_mut(), &gtheta);
                        }
                        SegCache::Max { argmax } => {
                            let gx = grad_slot(&mut grads, *x, m, n);
                            for j in 0..segs.len() {
                                if segs.group(j).is_empty() {
                                    continue;
                                }
                                for c in 0..n {
                                    let i = argmax[j * n + c] as usize;
                                    gx.row_mut(i)[c] += g.get(j, c);
                                }
                            }
                        }
                        SegCache::Sum | SegCache::Mean => {
                            let mean = matches!(cache, SegCache::Mean);
                            let gx = grad_slot(&mut grads, *x, m, n);
                            for j in 0..segs.len() {
                                let grp = segs.group(j);
                                let scale = if mean { T::ONE / T::from_f64(grp.len() as f64) } else { T::ONE };
                                for &i in grp {
                                    for (gv, gg) in gx.row_mut(i).iter_mut().zip(g.row(j)) {
                                        *gv += scale * *gg;
                                    }
                                }
                            }
                        }
                    }
                }
                Op::L1 { pred, target } => {
                    let pv = &self.nodes[pred.0].value;
                    let scale = g.get(0, 0) / T::from_f64(pv.len() as f64);
                    let (m, n) = pv.shape();
                    let gp = grad_slot(&mut grads, *pred, m, n);
                    for ((gv, p), t) in gp.data_mut().iter_mut().zip(pv.data()).zip(target.data()) {
                        if *p > *t {
                            *gv += scale;
                        } else if *p < *t {
                            *gv -= scale;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn op_name<T>(op: &Op<T>) -> &'static str {
    match op {
        Op::Leaf => "input",
        Op::Param(_) => "param",
        Op::MatMul { .. } => "matmul",
        Op::AddRow { .. } => "add_row",
        Op::Add { .. } => "add",
        Op::Relu { .. } => "relu",
        Op::Gather { .. } => "gather",
        Op::GatherAdd { .. } => "gather_add",
        Op::Segment { .. } => "segment_aggregate",
        Op::ConcatCols { .. } => "concat_cols",
        Op::L1 { .. } => "l1_loss",
    }
}

fn needs_grad<T>(nodes: &[Node<T>], v: Var) -> bool {
    !matches!(nodes[v.0].op, Op::Leaf)
}

fn grad_slot<T: Scalar>(grads: &mut [Option<Tensor<T>>], v: Var, rows: usize, cols: usize) -> &mut Tensor<T> {
    grads[v.0].get_or_insert_with(|| Tensor::zeros(rows, cols))
}

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], v: Var, g: &Tensor<T>) {
    match &mut grads[v.0] {
        Some(t) => t.add_assign(g),
        slot @ None => *slot = Some(g.clone()),
    }
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += *s;
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::ZERO;
    for (x, y) in a.iter().zip(b) {
        s += *x * *y;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_model_gradient() {
        let mut ps = ParamSet::<f64>::new();
        let w = ps.add("w", Tensor::row_vector(vec![3.0]));
        let mut tape = Tape::new(&ps);
        let x = tape.input(Tensor::row_vector(vec![2.0]));
        let wv = tape.param(w);
        let y = tape.matmul(x, wv).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get(w).data(), &[2.0]);
        assert!(matches!(tape.backward(y), Err(NeuralError::TapeConsumed)));
    }

    #[test]
    fn unreachable_params_get_zero() {
        let mut ps = ParamSet::<f64>::new();
        let w = ps.add("w", Tensor::row_vector(vec![3.0]));
        let unused = ps.add("u", Tensor::row_vector(vec![1.0, 2.0]));
        let mut tape = Tape::new(&ps);
        let x = tape.input(Tensor::row_vector(vec![2.0]));
        let wv = tape.param(w);
        let y = tape.matmul(x, wv).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get(unused).data(), &[0.0, 0.0]);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let ps = ParamSet::<f64>::new();
        let mut tape = Tape::new(&ps);
        let x = tape.input(Tensor::row_vector(vec![1.0, 2.0]));
        assert!(matches!(tape.backward(x), Err(NeuralError::Shape(_))));
    }

    #[test]
    fn matmul_rows_uses_band() {
        let mut ps = ParamSet::<f64>::new();
        let w = ps.add("w", Tensor::from_vec(3, 1, vec![1.0, 10.0, 100.0]).unwrap());
        let mut tape = Tape::new(&ps);
        let x = tape.input(Tensor::from_vec(1, 2, vec![2.0, 3.0]).unwrap());
        let wv = tape.param(w);
        let y = tape.matmul_rows(x, wv, 1, 3).unwrap();
        assert_eq!(tape.value(y).data(), &[320.0]);
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get(w).data(), &[0.0, 2.0, 3.0]);
    }

    #[test]
    fn empty_segments_are_zero() {
        let ps = ParamSet::<f64>::new();
        let mut tape = Tape::new(&ps);
        let x = tape.input(Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let segs = Arc::new(Segments::from_groups(&[vec![], vec![0, 1]]));
        for mode in [AggregatorMode::Max, AggregatorMode::Sum, AggregatorMode::Mean] {
            let y = tape.segment_aggregate(x, segs.clone(), mode, None).unwrap();
            assert_eq!(tape.value(y).row(0), &[0.0, 0.0]);
        }
    }

    #[test]
    fn l1_subgradient_zero_at_ties() {
        let mut ps = ParamSet::<f64>::new();
        let p = ps.add("p", Tensor::row_vector(vec![0.2, 0.8, 0.5]));
        let mut tape = Tape::new(&ps);
        let pv = tape.param(p);
        let loss = tape.l1_loss(pv, Tensor::row_vector(vec![0.0, 1.0, 0.5])).unwrap();
        assert!((tape.value(loss).get(0, 0) - 0.4 / 3.0).abs() < 1e-15);
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(p).data(), &[1.0 / 3.0, -1.0 / 3.0, 0.0]);
    }
}
