use std::borrow::Cow;

use rand::Rng;

use super::tensor::Tensor;
use crate::error::{shape_err, Error, Result};

/// Floor applied to probabilities before taking a logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    SoftmaxRows(Var),
    Concat { inputs: Vec<Var>, axis: usize },
    SliceCols { input: Var, start: usize },
    SelectRows { input: Var, rows: Vec<usize> },
    RepeatRows(Var),
    Transpose(Var),
    Reshape(Var),
    Sum(Var),
    Dropout { input: Var, mask: Vec<f64> },
    CrossEntropy { logits: Var, probs: Tensor, targets: Vec<usize>, mask: Vec<bool>, count: usize },
}

struct Node<'a> {
    value: Cow<'a, Tensor>,
    op: Op,
    requires_grad: bool,
}

/// Record of executed operations for reverse-mode differentiation.
///
/// Nodes are appended in execution order, so every node's inputs precede it
/// and a single reverse sweep visits them in a valid topological order.
/// Leaves may borrow their value, which lets parameters be bound without
/// copying.
#[derive(Default)]
pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
    grads: Vec<Option<Tensor>>,
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            grads: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value: Cow::Owned(value),
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn push_derived(&mut self, value: Tensor, op: Op, inputs: &[Var], name: &'static str) -> Result<Var> {
        let value = value.check_finite(name)?;
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        Ok(self.push(value, op, requires_grad))
    }

    /// Trainable leaf borrowing its value.
    pub fn param(&mut self, value: &'a Tensor) -> Var {
        self.nodes.push(Node {
            value: Cow::Borrowed(value),
            op: Op::Leaf,
            requires_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Borrowed leaf that never receives a gradient.
    pub fn constant_ref(&mut self, value: &'a Tensor) -> Var {
        self.nodes.push(Node {
            value: Cow::Borrowed(value),
            op: Op::Leaf,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// Owned leaf that receives a gradient.
    pub fn variable(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        self.push_derived(out, Op::MatMul(a, b), &[a, b], "matmul")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b))?;
        self.push_derived(out, Op::Add(a, b), &[a, b], "add")
    }

    /// Adds a single row (shape `[c]` or `[1, c]`) to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let cols = self.value(a).cols();
        let bias = self.value(row);
        if bias.len() != cols || bias.rows() != 1 && bias.rank() == 2 {
            return shape_err(format!(
                "row broadcast: {:?} onto {:?}",
                bias.shape(),
                self.value(a).shape()
            ));
        }
        let mut out = self.value(a).clone();
        for chunk in out.data_mut().chunks_mut(cols) {
            for (o, b) in chunk.iter_mut().zip(bias.data()) {
                *o += b;
            }
        }
        self.push_derived(out, Op::AddRow(a, row), &[a, row], "add_row")
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return shape_err(format!("elementwise product {:?} vs {:?}", x.shape(), y.shape()));
        }
        let data = x.data().iter().zip(y.data()).map(|(p, q)| p * q).collect();
        let out = Tensor::new(x.shape().to_vec(), data)?;
        self.push_derived(out, Op::Mul(a, b), &[a, b], "mul")
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        let mut out = self.value(a).clone();
        out.scale(factor);
        self.push_derived(out, Op::Scale(a, factor), &[a], "scale")
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::tanh);
        self.push_derived(out, Op::Tanh(a), &[a], "tanh")
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(sigmoid);
        self.push_derived(out, Op::Sigmoid(a), &[a], "sigmoid")
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let out = softmax_rows(self.value(a))?;
        self.push_derived(out, Op::SoftmaxRows(a), &[a], "softmax_rows")
    }

    /// Concatenation of rank-2 tensors along `axis` (0 = rows, 1 = columns).
    pub fn concat(&mut self, inputs: &[Var], axis: usize) -> Result<Var> {
        let tensors: Vec<&Tensor> = inputs.iter().map(|&v| self.value(v)).collect();
        let out = concat(&tensors, axis)?;
        self.push_derived(
            out,
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
            inputs,
            "concat",
        )
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let x = self.value(a);
        let (r, c) = x.dims2()?;
        if start > end || end > c {
            return shape_err(format!("column slice {}..{} of width {}", start, end, c));
        }
        let w = end - start;
        let mut data = Vec::with_capacity(r * w);
        for i in 0..r {
            data.extend_from_slice(&x.row(i)[start..end]);
        }
        let out = Tensor::new(vec![r, w], data)?;
        self.push_derived(out, Op::SliceCols { input: a, start }, &[a], "slice_cols")
    }

    /// Gathers rows by index; the backward pass scatter-adds.
    pub fn select_rows(&mut self, a: Var, rows: &[usize]) -> Result<Var> {
        let x = self.value(a);
        let (r, c) = x.dims2()?;
        let mut data = Vec::with_capacity(rows.len() * c);
        for &i in rows {
            if i >= r {
                return shape_err(format!("row {} out of range for {} rows", i, r));
            }
            data.extend_from_slice(x.row(i));
        }
        let out = Tensor::new(vec![rows.len(), c], data)?;
        self.push_derived(
            out,
            Op::SelectRows {
                input: a,
                rows: rows.to_vec(),
            },
            &[a],
            "select_rows",
        )
    }

    /// Tiles a single row `n` times.
    pub fn repeat_rows(&mut self, a: Var, n: usize) -> Result<Var> {
        let x = self.value(a);
        if x.rows() != 1 && x.rank() == 2 {
            return shape_err(format!("repeat_rows needs one row, got {:?}", x.shape()));
        }
        let c = x.len();
        let mut data = Vec::with_capacity(n * c);
        for _ in 0..n {
            data.extend_from_slice(x.data());
        }
        let out = Tensor::new(vec![n, c], data)?;
        self.push_derived(out, Op::RepeatRows(a), &[a], "repeat_rows")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose()?;
        self.push_derived(out, Op::Transpose(a), &[a], "transpose")
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        let out = self.value(a).clone().reshape(shape)?;
        self.push_derived(out, Op::Reshape(a), &[a], "reshape")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(a).sum());
        self.push_derived(out, Op::Sum(a), &[a], "sum")
    }

    /// Inverted dropout. Outside training, or with `keep_prob == 1`, returns
    /// `a` itself.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        a: Var,
        keep_prob: f64,
        rng: &mut R,
        training: bool,
    ) -> Result<Var> {
        check_keep_prob(keep_prob)?;
        if !training || keep_prob == 1.0 {
            return Ok(a);
        }
        let x = self.value(a);
        let scale = 1.0 / keep_prob;
        let mask: Vec<f64> = (0..x.len())
            .map(|_| if rng.random::<f64>() < keep_prob { scale } else { 0.0 })
            .collect();
        let data = x.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let out = Tensor::new(x.shape().to_vec(), data)?;
        self.push_derived(out, Op::Dropout { input: a, mask }, &[a], "dropout")
    }

    /// Mean negative log-likelihood of `targets` under row-wise softmax of
    /// `logits`, over the positions where `mask` is true.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize], mask: &[bool]) -> Result<Var> {
        let x = self.value(logits);
        let (n, labels) = x.dims2()?;
        if targets.len() != n || mask.len() != n {
            return shape_err(format!(
                "cross_entropy: {} rows, {} targets, {} mask entries",
                n,
                targets.len(),
                mask.len()
            ));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= labels) {
            return shape_err(format!("target {} out of range for {} labels", t, labels));
        }
        let count = mask.iter().filter(|&&m| m).count();
        if count == 0 {
            return Err(Error::Invalid("cross_entropy: every position is masked".into()));
        }
        let probs = softmax_rows(x)?;
        let total: f64 = (0..n)
            .filter(|&i| mask[i])
            .map(|i| -probs.get(i, targets[i]).max(LOG_FLOOR).ln())
            .sum();
        let out = Tensor::scalar(total / count as f64);
        self.push_derived(
            out,
            Op::CrossEntropy {
                logits,
                probs,
                targets: targets.to_vec(),
                mask: mask.to_vec(),
                count,
            },
            &[logits],
            "cross_entropy",
        )
    }

    /// Gradient accumulated at `v` by the last [`Tape::backward`].
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Reverse sweep from a scalar `loss`; populates gradients of every node
    /// that requires one. Gradients of shared inputs add up.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return shape_err(format!("backward needs a scalar loss, got {:?}", lv.shape()));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(lv.shape(), 1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            if !self.nodes[idx].requires_grad {
                continue;
            }
            self.propagate(idx, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, g: Tensor) -> Result<()> {
        if !self.nodes[v.0].requires_grad {
            return Ok(());
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g)?,
            slot @ None => *slot = Some(g),
        }
        Ok(())
    }

    fn propagate(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let out = &self.nodes[idx].value;
        match &self.nodes[idx].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.requires_grad(*a) {
                    self.accumulate(grads, *a, g.matmul(&bv.transpose()?)?)?;
                }
                if self.requires_grad(*b) {
                    self.accumulate(grads, *b, av.transpose()?.matmul(g)?)?;
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone())?;
                self.accumulate(grads, *b, g.clone())?;
            }
            Op::AddRow(a, row) => {
                self.accumulate(grads, *a, g.clone())?;
                let bias = self.value(*row);
                let cols = bias.len();
                let mut gb = vec![0.0; cols];
                for chunk in g.data().chunks(cols) {
                    for (acc, v) in gb.iter_mut().zip(chunk) {
                        *acc += v;
                    }
                }
                self.accumulate(grads, *row, Tensor::new(bias.shape().to_vec(), gb)?)?;
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.requires_grad(*a) {
                    let d = g.data().iter().zip(bv.data()).map(|(x, y)| x * y).collect();
                    self.accumulate(grads, *a, Tensor::new(g.shape().to_vec(), d)?)?;
                }
                if self.requires_grad(*b) {
                    let d = g.data().iter().zip(av.data()).map(|(x, y)| x * y).collect();
                    self.accumulate(grads, *b, Tensor::new(g.shape().to_vec(), d)?)?;
                }
            }
            Op::Scale(a, factor) => {
                let mut d = g.clone();
                d.scale(*factor);
                self.accumulate(grads, *a, d)?;
            }
            Op::Tanh(a) => {
                let d = g.data().iter().zip(out.data()).map(|(gv, y)| gv * (1.0 - y * y)).collect();
                self.accumulate(grads, *a, Tensor::new(g.shape().to_vec(), d)?)?;
            }
            Op::Sigmoid(a) => {
                let d = g.data().iter().zip(out.data()).map(|(gv, y)| gv * y * (1.0 - y)).collect();
                self.accumulate(grads, *a, Tensor::new(g.shape().to_vec(), d)?)?;
            }
            Op::SoftmaxRows(a) => {
                let c = out.cols();
                let mut d = vec![0.0; out.len()];
                for ((drow, grow), yrow) in d.chunks_mut(c).zip(g.data().chunks(c)).zip(out.data().chunks(c)) {
                    let dot: f64 = grow.iter().zip(yrow).map(|(x, y)| x * y).sum();
                    for ((dv, gv), y) in drow.iter_mut().zip(grow).zip(yrow) {
                        *dv = y * (gv - dot);
                    }
                }
                self.accumulate(grads, *a, Tensor::new(g.shape().to_vec(), d)?)?;
            }
            Op::Concat { inputs, axis } => {
                let (rows, cols) = g.dims2()?;
                let mut offset = 0;
                for &v in inputs {
                    let (r, c) = self.value(v).dims2()?;
                    if self.requires_grad(v) {
                        let part = if *axis == 0 {
                            Tensor::new(vec![r, c], g.data()[offset * cols..(offset + r) * cols].to_vec())?
                        } else {
                            let mut d = Vec::with_capacity(r * c);
                            for i in 0..rows {
                                d.extend_from_slice(&g.row(i)[offset..offset + c]);
                            }
                            Tensor::new(vec![r, c], d)?
                        };
                        self.accumulate(grads, v, part)?;
                    }
                    offset += if *axis == 0 { r } else { c };
                }
            }
            Op::SliceCols { input, start } => {
                let (r, c) = self.value(*input).dims2()?;
                let w = g.cols();
                let mut d = Tensor::zeros(&[r, c]);
                for i in 0..r {
                    d.data_mut()[i * c + start..i * c + start + w].copy_from_slice(g.row(i));
                }
                self.accumulate(grads, *input, d)?;
            }
            Op::SelectRows { input, rows } => {
                let (r, c) = self.value(*input).dims2()?;
                let mut d = Tensor::zeros(&[r, c]);
                for (k, &i) in rows.iter().enumerate() {
                    for (dv, gv) in d.data_mut()[i * c..(i + 1) * c].iter_mut().zip(g.row(k)) {
                        *dv += gv;
                    }
                }
                self.accumulate(grads, *input, d)?;
            }
            Op::RepeatRows(a) => {
                let src = self.value(*a);
                let c = src.len();
                let mut d = vec![0.0; c];
                for chunk in g.data().chunks(c) {
                    for (acc, v) in d.iter_mut().zip(chunk) {
                        *acc += v;
                    }
                }
                self.accumulate(grads, *a, Tensor::new(src.shape().to_vec(), d)?)?;
            }
            Op::Transpose(a) => {
                self.accumulate(grads, *a, g.transpose()?)?;
            }
            Op::Reshape(a) => {
                let shape = self.value(*a).shape().to_vec();
                self.accumulate(grads, *a, g.clone().reshape(shape)?)?;
            }
            Op::Sum(a) => {
                let gv = g.item()?;
                self.accumulate(grads, *a, Tensor::full(self.value(*a).shape(), gv))?;
            }
            Op::Dropout { input, mask } => {
                let d = g.data().iter().zip(mask).map(|(x, m)| x * m).collect();
                self.accumulate(grads, *input, Tensor::new(g.shape().to_vec(), d)?)?;
            }
            Op::CrossEntropy {
                logits,
                probs,
                targets,
                mask,
                count,
            } => {
                let gv = g.item()? / *count as f64;
                let c = probs.cols();
                let mut d = Tensor::zeros(probs.shape());
                for (i, (&t, &m)) in targets.iter().zip(mask).enumerate() {
                    if !m {
                        continue;
                    }
                    let row = &mut d.data_mut()[i * c..(i + 1) * c];
                    row.copy_from_slice(probs.row(i));
                    row[t] -= 1.0;
                    for v in row.iter_mut() {
                        *v *= gv;
                    }
                }
                self.accumulate(grads, *logits, d)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn check_keep_prob(keep_prob: f64) -> Result<()> {
    if keep_prob > 0.0 && keep_prob <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("keep probability {} outside (0, 1]", keep_prob)))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(x: &Tensor) -> Result<Tensor> {
    let c = x.cols();
    if c == 0 || x.is_empty() {
        return shape_err(format!("softmax over empty rows, shape {:?}", x.shape()));
    }
    let mut out = x.clone();
    for row in out.data_mut().chunks_mut(c) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out.check_finite("softmax_rows")
}

pub fn concat(tensors: &[&Tensor], axis: usize) -> Result<Tensor> {
    if tensors.is_empty() {
        return shape_err("concat of nothing");
    }
    let dims: Vec<(usize, usize)> = tensors.iter().map(|t| t.dims2()).collect::<Result<_>>()?;
    match axis {
        0 => {
            let cols = dims.iter().find(|d| d.0 > 0).map_or(dims[0].1, |d| d.1);
            if dims.iter().any(|&(r, c)| r > 0 && c != cols) {
                return shape_err(format!("row concat with mismatched widths {:?}", dims));
            }
            let rows = dims.iter().map(|d| d.0).sum();
            let data = tensors.iter().flat_map(|t| t.data().iter().copied()).collect();
            Tensor::new(vec![rows, cols], data)
        }
        1 => {
            let rows = dims.iter().find(|d| d.1 > 0).map_or(dims[0].0, |d| d.0);
            if dims.iter().any(|&(r, c)| c > 0 && r != rows) {
                return shape_err(format!("column concat with mismatched heights {:?}", dims));
            }
            let cols: usize = dims.iter().map(|d| d.1).sum();
            let mut data = Vec::with_capacity(rows * cols);
            for i in 0..rows {
                for (t, &(_, c)) in tensors.iter().zip(&dims) {
                    if c > 0 {
                        data.extend_from_slice(t.row(i));
                    }
                }
            }
            Tensor::new(vec![rows, cols], data)
        }
        _ => shape_err(format!("concat axis {} unsupported for matrices", axis)),
    }
}
