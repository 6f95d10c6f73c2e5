//! Tape-based reverse-mode automatic differentiation.
//!
//! Nodes are appended in evaluation order and can only refer to earlier
//! nodes, so the tape is a DAG by construction and `backward` is a single
//! reverse sweep.

use super::tensor::{matmul, matmul_t, t_matmul, Tensor};
use super::PAD;
use crate::{Error, Result};
use std::rc::Rc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

pub const LN_EPS: f64 = 1e-10;

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Gelu(Var),
    Exp(Var),
    Log(Var),
    Recip(Var),
    SoftmaxRows(Var),
    LayerNormRows { x: Var, gamma: Var, beta: Var, xhat: Tensor, inv_std: Vec<f64> },
    CrossEntropy { logits: Var, targets: Rc<Vec<usize>>, ignore: Option<usize>, probs: Tensor, count: usize },
    Embedding { table: Var, ids: Rc<Vec<usize>> },
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    SelectCols(Var, Rc<Vec<usize>>),
    Sum(Var),
    Mean(Var),
    SumRows(Var),
    MeanRows(Var),
    ClampMaxCols(Var, Rc<Vec<f64>>),
    ClampMin(Var, f64),
    Select(Var, usize),
    Cosine { a: Var, b: Var, na: f64, nb: f64 },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// A computation tape. Build values through the op methods, then call
/// [`Graph::backward`] on a scalar.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients indexed by [`Var`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

fn shape_err(op: &str, a: &[usize], b: &[usize]) -> Error {
    Error::Shape(format!("{op}: {a:?} vs {b:?}"))
}

fn gelu(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
    0.5 * x * (1.0 + (C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4;
    let u = C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    let du = C * (1.0 + 3.0 * 0.044715 * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
}

/// Row-wise softmax; entries with `mask[i] == false` get probability 0.
pub fn softmax_rows(x: &Tensor, mask: Option<&[bool]>) -> Result<Tensor> {
    let (m, n) = (x.rows(), x.cols());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = x.row_slice(i);
        let allowed = |j: usize| mask.is_none_or(|mk| mk[i * n + j]);
        let mut max = f64::NEG_INFINITY;
        for (j, &v) in row.iter().enumerate() {
            if allowed(j) && v > max {
                max = v;
            }
        }
        if max == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!("softmax row {i} is fully masked")));
        }
        let mut s = 0.0;
        for (j, &v) in row.iter().enumerate() {
            if allowed(j) {
                let e = (v - max).exp();
                out[i * n + j] = e;
                s += e;
            }
        }
        for o in &mut out[i * n..(i + 1) * n] {
            *o /= s;
        }
    }
    Ok(Tensor::from_raw(vec![m, n], out))
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds an input. Only leaves with `requires_grad` receive gradients.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op, parents: &[Var], name: &'static str) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(name));
        }
        let requires_grad = parents.iter().any(|p| self.nodes[p.0].requires_grad);
        // Constant subgraphs do not need their op recorded.
        let op = if requires_grad { op } else { Op::Leaf };
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn same_shape(&self, op: &str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn two_d(&self, op: &str, a: Var) -> Result<(usize, usize)> {
        let s = self.shape(a);
        if s.len() != 2 {
            return Err(Error::Shape(format!("{op}: expected a matrix, got {s:?}")));
        }
        Ok((s[0], s[1]))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (_, k) = self.two_d("matmul", a)?;
        let (k2, _) = self.two_d("matmul", b)?;
        if k != k2 {
            return Err(shape_err("matmul", self.shape(a), self.shape(b)));
        }
        let v = matmul(self.value(a), self.value(b));
        self.push(v, Op::MatMul(a, b), &[a, b], "matmul")
    }

    /// `a · bᵀ`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let (_, k) = self.two_d("matmul_t", a)?;
        let (_, k2) = self.two_d("matmul_t", b)?;
        if k != k2 {
            return Err(shape_err("matmul_t", self.shape(a), self.shape(b)));
        }
        let v = matmul_t(self.value(a), self.value(b));
        self.push(v, Op::MatMulT(a, b), &[a, b], "matmul_t")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        self.two_d("transpose", a)?;
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a), &[a], "transpose")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let v = self.value(a).zip(self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b), &[a, b], "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let v = self.value(a).zip(self.value(b), |x, y| x - y);
        self.push(v, Op::Sub(a, b), &[a, b], "sub")
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let v = self.value(a).zip(self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b), &[a, b], "mul")
    }

    /// Adds the vector `b` (length = columns of `a`) to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, n) = self.two_d("add_row", a)?;
        if self.value(b).numel() != n {
            return Err(shape_err("add_row", self.shape(a), self.shape(b)));
        }
        let bv = self.value(b).data();
        let mut out = self.value(a).data().to_vec();
        for i in 0..m {
            for (o, x) in out[i * n..(i + 1) * n].iter_mut().zip(bv) {
                *o += x;
            }
        }
        self.push(Tensor::from_raw(vec![m, n], out), Op::AddRow(a, b), &[a, b], "add_row")
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        let v = self.value(a).map(|x| x * c);
        self.push(v, Op::Scale(a, c), &[a], "scale")
    }

    pub fn gelu(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a).map(gelu);
        self.push(v, Op::Gelu(a), &[a], "gelu")
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a).map(f64::exp);
        self.push(v, Op::Exp(a), &[a], "exp")
    }

    /// Natural log; non-positive inputs are rejected as non-finite.
    pub fn log(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a).map(|x| if x > 0.0 { x.ln() } else { f64::NAN });
        self.push(v, Op::Log(a), &[a], "log")
    }

    pub fn recip(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a).map(|x| 1.0 / x);
        self.push(v, Op::Recip(a), &[a], "recip")
    }

    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        self.masked_softmax_rows(a, None)
    }

    /// Softmax per row where `mask` (row-major, `true` = visible) hides
    /// entries exactly.
    pub fn masked_softmax_rows(&mut self, a: Var, mask: Option<&[bool]>) -> Result<Var> {
        self.two_d("softmax_rows", a)?;
        if let Some(m) = mask {
            if m.len() != self.value(a).numel() {
                return Err(Error::Shape(format!("softmax mask has {} entries for {:?}", m.len(), self.shape(a))));
            }
        }
        let v = softmax_rows(self.value(a), mask)?;
        self.push(v, Op::SoftmaxRows(a), &[a], "softmax_rows")
    }

    /// Per-row normalization to zero mean and unit variance followed by the
    /// affine `gamma`, `beta` (each of length = columns).
    pub fn layer_norm_rows(&mut self, x: Var, gamma: Var, beta: Var) -> Result<Var> {
        let (m, n) = self.two_d("layer_norm_rows", x)?;
        if self.value(gamma).numel() != n || self.value(beta).numel() != n {
            return Err(shape_err("layer_norm_rows", self.shape(x), self.shape(gamma)));
        }
        let xv = self.value(x);
        let (g, b) = (self.value(gamma).data(), self.value(beta).data());
        let mut xhat = vec![0.0; m * n];
        let mut out = vec![0.0; m * n];
        let mut inv_std = Vec::with_capacity(m);
        for i in 0..m {
            let row = xv.row_slice(i);
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let is = 1.0 / (var + LN_EPS).sqrt();
            inv_std.push(is);
            for j in 0..n {
                let h = (row[j] - mean) * is;
                xhat[i * n + j] = h;
                out[i * n + j] = h * g[j] + b[j];
            }
        }
        let xhat = Tensor::from_raw(vec![m, n], xhat);
        self.push(
            Tensor::from_raw(vec![m, n], out),
            Op::LayerNormRows { x, gamma, beta, xhat, inv_std },
            &[x, gamma, beta],
            "layer_norm_rows",
        )
    }

    /// Mean negative log-likelihood of `targets` under row-wise softmax of
    /// `logits`, skipping PAD targets.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        self.cross_entropy_with(logits, targets, Some(PAD))
    }

    /// Cross-entropy with an explicit ignored class (or none).
    pub fn cross_entropy_with(&mut self, logits: Var, targets: &[usize], ignore: Option<usize>) -> Result<Var> {
        let (m, n) = self.two_d("cross_entropy", logits)?;
        if targets.len() != m {
            return Err(Error::Shape(format!("cross_entropy: {m} rows, {} targets", targets.len())));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= n) {
            return Err(Error::TokenOutOfRange { id: t, size: n });
        }
        let count = targets.iter().filter(|&&t| Some(t) != ignore).count();
        if count == 0 {
            return Err(Error::InvalidArgument("cross_entropy: every target is ignored".into()));
        }
        let probs = softmax_rows(self.value(logits), None)?;
        let mut loss = 0.0;
        for (i, &t) in targets.iter().enumerate() {
            if Some(t) == ignore {
                continue;
            }
            // log-softmax computed directly for accuracy
            let row = self.value(logits).row_slice(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += lse - row[t];
        }
        let v = Tensor::scalar(loss / count as f64);
        let targets = Rc::new(targets.to_vec());
        self.push(v, Op::CrossEntropy { logits, targets, ignore, probs, count }, &[logits], "cross_entropy")
    }

    /// Gathers rows of `table` by id.
    pub fn embedding(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let (vsize, d) = self.two_d("embedding", table)?;
        let tv = self.value(table);
        let mut out = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= vsize {
                return Err(Error::TokenOutOfRange { id, size: vsize });
            }
            out.extend_from_slice(tv.row_slice(id));
        }
        let v = Tensor::from_raw(vec![ids.len(), d], out);
        self.push(v, Op::Embedding { table, ids: Rc::new(ids.to_vec()) }, &[table], "embedding")
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("concat_rows of nothing".into()));
        }
        let n = self.two_d("concat_rows", parts[0])?.1;
        let mut out = Vec::new();
        let mut m = 0;
        for &p in parts {
            let (pm, pn) = self.two_d("concat_rows", p)?;
            if pn != n {
                return Err(shape_err("concat_rows", self.shape(parts[0]), self.shape(p)));
            }
            out.extend_from_slice(self.value(p).data());
            m += pm;
        }
        self.push(Tensor::from_raw(vec![m, n], out), Op::ConcatRows(parts.to_vec()), parts, "concat_rows")
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("concat_cols of nothing".into()));
        }
        let m = self.two_d("concat_cols", parts[0])?.0;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (pm, pn) = self.two_d("concat_cols", p)?;
            if pm != m {
                return Err(shape_err("concat_cols", self.shape(parts[0]), self.shape(p)));
            }
            widths.push(pn);
        }
        let n: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(m * n);
        for i in 0..m {
            for &p in parts {
                out.extend_from_slice(self.value(p).row_slice(i));
            }
        }
        self.push(Tensor::from_raw(vec![m, n], out), Op::ConcatCols(parts.to_vec()), parts, "concat_cols")
    }

    /// Rows `start..end`.
    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let (m, n) = self.two_d("slice_rows", a)?;
        if start > end || end > m {
            return Err(Error::Shape(format!("slice_rows {start}..{end} of {m} rows")));
        }
        let v = Tensor::from_raw(vec![end - start, n], self.value(a).data()[start * n..end * n].to_vec());
        self.push(v, Op::SliceRows(a, start), &[a], "slice_rows")
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let (m, n) = self.two_d("slice_cols", a)?;
        if start > end || end > n {
            return Err(Error::Shape(format!("slice_cols {start}..{end} of {n} columns")));
        }
        let av = self.value(a);
        let mut out = Vec::with_capacity(m * (end - start));
        for i in 0..m {
            out.extend_from_slice(&av.row_slice(i)[start..end]);
        }
        self.push(Tensor::from_raw(vec![m, end - start], out), Op::SliceCols(a, start), &[a], "slice_cols")
    }

    /// Picks the listed columns, in order; repeats are allowed.
    pub fn select_cols(&mut self, a: Var, cols: &[usize]) -> Result<Var> {
        let (m, n) = self.two_d("select_cols", a)?;
        if let Some(&c) = cols.iter().find(|&&c| c >= n) {
            return Err(Error::Shape(format!("select_cols: column {c} of {n}")));
        }
        let av = self.value(a);
        let mut out = Vec::with_capacity(m * cols.len());
        for i in 0..m {
            let row = av.row_slice(i);
            out.extend(cols.iter().map(|&c| row[c]));
        }
        let v = Tensor::from_raw(vec![m, cols.len()], out);
        self.push(v, Op::SelectCols(a, Rc::new(cols.to_vec())), &[a], "select_cols")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let v = Tensor::scalar(self.value(a).sum());
        self.push(v, Op::Sum(a), &[a], "sum")
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).numel();
        if n == 0 {
            return Err(Error::InvalidArgument("mean of empty tensor".into()));
        }
        let v = Tensor::scalar(self.value(a).sum() / n as f64);
        self.push(v, Op::Mean(a), &[a], "mean")
    }

    /// Column sums, shape `[1, n]`.
    pub fn sum_rows(&mut self, a: Var) -> Result<Var> {
        let (m, n) = self.two_d("sum_rows", a)?;
        let av = self.value(a);
        let mut out = vec![0.0; n];
        for i in 0..m {
            for (o, x) in out.iter_mut().zip(av.row_slice(i)) {
                *o += x;
            }
        }
        self.push(Tensor::row(out), Op::SumRows(a), &[a], "sum_rows")
    }

    /// Column means, shape `[1, n]`.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let (m, _) = self.two_d("mean_rows", a)?;
        if m == 0 {
            return Err(Error::InvalidArgument("mean_rows of zero rows".into()));
        }
        let av = self.value(a);
        let mut out = vec![0.0; av.cols()];
        for i in 0..m {
            for (o, x) in out.iter_mut().zip(av.row_slice(i)) {
                *o += x;
            }
        }
        out.iter_mut().for_each(|o| *o /= m as f64);
        self.push(Tensor::row(out), Op::MeanRows(a), &[a], "mean_rows")
    }

    /// `min(a[i, j], bounds[j])`.
    pub fn clamp_max_cols(&mut self, a: Var, bounds: &[f64]) -> Result<Var> {
        let (m, n) = self.two_d("clamp_max_cols", a)?;
        if bounds.len() != n {
            return Err(Error::Shape(format!("clamp_max_cols: {} bounds for {n} columns", bounds.len())));
        }
        let av = self.value(a).data();
        let out = (0..m * n).map(|k| av[k].min(bounds[k % n])).collect();
        let v = Tensor::from_raw(vec![m, n], out);
        self.push(v, Op::ClampMaxCols(a, Rc::new(bounds.to_vec())), &[a], "clamp_max_cols")
    }

    /// `max(a, c)` elementwise.
    pub fn clamp_min(&mut self, a: Var, c: f64) -> Result<Var> {
        let v = self.value(a).map(|x| x.max(c));
        self.push(v, Op::ClampMin(a, c), &[a], "clamp_min")
    }

    /// Element `idx` of the flattened tensor, as a `[1, 1]` scalar.
    pub fn select(&mut self, a: Var, idx: usize) -> Result<Var> {
        let n = self.value(a).numel();
        if idx >= n {
            return Err(Error::Shape(format!("select {idx} of {n}")));
        }
        let v = Tensor::scalar(self.value(a).data()[idx]);
        self.push(v, Op::Select(a, idx), &[a], "select")
    }

    /// Cosine similarity of the flattened tensors; 0 if either has zero norm.
    pub fn cosine(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).numel() != self.value(b).numel() {
            return Err(shape_err("cosine", self.shape(a), self.shape(b)));
        }
        let (av, bv) = (self.value(a).data(), self.value(b).data());
        let dot: f64 = av.iter().zip(bv).map(|(x, y)| x * y).sum();
        let na = av.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = bv.iter().map(|x| x * x).sum::<f64>().sqrt();
        let c = if na == 0.0 || nb == 0.0 { 0.0 } else { dot / (na * nb) };
        self.push(Tensor::scalar(c), Op::Cosine { a, b, na, nb }, &[a, b], "cosine")
    }

    /// Reverse sweep from the scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).numel() != 1 {
            return Err(Error::Shape(format!("backward from non-scalar {:?}", self.shape(loss))));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        if !self.nodes[loss.0].requires_grad {
            return Ok(Gradients { grads });
        }
        grads[loss.0] = Some(Tensor::filled(self.shape(loss), 1.0));
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
        }
        // leaves keep their gradients; intermediates were consumed above
        Ok(Gradients { grads })
    }

    fn acc(&self, grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn need(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.need(*a) {
                    self.acc(grads, *a, matmul_t(g, self.value(*b)));
                }
                if self.need(*b) {
                    self.acc(grads, *b, t_matmul(self.value(*a), g));
                }
            }
            Op::MatMulT(a, b) => {
                if self.need(*a) {
                    self.acc(grads, *a, matmul(g, self.value(*b)));
                }
                if self.need(*b) {
                    self.acc(grads, *b, t_matmul(g, self.value(*a)));
                }
            }
            Op::Transpose(a) => self.acc(grads, *a, g.transpose()),
            Op::Add(a, b) => {
                self.acc(grads, *a, g.clone());
                self.acc(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.acc(grads, *a, g.clone());
                self.acc(grads, *b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                if self.need(*a) {
                    self.acc(grads, *a, g.zip(self.value(*b), |x, y| x * y));
                }
                if self.need(*b) {
                    self.acc(grads, *b, g.zip(self.value(*a), |x, y| x * y));
                }
            }
            Op::AddRow(a, b) => {
                self.acc(grads, *a, g.clone());
                if self.need(*b) {
                    let n = g.cols();
                    let mut col = vec![0.0; n];
                    for i in 0..g.rows() {
                        for (c, x) in col.iter_mut().zip(g.row_slice(i)) {
                            *c += x;
                        }
                    }
                    let shape = self.shape(*b).to_vec();
                    self.acc(grads, *b, Tensor::from_raw(shape, col));
                }
            }
            Op::Scale(a, c) => self.acc(grads, *a, g.map(|x| x * c)),
            Op::Gelu(a) => self.acc(grads, *a, g.zip(self.value(*a), |gx, x| gx * gelu_grad(x))),
            Op::Exp(a) => self.acc(grads, *a, g.zip(out, |gx, y| gx * y)),
            Op::Log(a) => self.acc(grads, *a, g.zip(self.value(*a), |gx, x| gx / x)),
            Op::Recip(a) => self.acc(grads, *a, g.zip(out, |gx, y| -gx * y * y)),
            Op::SoftmaxRows(a) => {
                let (m, n) = (out.rows(), out.cols());
                let mut dx = vec![0.0; m * n];
                for i in 0..m {
                    let p = out.row_slice(i);
                    let gr = g.row_slice(i);
                    let dot: f64 = p.iter().zip(gr).map(|(x, y)| x * y).sum();
                    for j in 0..n {
                        dx[i * n + j] = p[j] * (gr[j] - dot);
                    }
                }
                self.acc(grads, *a, Tensor::from_raw(vec![m, n], dx));
            }
            Op::LayerNormRows { x, gamma, beta, xhat, inv_std } => {
                let (m, n) = (out.rows(), out.cols());
                let gam = self.value(*gamma).data();
                if self.need(*x) {
                    let mut dx = vec![0.0; m * n];
                    for i in 0..m {
                        let gr = g.row_slice(i);
                        let h = xhat.row_slice(i);
                        let dh: Vec<f64> = gr.iter().zip(gam).map(|(a, b)| a * b).collect();
                        let mean_dh = dh.iter().sum::<f64>() / n as f64;
                        let mean_dh_h = dh.iter().zip(h).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                        for j in 0..n {
                            dx[i * n + j] = inv_std[i] * (dh[j] - mean_dh - h[j] * mean_dh_h);
                        }
                    }
                    self.acc(grads, *x, Tensor::from_raw(vec![m, n], dx));
                }
                if self.need(*gamma) || self.need(*beta) {
                    let mut dg = vec![0.0; n];
                    let mut db = vec![0.0; n];
                    for i in 0..m {
                        for j in 0..n {
                            let gv = g.data()[i * n + j];
                            dg[j] += gv * xhat.data()[i * n + j];
                            db[j] += gv;
                        }
                    }
                    let gs = self.shape(*gamma).to_vec();
                    let bs = self.shape(*beta).to_vec();
                    self.acc(grads, *gamma, Tensor::from_raw(gs, dg));
                    self.acc(grads, *beta, Tensor::from_raw(bs, db));
                }
            }
            Op::CrossEntropy { logits, targets, ignore, probs, count } => {
                let scale = g.item() / *count as f64;
                let n = probs.cols();
                let mut d = probs.data().to_vec();
                for (i, &t) in targets.iter().enumerate() {
                    let row = &mut d[i * n..(i + 1) * n];
                    if Some(t) == *ignore {
                        row.iter_mut().for_each(|x| *x = 0.0);
                    } else {
                        row[t] -= 1.0;
                        row.iter_mut().for_each(|x| *x *= scale);
                    }
                }
                self.acc(grads, *logits, Tensor::from_raw(probs.shape().to_vec(), d));
            }
            Op::Embedding { table, ids } => {
                let shape = self.shape(*table).to_vec();
                let d = shape[1];
                let mut dt = vec![0.0; shape[0] * d];
                for (r, &id) in ids.iter().enumerate() {
                    for (t, x) in dt[id * d..(id + 1) * d].iter_mut().zip(g.row_slice(r)) {
                        *t += x;
                    }
                }
                self.acc(grads, *table, Tensor::from_raw(shape, dt));
            }
            Op::ConcatRows(parts) => {
                let n = g.cols();
                let mut r = 0;
                for &p in parts {
                    let pm = self.shape(p)[0];
                    if self.need(p) {
                        let data = g.data()[r * n..(r + pm) * n].to_vec();
                        self.acc(grads, p, Tensor::from_raw(vec![pm, n], data));
                    }
                    r += pm;
                }
            }
            Op::ConcatCols(parts) => {
                let m = g.rows();
                let mut c0 = 0;
                for &p in parts {
                    let pn = self.shape(p)[1];
                    if self.need(p) {
                        let mut data = Vec::with_capacity(m * pn);
                        for i in 0..m {
                            data.extend_from_slice(&g.row_slice(i)[c0..c0 + pn]);
                        }
                        self.acc(grads, p, Tensor::from_raw(vec![m, pn], data));
                    }
                    c0 += pn;
                }
            }
            Op::SliceRows(a, start) => {
                let shape = self.shape(*a).to_vec();
                let n = shape[1];
                let mut d = vec![0.0; shape[0] * n];
                d[start * n..start * n + g.numel()].copy_from_slice(g.data());
                self.acc(grads, *a, Tensor::from_raw(shape, d));
            }
            Op::SliceCols(a, start) => {
                let shape = self.shape(*a).to_vec();
                let (m, n) = (shape[0], shape[1]);
                let w = g.cols();
                let mut d = vec![0.0; m * n];
                for i in 0..m {
                    d[i * n + start..i * n + start + w].copy_from_slice(g.row_slice(i));
                }
                self.acc(grads, *a, Tensor::from_raw(shape, d));
            }
            Op::SelectCols(a, cols) => {
                let shape = self.shape(*a).to_vec();
                let (m, n) = (shape[0], shape[1]);
                let mut d = vec![0.0; m * n];
                for i in 0..m {
                    for (k, &c) in cols.iter().enumerate() {
                        d[i * n + c] += g.row_slice(i)[k];
                    }
                }
                self.acc(grads, *a, Tensor::from_raw(shape, d));
            }
            Op::Sum(a) => {
                let gv = g.item();
                self.acc(grads, *a, Tensor::filled(self.shape(*a), gv));
            }
            Op::Mean(a) => {
                let gv = g.item() / self.value(*a).numel() as f64;
                self.acc(grads, *a, Tensor::filled(self.shape(*a), gv));
            }
            Op::SumRows(a) | Op::MeanRows(a) => {
                let shape = self.shape(*a).to_vec();
                let m = shape[0];
                let s = if matches!(node.op, Op::MeanRows(_)) { 1.0 / m as f64 } else { 1.0 };
                let row: Vec<f64> = g.data().iter().map(|x| x * s).collect();
                let d = (0..m).flat_map(|_| row.iter().copied()).collect();
                self.acc(grads, *a, Tensor::from_raw(shape, d));
            }
            Op::ClampMaxCols(a, bounds) => {
                let n = bounds.len();
                let av = self.value(*a).data();
                let d = g.data().iter().enumerate().map(|(k, &gx)| if av[k] < bounds[k % n] { gx } else { 0.0 }).collect();
                self.acc(grads, *a, Tensor::from_raw(g.shape().to_vec(), d));
            }
            Op::ClampMin(a, c) => {
                let d = g.zip(self.value(*a), |gx, x| if x > *c { gx } else { 0.0 });
                self.acc(grads, *a, d);
            }
            Op::Select(a, idx) => {
                let mut d = Tensor::zeros(self.shape(*a));
                d.data_mut()[*idx] = g.item();
                self.acc(grads, *a, d);
            }
            Op::Cosine { a, b, na, nb } => {
                if *na == 0.0 || *nb == 0.0 {
                    return;
                }
                let gv = g.item();
                let c = out.item();
                let (av, bv) = (self.value(*a), self.value(*b));
                // d cos / da = b/(|a||b|) - cos * a/|a|^2
                let da = av.zip(bv, |x, y| gv * (y / (na * nb) - c * x / (na * na)));
                let db = bv.zip(av, |y, x| gv * (x / (na * nb) - c * y / (nb * nb)));
                self.acc(grads, *a, da);
                self.acc(grads, *b, db);
            }
        }
    }
}
