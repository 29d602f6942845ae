use std::collections::HashMap;
use std::sync::Arc;

use super::tensor::{gemm, SparseRows, Tensor};
use crate::error::{Error, Result};
use crate::geometry::scalar;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(&self) -> usize {
        self.0
    }
}

/// Elementwise scalar functions supported by the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Tanh,
    Exp,
    Ln,
    Sqrt,
    Square,
    Sinh,
    Cosh,
    /// `arccosh` with the argument clamped to `[1, ∞)`.
    Acosh,
    Sigmoid,
    TanhRatio,
    ArtanhRatio,
    SinhRatio,
    AsinhRatio,
    LogSinhRatio,
}

impl UnaryFn {
    fn eval(self, x: f64) -> f64 {
        match self {
            UnaryFn::Tanh => x.tanh(),
            UnaryFn::Exp => x.exp(),
            UnaryFn::Ln => x.ln(),
            UnaryFn::Sqrt => x.sqrt(),
            UnaryFn::Square => x * x,
            UnaryFn::Sinh => x.sinh(),
            UnaryFn::Cosh => x.cosh(),
            UnaryFn::Acosh => scalar::clamp_arccosh_arg(x).acosh(),
            UnaryFn::Sigmoid => sigmoid(x),
            UnaryFn::TanhRatio => scalar::tanh_ratio(x),
            UnaryFn::ArtanhRatio => scalar::artanh_ratio(x),
            UnaryFn::SinhRatio => scalar::sinh_ratio(x),
            UnaryFn::AsinhRatio => scalar::asinh_ratio(x),
            UnaryFn::LogSinhRatio => scalar::log_sinh_ratio(x),
        }
    }

    /// Derivative given input `x` and output `y`.
    fn deriv(self, x: f64, y: f64) -> f64 {
        match self {
            UnaryFn::Tanh => 1.0 - y * y,
            UnaryFn::Exp => y,
            UnaryFn::Ln => 1.0 / x,
            UnaryFn::Sqrt => {
                if y > 0.0 {
                    0.5 / y
                } else {
                    0.0
                }
            }
            UnaryFn::Square => 2.0 * x,
            UnaryFn::Sinh => x.cosh(),
            UnaryFn::Cosh => x.sinh(),
            UnaryFn::Acosh => {
                if x <= 1.0 {
                    0.0
                } else {
                    1.0 / (x * x - 1.0).sqrt()
                }
            }
            UnaryFn::Sigmoid => y * (1.0 - y),
            UnaryFn::TanhRatio => scalar::tanh_ratio_deriv(x),
            UnaryFn::ArtanhRatio => scalar::artanh_ratio_deriv(x),
            UnaryFn::SinhRatio => scalar::sinh_ratio_deriv(x),
            UnaryFn::AsinhRatio => scalar::asinh_ratio_deriv(x),
            UnaryFn::LogSinhRatio => scalar::log_sinh_ratio_deriv(x),
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Logit clamp applied inside the binary cross-entropy node.
pub const LOGIT_CLAMP: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinaryFn {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    SparseMatMul(Arc<SparseRows>, NodeId),
    Binary(BinaryFn, NodeId, NodeId),
    Neg(NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    Unary(UnaryFn, NodeId),
    RowNorm(NodeId),
    RowSum(NodeId),
    Sum(NodeId),
    ColSlice(NodeId, usize),
    ConcatCols(NodeId, NodeId),
    ProjectBall { input: NodeId, max_norm: f64, active: Vec<bool> },
    BceWithLogits(NodeId, NodeId),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
    name: Option<String>,
    requires_grad: bool,
}

/// Records a forward computation over whole arrays and replays it backwards.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order. Operands of binary ops broadcast along unit rows or
/// unit columns.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    non_finite: Option<String>,
    projection_active: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        if self.non_finite.is_none() && !value.is_finite() {
            self.non_finite = Some(format!("node {} ({})", self.nodes.len(), op_name(&op)));
        }
        let requires_grad = match &op {
            Op::Leaf => false,
            _ => self.op_inputs(&op).iter().any(|id| self.nodes[id.0].requires_grad),
        };
        self.nodes.push(Node {
            op,
            value,
            name: None,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn op_inputs(&self, op: &Op) -> Vec<NodeId> {
        match op {
            Op::Leaf => vec![],
            Op::MatMul(a, b) | Op::Binary(_, a, b) | Op::ConcatCols(a, b) | Op::BceWithLogits(a, b) => {
                vec![*a, *b]
            }
            Op::SparseMatMul(_, w) => vec![*w],
            Op::Neg(a)
            | Op::Scale(a, _)
            | Op::AddScalar(a)
            | Op::Unary(_, a)
            | Op::RowNorm(a)
            | Op::RowSum(a)
            | Op::Sum(a)
            | Op::ColSlice(a, _) => vec![*a],
            Op::ProjectBall { input, .. } => vec![*input],
        }
    }

    /// Named trainable input; its gradient is reported under `name`.
    pub fn param(&mut self, name: &str, value: Tensor) -> NodeId {
        let id = self.push(Op::Leaf, value);
        let node = &mut self.nodes[id.0];
        node.name = Some(name.to_string());
        node.requires_grad = true;
        id
    }

    /// Input that does not receive a gradient.
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Whether any norm-clipping node rescaled at least one row.
    pub fn projection_active(&self) -> bool {
        self.projection_active
    }

    /// First node whose value was non-finite, if any.
    pub fn non_finite(&self) -> Option<&str> {
        self.non_finite.as_deref()
    }

    pub fn check_finite(&self) -> Result<()> {
        match &self.non_finite {
            Some(n) => Err(Error::NonFinite(n.clone())),
            None => Ok(()),
        }
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self
            .value(a)
            .matmul(self.value(b))
            .expect("matmul operand shapes");
        self.push(Op::MatMul(a, b), value)
    }

    /// Constant sparse matrix times a dense node.
    pub fn sparse_matmul(&mut self, x: Arc<SparseRows>, w: NodeId) -> NodeId {
        assert_eq!(x.cols, self.value(w).rows(), "sparse matmul shapes");
        let value = x.matmul(self.value(w));
        self.push(Op::SparseMatMul(x, w), value)
    }

    fn binary(&mut self, f: BinaryFn, a: NodeId, b: NodeId) -> NodeId {
        let (va, vb) = (self.value(a), self.value(b));
        let (rows, cols) = broadcast_shape(va.shape(), vb.shape());
        let mut out = Tensor::zeros(rows, cols);
        {
            let data = out.data_mut();
            for i in 0..rows {
                for j in 0..cols {
                    let x = bget(va, i, j);
                    let y = bget(vb, i, j);
                    data[i * cols + j] = match f {
                        BinaryFn::Add => x + y,
                        BinaryFn::Sub => x - y,
                        BinaryFn::Mul => x * y,
                        BinaryFn::Div => x / y,
                    };
                }
            }
        }
        self.push(Op::Binary(f, a, b), out)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(BinaryFn::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(BinaryFn::Sub, a, b)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(BinaryFn::Mul, a, b)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(BinaryFn::Div, a, b)
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| -x);
        self.push(Op::Neg(a), v)
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        let v = self.value(a).map(|x| x * s);
        self.push(Op::Scale(a, s), v)
    }

    pub fn add_scalar(&mut self, a: NodeId, s: f64) -> NodeId {
        let v = self.value(a).map(|x| x + s);
        self.push(Op::AddScalar(a), v)
    }

    pub fn unary(&mut self, f: UnaryFn, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| f.eval(x));
        self.push(Op::Unary(f, a), v)
    }

    /// Euclidean norm of each row (rows × 1). The gradient at a zero row is zero.
    pub fn row_norm(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        let v = Tensor::column((0..va.rows()).map(|i| scalar::norm(va.row(i))).collect());
        self.push(Op::RowNorm(a), v)
    }

    /// Sum of each row (rows × 1).
    pub fn row_sum(&mut self, a: NodeId) -> NodeId {
        let va = self.value(a);
        let v = Tensor::column((0..va.rows()).map(|i| va.row(i).iter().sum()).collect());
        self.push(Op::RowSum(a), v)
    }

    /// Row-wise dot product (rows × 1), with broadcasting.
    pub fn row_dot(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let p = self.mul(a, b);
        self.row_sum(p)
    }

    pub fn row_norm_sq(&mut self, a: NodeId) -> NodeId {
        self.row_dot(a, a)
    }

    /// Sum of all entries (1 × 1).
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let v = Tensor::scalar(self.value(a).data().iter().sum());
        self.push(Op::Sum(a), v)
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let n = self.value(a).len() as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    /// Columns `start..start + len`.
    pub fn col_slice(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let va = self.value(a);
        assert!(start + len <= va.cols(), "column slice out of range");
        let mut data = Vec::with_capacity(va.rows() * len);
        for i in 0..va.rows() {
            data.extend_from_slice(&va.row(i)[start..start + len]);
        }
        let v = Tensor::from_vec(va.rows(), len, data).expect("slice shape");
        self.push(Op::ColSlice(a, start), v)
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.rows(), vb.rows(), "concat row mismatch");
        let cols = va.cols() + vb.cols();
        let mut data = Vec::with_capacity(va.rows() * cols);
        for i in 0..va.rows() {
            data.extend_from_slice(va.row(i));
            data.extend_from_slice(vb.row(i));
        }
        let v = Tensor::from_vec(va.rows(), cols, data).expect("concat shape");
        self.push(Op::ConcatCols(a, b), v)
    }

    /// Row-wise norm clipping to `max_norm`. Where a row is rescaled the
    /// gradient is the Jacobian of `x ↦ m x / ‖x‖`.
    pub fn project_ball(&mut self, a: NodeId, max_norm: f64) -> NodeId {
        let va = self.value(a);
        let mut out = va.clone();
        let mut active = vec![false; va.rows()];
        if max_norm.is_finite() {
            for (i, flag) in active.iter_mut().enumerate() {
                let n = scalar::norm(va.row(i));
                if n > max_norm {
                    *flag = true;
                    let s = max_norm / n;
                    out.row_mut(i).iter_mut().for_each(|v| *v *= s);
                }
            }
        }
        if active.iter().any(|&f| f) {
            self.projection_active = true;
        }
        self.push(
            Op::ProjectBall {
                input: a,
                max_norm,
                active,
            },
            out,
        )
    }

    /// Row-wise mean binary cross-entropy between logits and `targets`
    /// (rows × 1). Logits are clamped to `±LOGIT_CLAMP`.
    pub fn bce_with_logits(&mut self, logits: NodeId, targets: NodeId) -> NodeId {
        let (l, t) = (self.value(logits), self.value(targets));
        assert_eq!(l.shape(), t.shape(), "bce shapes");
        let cols = l.cols() as f64;
        let v = Tensor::column(
            (0..l.rows())
                .map(|i| {
                    l.row(i)
                        .iter()
                        .zip(t.row(i))
                        .map(|(&x, &y)| bce_term(x, y))
                        .sum::<f64>()
                        / cols
                })
                .collect(),
        );
        self.push(Op::BceWithLogits(logits, targets), v)
    }

    /// Reverse sweep from a scalar node.
    pub fn backward(&self, root: NodeId) -> Result<Gradients> {
        self.backward_seeded(root, 1.0)
    }

    pub fn backward_seeded(&self, root: NodeId, seed: f64) -> Result<Gradients> {
        if root.0 >= self.nodes.len() {
            return Err(Error::InvalidArgument(
                "backward called on a node that was never recorded".into(),
            ));
        }
        self.check_finite()?;
        let rv = &self.nodes[root.0].value;
        if rv.shape() != (1, 1) {
            return Err(Error::InvalidArgument(format!(
                "backward needs a scalar root, got shape {:?}",
                rv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor::scalar(seed));
        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            if let Op::Leaf = node.op {
                grads[idx] = Some(g);
                continue;
            }
            self.propagate(idx, &g, &mut grads);
        }
        let mut by_name = HashMap::new();
        let mut by_node = HashMap::new();
        for (idx, g) in grads.into_iter().enumerate() {
            let Some(g) = g else { continue };
            if !g.is_finite() {
                return Err(Error::NonFinite(format!("gradient of node {idx}")));
            }
            if let Some(name) = &self.nodes[idx].name {
                by_name.insert(name.clone(), g.clone());
            }
            by_node.insert(idx, g);
        }
        // parameters not reached by the sweep get explicit zeros
        for (idx, node) in self.nodes.iter().enumerate().take(root.0 + 1) {
            if let (Op::Leaf, true, Some(name)) = (&node.op, node.requires_grad, &node.name) {
                by_name
                    .entry(name.clone())
                    .or_insert_with(|| Tensor::zeros(node.value.rows(), node.value.cols()));
                by_node
                    .entry(idx)
                    .or_insert_with(|| Tensor::zeros(node.value.rows(), node.value.cols()));
            }
        }
        Ok(Gradients { by_name, by_node })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], id: NodeId, g: Tensor) {
        if !self.nodes[id.0].requires_grad {
            return;
        }
        match &mut grads[id.0] {
            Some(acc) => acc.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn propagate(&self, idx: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let (m, k, n) = (va.rows(), va.cols(), vb.cols());
                if self.nodes[a.0].requires_grad {
                    // dA = G · Bᵀ
                    let mut da = Tensor::zeros(m, k);
                    gemm(m, n, k, (g.data(), n as isize, 1), (vb.data(), 1, n as isize), da.data_mut());
                    self.accumulate(grads, *a, da);
                }
                if self.nodes[b.0].requires_grad {
                    // dB = Aᵀ · G
                    let mut db = Tensor::zeros(k, n);
                    gemm(k, m, n, (va.data(), 1, k as isize), (g.data(), n as isize, 1), db.data_mut());
                    self.accumulate(grads, *b, db);
                }
            }
            Op::SparseMatMul(x, w) => {
                let dw = x.transpose_matmul(g);
                self.accumulate(grads, *w, dw);
            }
            Op::Binary(f, a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                let (rows, cols) = g.shape();
                let mut ga = Tensor::zeros(va.rows(), va.cols());
                let mut gb = Tensor::zeros(vb.rows(), vb.cols());
                let need_a = self.nodes[a.0].requires_grad;
                let need_b = self.nodes[b.0].requires_grad;
                for i in 0..rows {
                    for j in 0..cols {
                        let gij = g.get(i, j);
                        let x = bget(va, i, j);
                        let y = bget(vb, i, j);
                        let (da, db) = match f {
                            BinaryFn::Add => (gij, gij),
                            BinaryFn::Sub => (gij, -gij),
                            BinaryFn::Mul => (gij * y, gij * x),
                            BinaryFn::Div => (gij / y, -gij * x / (y * y)),
                        };
                        if need_a {
                            badd(&mut ga, i, j, da);
                        }
                        if need_b {
                            badd(&mut gb, i, j, db);
                        }
                    }
                }
                if need_a {
                    self.accumulate(grads, *a, ga);
                }
                if need_b {
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::Neg(a) => self.accumulate(grads, *a, g.map(|v| -v)),
            Op::Scale(a, s) => {
                let s = *s;
                self.accumulate(grads, *a, g.map(|v| v * s))
            }
            Op::AddScalar(a) => self.accumulate(grads, *a, g.clone()),
            Op::Unary(f, a) => {
                let x = self.value(*a);
                let y = &node.value;
                let mut out = g.clone();
                for ((o, &xi), &yi) in out.data_mut().iter_mut().zip(x.data()).zip(y.data()) {
                    *o *= f.deriv(xi, yi);
                }
                self.accumulate(grads, *a, out);
            }
            Op::RowNorm(a) => {
                let x = self.value(*a);
                let mut out = Tensor::zeros(x.rows(), x.cols());
                for i in 0..x.rows() {
                    let n = node.value.get(i, 0);
                    if n > 0.0 {
                        let s = g.get(i, 0) / n;
                        for (o, xi) in out.row_mut(i).iter_mut().zip(x.row(i)) {
                            *o = s * xi;
                        }
                    }
                }
                self.accumulate(grads, *a, out);
            }
            Op::RowSum(a) => {
                let x = self.value(*a);
                let mut out = Tensor::zeros(x.rows(), x.cols());
                for i in 0..x.rows() {
                    let gi = g.get(i, 0);
                    out.row_mut(i).iter_mut().for_each(|o| *o = gi);
                }
                self.accumulate(grads, *a, out);
            }
            Op::Sum(a) => {
                let x = self.value(*a);
                self.accumulate(grads, *a, Tensor::filled(x.rows(), x.cols(), g.item()));
            }
            Op::ColSlice(a, start) => {
                let x = self.value(*a);
                let mut out = Tensor::zeros(x.rows(), x.cols());
                let len = g.cols();
                for i in 0..x.rows() {
                    out.row_mut(i)[*start..*start + len].copy_from_slice(g.row(i));
                }
                self.accumulate(grads, *a, out);
            }
            Op::ConcatCols(a, b) => {
                let ca = self.value(*a).cols();
                let cb = self.value(*b).cols();
                let rows = g.rows();
                let mut ga = Vec::with_capacity(rows * ca);
                let mut gb = Vec::with_capacity(rows * cb);
                for i in 0..rows {
                    ga.extend_from_slice(&g.row(i)[..ca]);
                    gb.extend_from_slice(&g.row(i)[ca..]);
                }
                self.accumulate(grads, *a, Tensor::from_vec(rows, ca, ga).expect("shape"));
                self.accumulate(grads, *b, Tensor::from_vec(rows, cb, gb).expect("shape"));
            }
            Op::ProjectBall {
                input,
                max_norm,
                active,
            } => {
                let x = self.value(*input);
                let mut out = g.clone();
                for (i, &on) in active.iter().enumerate() {
                    if !on {
                        continue;
                    }
                    let xr = x.row(i);
                    let n = scalar::norm(xr);
                    let gr = g.row(i);
                    let proj = scalar::dot(xr, gr) / (n * n);
                    let s = max_norm / n;
                    for ((o, &gi), &xi) in out.row_mut(i).iter_mut().zip(gr).zip(xr) {
                        *o = s * (gi - xi * proj);
                    }
                }
                self.accumulate(grads, *input, out);
            }
            Op::BceWithLogits(l, t) => {
                let (lv, tv) = (self.value(*l), self.value(*t));
                let inv = 1.0 / lv.cols() as f64;
                let mut out = Tensor::zeros(lv.rows(), lv.cols());
                for i in 0..lv.rows() {
                    let gi = g.get(i, 0) * inv;
                    for ((o, &x), &y) in out.row_mut(i).iter_mut().zip(lv.row(i)).zip(tv.row(i)) {
                        *o = if x.abs() > LOGIT_CLAMP {
                            0.0
                        } else {
                            gi * (sigmoid(x) - y)
                        };
                    }
                }
                self.accumulate(grads, *l, out);
            }
        }
    }
}

/// `-[t log σ(l) + (1-t) log(1-σ(l))]` in the stable logit form.
pub(crate) fn bce_term(logit: f64, target: f64) -> f64 {
    let x = logit.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    x.max(0.0) - x * target + (-x.abs()).exp().ln_1p()
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::MatMul(..) => "matmul",
        Op::SparseMatMul(..) => "sparse_matmul",
        Op::Binary(f, ..) => match f {
            BinaryFn::Add => "add",
            BinaryFn::Sub => "sub",
            BinaryFn::Mul => "mul",
            BinaryFn::Div => "div",
        },
        Op::Neg(_) => "neg",
        Op::Scale(..) => "scale",
        Op::AddScalar(..) => "add_scalar",
        Op::Unary(..) => "unary",
        Op::RowNorm(_) => "row_norm",
        Op::RowSum(_) => "row_sum",
        Op::Sum(_) => "sum",
        Op::ColSlice(..) => "col_slice",
        Op::ConcatCols(..) => "concat_cols",
        Op::ProjectBall { .. } => "project_ball",
        Op::BceWithLogits(..) => "bce_with_logits",
    }
}

fn broadcast_shape(a: (usize, usize), b: (usize, usize)) -> (usize, usize) {
    let dim = |x: usize, y: usize| {
        assert!(x == y || x == 1 || y == 1, "incompatible broadcast {a:?} vs {b:?}");
        x.max(y)
    };
    (dim(a.0, b.0), dim(a.1, b.1))
}

#[inline]
fn bget(t: &Tensor, i: usize, j: usize) -> f64 {
    let r = if t.rows() == 1 { 0 } else { i };
    let c = if t.cols() == 1 { 0 } else { j };
    t.get(r, c)
}

#[inline]
fn badd(t: &mut Tensor, i: usize, j: usize, v: f64) {
    let r = if t.rows() == 1 { 0 } else { i };
    let c = if t.cols() == 1 { 0 } else { j };
    let cur = t.get(r, c);
    t.set(r, c, cur + v);
}

/// Gradients produced by [`Tape::backward`], keyed by parameter name and node.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    by_name: HashMap<String, Tensor>,
    by_node: HashMap<usize, Tensor>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.by_name.get(name)
    }

    pub fn node(&self, id: NodeId) -> Option<&Tensor> {
        self.by_node.get(&id.0)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.by_name.keys().map(String::as_str)
    }

    pub fn into_named(self) -> HashMap<String, Tensor> {
        self.by_name
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_norm_gradient_is_two_x() {
        let mut tape = Tape::new();
        let x = tape.param("x", Tensor::row_vector(vec![1.0, -2.0, 0.5]));
        let n2 = tape.row_norm_sq(x);
        let s = tape.sum(n2);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get("x").unwrap().data(), &[2.0, -4.0, 1.0]);
    }

    #[test]
    fn fan_out_accumulates() {
        let mut tape = Tape::new();
        let x = tape.param("x", Tensor::scalar(3.0));
        let y = tape.mul(x, x);
        let z = tape.add(y, x);
        let g = tape.backward(z).unwrap();
        assert_eq!(g.get("x").unwrap().item(), 7.0);
    }

    #[test]
    fn uniform_logits_give_ln2() {
        let mut tape = Tape::new();
        let w = tape.param("w", Tensor::zeros(3, 4));
        let x = tape.constant(Tensor::filled(2, 3, 1.0));
        let l = tape.matmul(x, w);
        let t = tape.constant(Tensor::from_vec(2, 4, vec![1., 0., 0., 1., 0., 0., 0., 0.]).unwrap());
        let b = tape.bce_with_logits(l, t);
        for i in 0..2 {
            assert!((tape.value(b).get(i, 0) - std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn backward_errors() {
        let mut tape = Tape::new();
        let x = tape.param("x", Tensor::row_vector(vec![1.0, 2.0]));
        assert!(tape.backward(x).is_err());
        assert!(tape.backward(NodeId(10)).is_err());
        let l = tape.unary(UnaryFn::Ln, x);
        let n = tape.neg(l);
        let m = tape.unary(UnaryFn::Sqrt, n);
        let s = tape.sum(m);
        assert!(tape.non_finite().is_some());
        assert!(matches!(tape.backward(s), Err(Error::NonFinite(_))));
    }

    #[test]
    fn bce_saturates() {
        assert!(bce_term(40.0, 1.0) < 1e-15);
        assert!(bce_term(1e6, 1.0) < 1e-15);
        assert!((bce_term(0.0, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn unreached_params_get_zero_gradients() {
        let mut tape = Tape::new();
        let x = tape.param("x", Tensor::scalar(1.0));
        let _unused = tape.param("u", Tensor::row_vector(vec![1.0, 2.0]));
        let y = tape.scale(x, 3.0);
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get("u").unwrap().data(), &[0.0, 0.0]);
    }
}
