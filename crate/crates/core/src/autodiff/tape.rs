//! The recording tape: forward ops append records, `backward` replays them
//! in reverse.
//!
//! Buffers are rank-2 row-major `f64` arenas (vectors are 1×n). Record order
//! is a topological order by construction since an op can only reference
//! already-created nodes.

use std::collections::HashMap;

use crate::autodiff::kernels;
use crate::autodiff::params::{ParamId, ParameterSet};
use crate::error::{Error, Result};

/// Index of a value buffer on the tape.
pub type NodeId = usize;

struct Buf {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

enum Op {
    Matmul { a: NodeId, b: NodeId, out: NodeId },
    /// out = A · Bᵀ (B stored n×k for an m×k · k×n product).
    MatmulBt { a: NodeId, b: NodeId, out: NodeId },
    /// Row-broadcast bias add: x (m×n) + b (1×n).
    AddBias { x: NodeId, bias: NodeId, out: NodeId },
    Add { a: NodeId, b: NodeId, out: NodeId },
    Sub { a: NodeId, b: NodeId, out: NodeId },
    Mul { a: NodeId, b: NodeId, out: NodeId },
    Scale { x: NodeId, c: f64, out: NodeId },
    Relu { x: NodeId, out: NodeId },
    Sigmoid { x: NodeId, out: NodeId },
    Tanh { x: NodeId, out: NodeId },
    Exp { x: NodeId, out: NodeId },
    SoftmaxRows { x: NodeId, out: NodeId },
    LogSumExpRow { x: NodeId, out: NodeId },
    LayerNorm { x: NodeId, gain: NodeId, bias: NodeId, out: NodeId, mean: Vec<f64>, inv_std: Vec<f64> },
    SliceCols { x: NodeId, out: NodeId, start: usize, len: usize },
    ConcatCols { parts: Vec<NodeId>, out: NodeId },
    ConcatRows { parts: Vec<NodeId>, out: NodeId },
    EmbedRow { table: NodeId, index: usize, out: NodeId },
    SumAll { x: NodeId, out: NodeId },
    Gather { x: NodeId, index: usize, out: NodeId },
    Clamp { x: NodeId, lo: f64, hi: f64, out: NodeId },
    Min2 { a: NodeId, b: NodeId, out: NodeId },
}

/// Reverse-mode tape. Create with [`Tape::new`] for recording or
/// [`Tape::no_grad`] for value-only forward passes that run the exact same
/// kernels without the op log.
pub struct Tape {
    bufs: Vec<Buf>,
    ops: Vec<Op>,
    grads: Vec<Option<Vec<f64>>>,
    recording: bool,
    param_nodes: HashMap<ParamId, NodeId>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { bufs: Vec::new(), ops: Vec::new(), grads: Vec::new(), recording: true, param_nodes: HashMap::new() }
    }

    /// Value-only mode: forward results are identical, no ops are logged and
    /// `backward` is a contract error.
    pub fn no_grad() -> Self {
        Tape { recording: false, ..Tape::new() }
    }

    fn push_buf(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> NodeId {
        debug_assert_eq!(data.len(), rows * cols);
        let id = self.bufs.len();
        self.bufs.push(Buf { rows, cols, data });
        self.grads.push(None);
        id
    }

    fn record(&mut self, op: Op) {
        if self.recording {
            self.ops.push(op);
        }
    }

    // ── node creation ──────────────────────────────────────────────

    pub fn constant(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> Result<NodeId> {
        if data.len() != rows * cols {
            return Err(Error::Dim(format!(
                "constant data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(self.push_buf(rows, cols, data))
    }

    pub fn scalar(&mut self, v: f64) -> NodeId {
        self.push_buf(1, 1, vec![v])
    }

    /// Register a parameter as a leaf node (cached per tape, so reuse within
    /// one graph accumulates gradients on the same leaf).
    pub fn param(&mut self, ps: &ParameterSet, id: ParamId) -> NodeId {
        if let Some(&n) = self.param_nodes.get(&id) {
            return n;
        }
        let t = ps.value(id);
        let n = self.push_buf(t.rows(), t.cols(), t.data().to_vec());
        self.param_nodes.insert(id, n);
        n
    }

    // ── accessors ──────────────────────────────────────────────────

    pub fn value(&self, n: NodeId) -> &[f64] {
        &self.bufs[n].data
    }

    pub fn shape(&self, n: NodeId) -> (usize, usize) {
        (self.bufs[n].rows, self.bufs[n].cols)
    }

    pub fn grad(&self, n: NodeId) -> Option<&[f64]> {
        self.grads[n].as_deref()
    }

    fn dims(&self, n: NodeId) -> (usize, usize) {
        (self.bufs[n].rows, self.bufs[n].cols)
    }

    // ── ops ────────────────────────────────────────────────────────

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = self.dims(a);
        let (k2, n) = self.dims(b);
        if k != k2 {
            return Err(Error::Dim(format!("matmul inner dims disagree: {m}x{k} · {k2}x{n}")));
        }
        let data = kernels::matmul(self.value(a), self.value(b), m, k, n);
        let out = self.push_buf(m, n, data);
        self.record(Op::Matmul { a, b, out });
        Ok(out)
    }

    /// out = A (m×k) · Bᵀ where B is n×k.
    pub fn matmul_bt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = self.dims(a);
        let (n, k2) = self.dims(b);
        if k != k2 {
            return Err(Error::Dim(format!("matmul_bt inner dims disagree: {m}x{k} · ({n}x{k2})ᵀ")));
        }
        let data = kernels::matmul_bt(self.value(a), self.value(b), m, k, n);
        let out = self.push_buf(m, n, data);
        self.record(Op::MatmulBt { a, b, out });
        Ok(out)
    }

    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        let (m, n) = self.dims(x);
        let (br, bc) = self.dims(bias);
        if br != 1 || bc != n {
            return Err(Error::Dim(format!("bias {br}x{bc} does not broadcast over {m}x{n}")));
        }
        let mut data = self.value(x).to_vec();
        let b = &self.bufs[bias].data;
        for r in 0..m {
            for c in 0..n {
                data[r * n + c] += b[c];
            }
        }
        let out = self.push_buf(m, n, data);
        self.record(Op::AddBias { x, bias, out });
        Ok(out)
    }

    fn same_shape(&self, a: NodeId, b: NodeId, what: &str) -> Result<(usize, usize)> {
        let (ra, ca) = self.dims(a);
        let (rb, cb) = self.dims(b);
        if (ra, ca) != (rb, cb) {
            return Err(Error::Dim(format!("{what} shapes disagree: {ra}x{ca} vs {rb}x{cb}")));
        }
        Ok((ra, ca))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (r, c) = self.same_shape(a, b, "add")?;
        let data: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        let out = self.push_buf(r, c, data);
        self.record(Op::Add { a, b, out });
        Ok(out)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (r, c) = self.same_shape(a, b, "sub")?;
        let data: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x - y).collect();
        let out = self.push_buf(r, c, data);
        self.record(Op::Sub { a, b, out });
        Ok(out)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (r, c) = self.same_shape(a, b, "mul")?;
        let data: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        let out = self.push_buf(r, c, data);
        self.record(Op::Mul { a, b, out });
        Ok(out)
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        let (r, cl) = self.dims(x);
        let data: Vec<f64> = self.value(x).iter().map(|v| v * c).collect();
        let out = self.push_buf(r, cl, data);
        self.record(Op::Scale { x, c, out });
        out
    }

    /// Elementwise max(x, 0); subgradient at 0 is 0.
    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let (r, c) = self.dims(x);
        let data: Vec<f64> = self.value(x).iter().map(|v| v.max(0.0)).collect();
        let out = self.push_buf(r, c, data);
        self.record(Op::Relu { x, out });
        out
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let (r, c) = self.dims(x);
        let data: Vec<f64> = self.value(x).iter().map(|&v| kernels::sigmoid(v)).collect();
        let out = self.push_buf(r, c, data);
        self.record(Op::Sigmoid { x, out });
        out
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let (r, c) = self.dims(x);
        let data: Vec<f64> = self.value(x).iter().map(|v| v.tanh()).collect();
        let out = self.push_buf(r, c, data);
        self.record(Op::Tanh { x, out });
        out
    }

    pub fn exp(&mut self, x: NodeId) -> NodeId {
        let (r, c) = self.dims(x);
        let data: Vec<f64> = self.value(x).iter().map(|v| v.exp()).collect();
        let out = self.push_buf(r, c, data);
        self.record(Op::Exp { x, out });
        out
    }

    /// Row-wise softmax, stabilized by max-subtraction.
    pub fn softmax_rows(&mut self, x: NodeId) -> Result<NodeId> {
        let (r, c) = self.dims(x);
        if c == 0 {
            return Err(Error::Dim("softmax over an empty axis".into()));
        }
        let data = kernels::softmax_rows(self.value(x), r, c);
        let out = self.push_buf(r, c, data);
        self.record(Op::SoftmaxRows { x, out });
        Ok(out)
    }

    /// 1×n → 1×1 log-sum-exp.
    pub fn logsumexp_row(&mut self, x: NodeId) -> Result<NodeId> {
        let (r, c) = self.dims(x);
        if r != 1 || c == 0 {
            return Err(Error::Dim(format!("logsumexp_row expects 1×n, got {r}x{c}")));
        }
        let v = kernels::logsumexp(self.value(x));
        let out = self.push_buf(1, 1, vec![v]);
        self.record(Op::LogSumExpRow { x, out });
        Ok(out)
    }

    /// Per-row normalization to zero mean / unit variance, then affine
    /// (gain, bias both 1×n).
    pub fn layer_norm(&mut self, x: NodeId, gain: NodeId, bias: NodeId, eps: f64) -> Result<NodeId> {
        let (r, c) = self.dims(x);
        for (n, what) in [(gain, "gain"), (bias, "bias")] {
            let (gr, gc) = self.dims(n);
            if gr != 1 || gc != c {
                return Err(Error::Dim(format!("layer_norm {what} is {gr}x{gc}, expected 1x{c}")));
            }
        }
        let (normed, mean, inv_std) = kernels::layer_norm_rows(self.value(x), r, c, eps);
        let g = &self.bufs[gain].data;
        let b = &self.bufs[bias].data;
        let mut data = vec![0.0; r * c];
        for rr in 0..r {
            for cc in 0..c {
                data[rr * c + cc] = normed[rr * c + cc] * g[cc] + b[cc];
            }
        }
        let out = self.push_buf(r, c, data);
        self.record(Op::LayerNorm { x, gain, bias, out, mean, inv_std });
        Ok(out)
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let (r, c) = self.dims(x);
        if start + len > c {
            return Err(Error::Dim(format!("slice {start}..{} out of {c} columns", start + len)));
        }
        let src = &self.bufs[x].data;
        let mut data = vec![0.0; r * len];
        for rr in 0..r {
            data[rr * len..(rr + 1) * len].copy_from_slice(&src[rr * c + start..rr * c + start + len]);
        }
        let out = self.push_buf(r, len, data);
        self.record(Op::SliceCols { x, out, start, len });
        Ok(out)
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::Contract("concat_cols of zero parts".into()));
        }
        let r = self.dims(parts[0]).0;
        let mut total = 0;
        for &p in parts {
            let (pr, pc) = self.dims(p);
            if pr != r {
                return Err(Error::Dim(format!("concat_cols row mismatch: {pr} vs {r}")));
            }
            total += pc;
        }
        let mut data = vec![0.0; r * total];
        let mut off = 0;
        for &p in parts {
            let (_, pc) = self.dims(p);
            for rr in 0..r {
                let src = &self.bufs[p].data[rr * pc..(rr + 1) * pc];
                data[rr * total + off..rr * total + off + pc].copy_from_slice(src);
            }
            off += pc;
        }
        let out = self.push_buf(r, total, data);
        self.record(Op::ConcatCols { parts: parts.to_vec(), out });
        Ok(out)
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::Contract("concat_rows of zero parts".into()));
        }
        let c = self.dims(parts[0]).1;
        let mut total = 0;
        for &p in parts {
            let (pr, pc) = self.dims(p);
            if pc != c {
                return Err(Error::Dim(format!("concat_rows col mismatch: {pc} vs {c}")));
            }
            total += pr;
        }
        let mut data = Vec::with_capacity(total * c);
        for &p in parts {
            data.extend_from_slice(&self.bufs[p].data);
        }
        let out = self.push_buf(total, c, data);
        self.record(Op::ConcatRows { parts: parts.to_vec(), out });
        Ok(out)
    }

    /// Select one row of an embedding table as a 1×dim node.
    pub fn embed_row(&mut self, table: NodeId, index: usize) -> Result<NodeId> {
        let (rows, dim) = self.dims(table);
        if index >= rows {
            return Err(Error::Contract(format!("embedding index {index} out of {rows} rows")));
        }
        let data = self.bufs[table].data[index * dim..(index + 1) * dim].to_vec();
        let out = self.push_buf(1, dim, data);
        self.record(Op::EmbedRow { table, index, out });
        Ok(out)
    }

    pub fn sum_all(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).iter().sum();
        let out = self.push_buf(1, 1, vec![v]);
        self.record(Op::SumAll { x, out });
        out
    }

    /// Mean over all entries.
    pub fn mean_all(&mut self, x: NodeId) -> NodeId {
        let n = self.bufs[x].data.len();
        let s = self.sum_all(x);
        self.scale(s, 1.0 / n as f64)
    }

    /// Pick one element (flat index) as a 1×1 node.
    pub fn gather(&mut self, x: NodeId, index: usize) -> Result<NodeId> {
        if index >= self.bufs[x].data.len() {
            return Err(Error::Contract(format!("gather index {index} out of bounds")));
        }
        let v = self.bufs[x].data[index];
        let out = self.push_buf(1, 1, vec![v]);
        self.record(Op::Gather { x, index, out });
        Ok(out)
    }

    /// Clamp to [lo, hi]; gradient passes only strictly inside the interval.
    pub fn clamp(&mut self, x: NodeId, lo: f64, hi: f64) -> NodeId {
        let (r, c) = self.dims(x);
        let data: Vec<f64> = self.value(x).iter().map(|v| v.clamp(lo, hi)).collect();
        let out = self.push_buf(r, c, data);
        self.record(Op::Clamp { x, lo, hi, out });
        out
    }

    /// Elementwise min; gradient follows the smaller operand (ties go to `a`).
    pub fn min2(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (r, c) = self.same_shape(a, b, "min2")?;
        let data: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x.min(*y)).collect();
        let out = self.push_buf(r, c, data);
        self.record(Op::Min2 { a, b, out });
        Ok(out)
    }

    // ── backward ───────────────────────────────────────────────────

    fn acc(&mut self, n: NodeId, delta: &[f64]) {
        match &mut self.grads[n] {
            Some(g) => {
                for (gi, di) in g.iter_mut().zip(delta) {
                    *gi += di;
                }
            }
            None => self.grads[n] = Some(delta.to_vec()),
        }
    }

    /// Reverse sweep from a scalar loss. Clears node gradients first, seeds
    /// the loss with 1, then visits each record exactly once in reverse.
    /// Leaves gradients on the tape; use [`Tape::backward_into`] to deposit
    /// them into a [`ParameterSet`].
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if !self.recording {
            return Err(Error::Contract("backward on a no-grad tape".into()));
        }
        let (r, c) = self.dims(loss);
        if r * c != 1 {
            return Err(Error::Contract(format!("backward expects a scalar loss, got {r}x{c}")));
        }
        for g in &mut self.grads {
            *g = None;
        }
        self.grads[loss] = Some(vec![1.0]);

        for i in (0..self.ops.len()).rev() {
            // Take the op out to avoid aliasing self during the VJP.
            let op = std::mem::replace(&mut self.ops[i], Op::SumAll { x: 0, out: 0 });
            self.backward_op(&op);
            self.ops[i] = op;
        }
        Ok(())
    }

    /// Backward plus gradient deposit: parameter-leaf gradients are added
    /// into `ps`. Calling twice without `zero_grad` accumulates 2×.
    pub fn backward_into(&mut self, loss: NodeId, ps: &mut ParameterSet) -> Result<()> {
        self.backward(loss)?;
        for (pid, node) in self.param_nodes.clone() {
            if let Some(g) = self.grads[node].clone() {
                ps.accumulate_grad(pid, &g);
            } else {
                // Unreachable parameter: contributes an explicit zero so the
                // grads-populated contract still holds.
                ps.accumulate_grad(pid, &vec![0.0; self.bufs[node].data.len()]);
            }
        }
        Ok(())
    }

    fn backward_op(&mut self, op: &Op) {
        match *op {
            Op::Matmul { a, b, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let (m, k) = self.dims(a);
                let n = self.dims(b).1;
                // dA = dOut · Bᵀ
                let mut da = vec![0.0; m * k];
                kernels::gemm_acc(&mut da, &d_out, &self.bufs[b].data, m, n, k, false, true);
                self.acc(a, &da);
                // dB = Aᵀ · dOut
                let mut db = vec![0.0; k * n];
                kernels::gemm_acc(&mut db, &self.bufs[a].data, &d_out, k, m, n, true, false);
                self.acc(b, &db);
            }
            Op::MatmulBt { a, b, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let (m, k) = self.dims(a);
                let n = self.dims(b).0;
                // out = A·Bᵀ: dA = dOut·B, dB = dOutᵀ·A
                let mut da = vec![0.0; m * k];
                kernels::gemm_acc(&mut da, &d_out, &self.bufs[b].data, m, n, k, false, false);
                self.acc(a, &da);
                let mut db = vec![0.0; n * k];
                kernels::gemm_acc(&mut db, &d_out, &self.bufs[a].data, n, m, k, true, false);
                self.acc(b, &db);
            }
            Op::AddBias { x, bias, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let (m, n) = self.dims(x);
                self.acc(x, &d_out);
                let mut db = vec![0.0; n];
                for r in 0..m {
                    for c in 0..n {
                        db[c] += d_out[r * n + c];
                    }
                }
                self.acc(bias, &db);
            }
            Op::Add { a, b, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                self.acc(a, &d_out);
                self.acc(b, &d_out);
            }
            Op::Sub { a, b, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                self.acc(a, &d_out);
                let neg: Vec<f64> = d_out.iter().map(|v| -v).collect();
                self.acc(b, &neg);
            }
            Op::Mul { a, b, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let da: Vec<f64> = d_out.iter().zip(&self.bufs[b].data).map(|(d, v)| d * v).collect();
                let db: Vec<f64> = d_out.iter().zip(&self.bufs[a].data).map(|(d, v)| d * v).collect();
                self.acc(a, &da);
                self.acc(b, &db);
            }
            Op::Scale { x, c, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let dx: Vec<f64> = d_out.iter().map(|v| v * c).collect();
                self.acc(x, &dx);
            }
            Op::Relu { x, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let dx: Vec<f64> = d_out
                    .iter()
                    .zip(&self.bufs[x].data)
                    .map(|(d, &v)| if v > 0.0 { *d } else { 0.0 })
                    .collect();
                self.acc(x, &dx);
            }
            Op::Sigmoid { x, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let dx: Vec<f64> = d_out
                    .iter()
                    .zip(&self.bufs[out].data)
                    .map(|(d, &s)| d * s * (1.0 - s))
                    .collect();
                self.acc(x, &dx);
            }
            Op::Tanh { x, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let dx: Vec<f64> = d_out
                    .iter()
                    .zip(&self.bufs[out].data)
                    .map(|(d, &t)| d * (1.0 - t * t))
                    .collect();
                self.acc(x, &dx);
            }
            Op::Exp { x, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let dx: Vec<f64> = d_out
                    .iter()
                    .zip(&self.bufs[out].data)
                    .map(|(d, &e)| d * e)
                    .collect();
                self.acc(x, &dx);
            }
            Op::SoftmaxRows { x, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let (r, c) = self.dims(x);
                let p = &self.bufs[out].data;
                let mut dx = vec![0.0; r * c];
                for rr in 0..r {
                    let dot: f64 = (0..c).map(|cc| d_out[rr * c + cc] * p[rr * c + cc]).sum();
                    for cc in 0..c {
                        dx[rr * c + cc] = p[rr * c + cc] * (d_out[rr * c + cc] - dot);
                    }
                }
                self.acc(x, &dx);
            }
            Op::LogSumExpRow { x, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let (_, c) = self.dims(x);
                let sm = kernels::softmax_rows(&self.bufs[x].data, 1, c);
                let dx: Vec<f64> = sm.iter().map(|p| p * d_out[0]).collect();
                self.acc(x, &dx);
            }
            Op::LayerNorm { x, gain, bias, out, ref mean, ref inv_std } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let (r, c) = self.dims(x);
                let xv = self.bufs[x].data.clone();
                let g = self.bufs[gain].data.clone();
                let mut dx = vec![0.0; r * c];
                let mut dg = vec![0.0; c];
                let mut db = vec![0.0; c];
                for rr in 0..r {
                    let is = inv_std[rr];
                    let mu = mean[rr];
                    // dy w.r.t. normalized value
                    let mut dnorm = vec![0.0; c];
                    let mut sum_dnorm = 0.0;
                    let mut sum_dnorm_h = 0.0;
                    for cc in 0..c {
                        let h = (xv[rr * c + cc] - mu) * is;
                        let dn = d_out[rr * c + cc] * g[cc];
                        dnorm[cc] = dn;
                        sum_dnorm += dn;
                        sum_dnorm_h += dn * h;
                        dg[cc] += d_out[rr * c + cc] * h;
                        db[cc] += d_out[rr * c + cc];
                    }
                    let inv_n = 1.0 / c as f64;
                    for cc in 0..c {
                        let h = (xv[rr * c + cc] - mu) * is;
                        dx[rr * c + cc] = is * (dnorm[cc] - inv_n * sum_dnorm - h * inv_n * sum_dnorm_h);
                    }
                }
                self.acc(x, &dx);
                self.acc(gain, &dg);
                self.acc(bias, &db);
            }
            Op::SliceCols { x, out, start, len } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let (r, c) = self.dims(x);
                let mut dx = vec![0.0; r * c];
                for rr in 0..r {
                    dx[rr * c + start..rr * c + start + len]
                        .copy_from_slice(&d_out[rr * len..(rr + 1) * len]);
                }
                self.acc(x, &dx);
            }
            Op::ConcatCols { ref parts, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let parts = parts.clone();
                let total = self.dims(out).1;
                let r = self.dims(out).0;
                let mut off = 0;
                for p in parts {
                    let (_, pc) = self.dims(p);
                    let mut dp = vec![0.0; r * pc];
                    for rr in 0..r {
                        dp[rr * pc..(rr + 1) * pc]
                            .copy_from_slice(&d_out[rr * total + off..rr * total + off + pc]);
                    }
                    self.acc(p, &dp);
                    off += pc;
                }
            }
            Op::ConcatRows { ref parts, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let parts = parts.clone();
                let mut off = 0;
                for p in parts {
                    let (pr, pc) = self.dims(p);
                    let dp = d_out[off..off + pr * pc].to_vec();
                    self.acc(p, &dp);
                    off += pr * pc;
                }
            }
            Op::EmbedRow { table, index, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let (rows, dim) = self.dims(table);
                let mut dt = vec![0.0; rows * dim];
                dt[index * dim..(index + 1) * dim].copy_from_slice(&d_out);
                self.acc(table, &dt);
            }
            Op::SumAll { x, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let n = self.bufs[x].data.len();
                let dx = vec![d_out[0]; n];
                self.acc(x, &dx);
            }
            Op::Gather { x, index, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let n = self.bufs[x].data.len();
                let mut dx = vec![0.0; n];
                dx[index] = d_out[0];
                self.acc(x, &dx);
            }
            Op::Clamp { x, lo, hi, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let dx: Vec<f64> = d_out
                    .iter()
                    .zip(&self.bufs[x].data)
                    .map(|(d, &v)| if v > lo && v < hi { *d } else { 0.0 })
                    .collect();
                self.acc(x, &dx);
            }
            Op::Min2 { a, b, out } => {
                let Some(d_out) = self.grads[out].clone() else { return };
                let av = self.bufs[a].data.clone();
                let bv = self.bufs[b].data.clone();
                let da: Vec<f64> = d_out
                    .iter()
                    .zip(av.iter().zip(&bv))
                    .map(|(d, (x, y))| if x <= y { *d } else { 0.0 })
                    .collect();
                let db: Vec<f64> = d_out
                    .iter()
                    .zip(av.iter().zip(&bv))
                    .map(|(d, (x, y))| if x <= y { 0.0 } else { *d })
                    .collect();
                self.acc(a, &da);
                self.acc(b, &db);
            }
        }
    }
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}
