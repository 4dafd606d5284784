//! Layers: thin structs that own parameter ids and know how to replay
//! themselves onto a tape.
//!
//! Initialization is fan-in uniform (±1/√fan_in) from a caller-supplied
//! stream, so layer construction order fully determines the starting weights.

use rand::Rng as _;

use crate::autodiff::params::{ParamId, ParameterSet};
use crate::autodiff::tape::{NodeId, Tape};
use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;

fn uniform(rng: &mut Rng, n: usize, bound: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
}

/// Fully connected layer, y = x·W + b with W stored `in_dim × out_dim`.
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new(ps: &mut ParameterSet, name: &str, in_dim: usize, out_dim: usize, rng: &mut Rng) -> Result<Self> {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let w = ps.add(&format!("{name}.w"), Tensor::from_vec(&[in_dim, out_dim], uniform(rng, in_dim * out_dim, bound))?)?;
        let b = ps.add(&format!("{name}.b"), Tensor::from_vec(&[1, out_dim], uniform(rng, out_dim, bound))?)?;
        Ok(Linear { w, b, in_dim, out_dim })
    }

    pub fn forward(&self, t: &mut Tape, ps: &ParameterSet, x: NodeId) -> Result<NodeId> {
        let w = t.param(ps, self.w);
        let b = t.param(ps, self.b);
        let h = t.matmul(x, w)?;
        t.add_bias(h, b)
    }
}

/// Lookup table mapping a discrete index to a learned row vector.
pub struct Embedding {
    pub table: ParamId,
    pub count: usize,
    pub dim: usize,
}

impl Embedding {
    pub fn new(ps: &mut ParameterSet, name: &str, count: usize, dim: usize, rng: &mut Rng) -> Result<Self> {
        let bound = 1.0 / (dim as f64).sqrt();
        let table = ps.add(&format!("{name}.table"), Tensor::from_vec(&[count, dim], uniform(rng, count * dim, bound))?)?;
        Ok(Embedding { table, count, dim })
    }

    pub fn forward(&self, t: &mut Tape, ps: &ParameterSet, index: usize) -> Result<NodeId> {
        if index >= self.count {
            return Err(Error::Contract(format!("embedding index {index} out of {}", self.count)));
        }
        let table = t.param(ps, self.table);
        t.embed_row(table, index)
    }
}

/// Per-row layer normalization with learned gain and bias.
pub struct LayerNorm {
    pub gain: ParamId,
    pub bias: ParamId,
    pub dim: usize,
    pub eps: f64,
}

impl LayerNorm {
    pub fn new(ps: &mut ParameterSet, name: &str, dim: usize) -> Result<Self> {
        let gain = ps.add(&format!("{name}.gain"), Tensor::from_vec(&[1, dim], vec![1.0; dim])?)?;
        let bias = ps.add(&format!("{name}.bias"), Tensor::zeros(&[1, dim]))?;
        Ok(LayerNorm { gain, bias, dim, eps: 1e-5 })
    }

    pub fn forward(&self, t: &mut Tape, ps: &ParameterSet, x: NodeId) -> Result<NodeId> {
        let gain = t.param(ps, self.gain);
        let bias = t.param(ps, self.bias);
        t.layer_norm(x, gain, bias, self.eps)
    }
}

/// Scaled dot-product multi-head attention.
///
/// Queries, keys and values are projected with separate maps, split into
/// `heads` equal column blocks, attended independently (softmax over key
/// rows, scores divided by √head_dim), re-concatenated and passed through
/// the output projection.
pub struct MultiHeadAttention {
    pub wq: Linear,
    pub wk: Linear,
    pub wv: Linear,
    pub wo: Linear,
    pub dim: usize,
    pub heads: usize,
}

impl MultiHeadAttention {
    pub fn new(ps: &mut ParameterSet, name: &str, dim: usize, heads: usize, rng: &mut Rng) -> Result<Self> {
        if heads == 0 || dim % heads != 0 {
            return Err(Error::Config(format!("attention width {dim} not divisible into {heads} heads")));
        }
        Ok(MultiHeadAttention {
            wq: Linear::new(ps, &format!("{name}.q"), dim, dim, rng)?,
            wk: Linear::new(ps, &format!("{name}.k"), dim, dim, rng)?,
            wv: Linear::new(ps, &format!("{name}.v"), dim, dim, rng)?,
            wo: Linear::new(ps, &format!("{name}.o"), dim, dim, rng)?,
            dim,
            heads,
        })
    }

    /// `query` is n_q×dim, `memory` is n_k×dim; returns n_q×dim.
    pub fn forward(&self, t: &mut Tape, ps: &ParameterSet, query: NodeId, memory: NodeId) -> Result<NodeId> {
        let (_, qc) = t.shape(query);
        let (_, kc) = t.shape(memory);
        if qc != self.dim || kc != self.dim {
            return Err(Error::Dim(format!("attention expects width {}, got query {qc} / memory {kc}", self.dim)));
        }
        let q = self.wq.forward(t, ps, query)?;
        let k = self.wk.forward(t, ps, memory)?;
        let v = self.wv.forward(t, ps, memory)?;
        let hd = self.dim / self.heads;
        let scale = 1.0 / (hd as f64).sqrt();
        let mut ctx = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let qh = t.slice_cols(q, h * hd, hd)?;
            let kh = t.slice_cols(k, h * hd, hd)?;
            let vh = t.slice_cols(v, h * hd, hd)?;
            let scores = t.matmul_bt(qh, kh)?;
            let scores = t.scale(scores, scale);
            let attn = t.softmax_rows(scores)?;
            ctx.push(t.matmul(attn, vh)?);
        }
        let cat = t.concat_cols(&ctx)?;
        self.wo.forward(t, ps, cat)
    }
}

/// A single LSTM step. Gate blocks are ordered input, forget, cell, output;
/// the forget-gate bias starts at one.
pub struct LstmCell {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new(ps: &mut ParameterSet, name: &str, in_dim: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        let bound = 1.0 / (hidden as f64).sqrt();
        let w_ih = ps.add(&format!("{name}.w_ih"), Tensor::from_vec(&[in_dim, 4 * hidden], uniform(rng, in_dim * 4 * hidden, bound))?)?;
        let w_hh = ps.add(&format!("{name}.w_hh"), Tensor::from_vec(&[hidden, 4 * hidden], uniform(rng, hidden * 4 * hidden, bound))?)?;
        let mut b = vec![0.0; 4 * hidden];
        b[hidden..2 * hidden].fill(1.0);
        let bias = ps.add(&format!("{name}.bias"), Tensor::from_vec(&[1, 4 * hidden], b)?)?;
        Ok(LstmCell { w_ih, w_hh, bias, in_dim, hidden })
    }

    /// One step: (x 1×in, h 1×hidden, c 1×hidden) → (h', c').
    pub fn forward(&self, t: &mut Tape, ps: &ParameterSet, x: NodeId, h: NodeId, c: NodeId) -> Result<(NodeId, NodeId)> {
        let w_ih = t.param(ps, self.w_ih);
        let w_hh = t.param(ps, self.w_hh);
        let bias = t.param(ps, self.bias);
        let gx = t.matmul(x, w_ih)?;
        let gh = t.matmul(h, w_hh)?;
        let g = t.add(gx, gh)?;
        let g = t.add_bias(g, bias)?;
        let n = self.hidden;
        let i = t.slice_cols(g, 0, n)?;
        let f = t.slice_cols(g, n, n)?;
        let cell = t.slice_cols(g, 2 * n, n)?;
        let o = t.slice_cols(g, 3 * n, n)?;
        let i = t.sigmoid(i);
        let f = t.sigmoid(f);
        let cell = t.tanh(cell);
        let o = t.sigmoid(o);
        let fc = t.mul(f, c)?;
        let ic = t.mul(i, cell)?;
        let c_new = t.add(fc, ic)?;
        let ct = t.tanh(c_new);
        let h_new = t.mul(o, ct)?;
        Ok((h_new, c_new))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::gradcheck::finite_difference_check;
    use crate::rng;

    fn set_param(ps: &mut ParameterSet, name: &str, data: Vec<f64>) {
        let id = ps.id(name).unwrap();
        ps.value_mut(id).data_mut().copy_from_slice(&data);
    }

    #[test]
    fn linear_shapes_and_determinism() {
        let mut a = ParameterSet::new();
        let mut b = ParameterSet::new();
        Linear::new(&mut a, "l", 5, 3, &mut rng::stream(42, "nn", 0)).unwrap();
        Linear::new(&mut b, "l", 5, 3, &mut rng::stream(42, "nn", 0)).unwrap();
        let ia = a.id("l.w").unwrap();
        assert_eq!(a.value(ia).shape(), &[5, 3]);
        assert_eq!(a.value(ia).data(), b.value(b.id("l.w").unwrap()).data());
    }

    #[test]
    fn single_head_attention_hand_oracle() {
        let mut ps = ParameterSet::new();
        let mut r = rng::stream(1, "nn", 1);
        let mha = MultiHeadAttention::new(&mut ps, "a", 1, 1, &mut r).unwrap();
        for w in ["a.q.w", "a.k.w", "a.v.w", "a.o.w"] {
            set_param(&mut ps, w, vec![1.0]);
        }
        for b in ["a.q.b", "a.k.b", "a.v.b", "a.o.b"] {
            set_param(&mut ps, b, vec![0.0]);
        }
        let mut t = Tape::no_grad();
        let q = t.constant(1, 1, vec![2.0]).unwrap();
        let m = t.constant(2, 1, vec![1.0, 3.0]).unwrap();
        let out = mha.forward(&mut t, &ps, q, m).unwrap();
        // scores (scale 1): [2, 6]; weights e²,e⁶ normalized; out = p₁·1 + p₂·3
        let (e2, e6) = (2.0f64.exp(), 6.0f64.exp());
        let expect = (e2 * 1.0 + e6 * 3.0) / (e2 + e6);
        assert!((t.value(out)[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn attention_rejects_bad_head_split() {
        let mut ps = ParameterSet::new();
        let mut r = rng::stream(1, "nn", 2);
        assert!(MultiHeadAttention::new(&mut ps, "a", 6, 4, &mut r).is_err());
    }

    #[test]
    fn attention_gradients_match_fd() {
        let mut ps = ParameterSet::new();
        let mut r = rng::stream(9, "nn", 3);
        let mha = MultiHeadAttention::new(&mut ps, "a", 4, 2, &mut r).unwrap();
        let err = finite_difference_check(&mut ps, 1e-3, |t, ps| {
            let q = t.constant(2, 4, vec![0.3, -0.1, 0.8, 0.2, -0.4, 0.5, 0.0, 1.1])?;
            let m = t.constant(3, 4, vec![0.2, 0.7, -0.3, 0.1, 0.9, -0.2, 0.4, 0.6, -0.5, 0.3, 0.8, -0.7])?;
            let out = mha.forward(t, ps, q, m)?;
            let sq = t.mul(out, out)?;
            Ok(t.sum_all(sq))
        })
        .unwrap();
        assert!(err < 1e-4, "max fd error {err}");
    }

    #[test]
    fn lstm_zero_weight_oracle() {
        let mut ps = ParameterSet::new();
        let mut r = rng::stream(4, "nn", 4);
        let cell = LstmCell::new(&mut ps, "l", 2, 3, &mut r).unwrap();
        set_param(&mut ps, "l.w_ih", vec![0.0; 2 * 12]);
        set_param(&mut ps, "l.w_hh", vec![0.0; 3 * 12]);
        set_param(&mut ps, "l.bias", vec![0.0; 12]);
        let mut t = Tape::no_grad();
        let x = t.constant(1, 2, vec![0.5, -0.5]).unwrap();
        let h = t.constant(1, 3, vec![0.0; 3]).unwrap();
        let c = t.constant(1, 3, vec![1.0, -2.0, 0.0]).unwrap();
        let (h2, c2) = cell.forward(&mut t, &ps, x, h, c).unwrap();
        // All gates sigmoid(0)=0.5, candidate tanh(0)=0:
        // c' = 0.5·c, h' = 0.5·tanh(0.5·c)
        for (j, &cv) in [1.0, -2.0, 0.0].iter().enumerate() {
            assert!((t.value(c2)[j] - 0.5 * cv).abs() < 1e-15);
            assert!((t.value(h2)[j] - 0.5 * (0.5 * cv).tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn lstm_gradients_match_fd() {
        let mut ps = ParameterSet::new();
        let mut r = rng::stream(5, "nn", 5);
        let cell = LstmCell::new(&mut ps, "l", 3, 2, &mut r).unwrap();
        let err = finite_difference_check(&mut ps, 1e-3, |t, ps| {
            let x = t.constant(1, 3, vec![0.4, -0.6, 0.9])?;
            let mut h = t.constant(1, 2, vec![0.0; 2])?;
            let mut c = t.constant(1, 2, vec![0.0; 2])?;
            // two chained steps to exercise recurrence
            for _ in 0..2 {
                let (h2, c2) = cell.forward(t, ps, x, h, c)?;
                h = h2;
                c = c2;
            }
            let sq = t.mul(h, h)?;
            Ok(t.sum_all(sq))
        })
        .unwrap();
        assert!(err < 1e-4, "max fd error {err}");
    }

    #[test]
    fn embedding_rows_distinct_and_reproducible() {
        let mut ps = ParameterSet::new();
        let emb = Embedding::new(&mut ps, "e", 5, 4, &mut rng::stream(3, "nn", 6)).unwrap();
        let mut t = Tape::no_grad();
        let a = emb.forward(&mut t, &ps, 0).unwrap();
        let b = emb.forward(&mut t, &ps, 1).unwrap();
        assert_ne!(t.value(a), t.value(b));
        assert!(emb.forward(&mut t, &ps, 5).is_err());
    }
}
