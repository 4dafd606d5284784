//! Scene-memory transformer core: a self-attention encoder over the stored
//! step embeddings and a cross-attention decoder that reads the encoded
//! memory with the current step as query.

use crate::autodiff::{Linear, MultiHeadAttention, LayerNorm, NodeId, ParameterSet, Tape};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Pre-LN free, post-LN transformer block: attention, residual, layer norm,
/// then a one-hidden-layer feed-forward with another residual and norm. The
/// feed-forward hidden width equals the model width.
pub struct TransformerBlock {
    attn: MultiHeadAttention,
    ln1: LayerNorm,
    ln2: LayerNorm,
    ff1: Linear,
    ff2: Linear,
}

impl TransformerBlock {
    pub fn new(ps: &mut ParameterSet, name: &str, dim: usize, heads: usize, rng: &mut Rng) -> Result<TransformerBlock> {
        Ok(TransformerBlock {
            attn: MultiHeadAttention::new(ps, &format!("{name}.attn"), dim, heads, rng)?,
            ln1: LayerNorm::new(ps, &format!("{name}.ln1"), dim)?,
            ln2: LayerNorm::new(ps, &format!("{name}.ln2"), dim)?,
            ff1: Linear::new(ps, &format!("{name}.ff1"), dim, dim, rng)?,
            ff2: Linear::new(ps, &format!("{name}.ff2"), dim, dim, rng)?,
        })
    }

    /// `query` n_q×dim attends over `memory` n_k×dim; self-attention is the
    /// `query == memory` case.
    pub fn forward(&self, t: &mut Tape, ps: &ParameterSet, query: NodeId, memory: NodeId) -> Result<NodeId> {
        let a = self.attn.forward(t, ps, query, memory)?;
        let x = t.add(query, a)?;
        let x = self.ln1.forward(t, ps, x)?;
        let h = self.ff1.forward(t, ps, x)?;
        let h = t.relu(h);
        let h = self.ff2.forward(t, ps, h)?;
        let y = t.add(x, h)?;
        self.ln2.forward(t, ps, y)
    }
}

pub struct SmtCore {
    encoder: TransformerBlock,
    decoder: TransformerBlock,
    dim: usize,
}

impl SmtCore {
    pub fn new(ps: &mut ParameterSet, name: &str, dim: usize, heads: usize, rng: &mut Rng) -> Result<SmtCore> {
        Ok(SmtCore {
            encoder: TransformerBlock::new(ps, &format!("{name}.enc"), dim, heads, rng)?,
            decoder: TransformerBlock::new(ps, &format!("{name}.dec"), dim, heads, rng)?,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Encode the whole memory with self-attention, then decode the current
    /// step against it. `memory` is M×dim with the current step as its last
    /// row; `query` is that same step as a 1×dim node.
    pub fn forward(&self, t: &mut Tape, ps: &ParameterSet, memory: NodeId, query: NodeId) -> Result<NodeId> {
        let (_, mc) = t.shape(memory);
        let (qr, qc) = t.shape(query);
        if mc != self.dim || qc != self.dim || qr != 1 {
            return Err(Error::Dim(format!("memory {mc} / query {qr}x{qc} against model width {}", self.dim)));
        }
        let encoded = self.encoder.forward(t, ps, memory, memory)?;
        self.decoder.forward(t, ps, query, encoded)
    }
}

/// Rollout-side store of per-step embeddings.
#[derive(Debug, Clone)]
pub struct SceneMemory {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl SceneMemory {
    pub fn new(dim: usize) -> SceneMemory {
        SceneMemory { dim, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Dim(format!("memory row has {} entries, expected {}", row.len(), self.dim)));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn clear(&mut self) {
        self.rows.clear();
    }

    /// The whole memory as one M×dim constant node.
    pub fn to_node(&self, t: &mut Tape) -> Result<NodeId> {
        if self.rows.is_empty() {
            return Err(Error::Contract("empty scene memory".into()));
        }
        let mut flat = Vec::with_capacity(self.rows.len() * self.dim);
        for r in &self.rows {
            flat.extend_from_slice(r);
        }
        t.constant(self.rows.len(), self.dim, flat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::gradcheck::finite_difference_check_sampled;
    use crate::rng;
    use rand::Rng as _;

    fn rand_rows(rng: &mut rng::Rng, rows: usize, dim: usize) -> Vec<f64> {
        (0..rows * dim).map(|_| (rng.gen::<f64>() - 0.5) * 2.0).collect()
    }

    #[test]
    fn block_output_rows_are_normalized() {
        let mut rng = rng::stream(50, "smt", 0);
        let mut ps = ParameterSet::new();
        let block = TransformerBlock::new(&mut ps, "b", 16, 4, &mut rng).unwrap();
        let data = rand_rows(&mut rng, 3, 16);
        let mut t = Tape::no_grad();
        let x = t.constant(3, 16, data).unwrap();
        let y = block.forward(&mut t, &ps, x, x).unwrap();
        assert_eq!(t.shape(y), (3, 16));
        for row in t.value(y).chunks(16) {
            let mean: f64 = row.iter().sum::<f64>() / 16.0;
            let var: f64 = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 16.0;
            assert!(mean.abs() < 1e-9, "row mean {mean}");
            // the norm's eps keeps the variance a hair under 1
            assert!((var - 1.0).abs() < 1e-4, "row var {var}");
        }
    }

    #[test]
    fn decoder_output_is_invariant_to_memory_row_order() {
        let mut rng = rng::stream(51, "smt", 0);
        let mut ps = ParameterSet::new();
        let core = SmtCore::new(&mut ps, "core", 16, 4, &mut rng).unwrap();
        let rows = 5;
        let data = rand_rows(&mut rng, rows, 16);
        let query: Vec<f64> = data[(rows - 1) * 16..].to_vec();

        let eval = |order: &[usize]| {
            let mut t = Tape::no_grad();
            let mut flat = Vec::new();
            for &i in order {
                flat.extend_from_slice(&data[i * 16..(i + 1) * 16]);
            }
            let m = t.constant(rows, 16, flat).unwrap();
            let q = t.constant(1, 16, query.clone()).unwrap();
            let out = core.forward(&mut t, &ps, m, q).unwrap();
            t.value(out).to_vec()
        };

        let a = eval(&[0, 1, 2, 3, 4]);
        let b = eval(&[3, 0, 4, 1, 2]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "memory should be an unordered set: {x} vs {y}");
        }
    }

    #[test]
    fn core_gradients_match_finite_differences() {
        let mut rng = rng::stream(52, "smt", 0);
        let mut ps = ParameterSet::new();
        let core = SmtCore::new(&mut ps, "core", 8, 2, &mut rng).unwrap();
        let mem = rand_rows(&mut rng, 3, 8);
        let err = finite_difference_check_sampled(&mut ps, 1e-3, 5, |t, ps| {
            let m = t.constant(3, 8, mem.clone())?;
            let q = t.constant(1, 8, mem[16..24].to_vec())?;
            let out = core.forward(t, ps, m, q)?;
            Ok(t.mean_all(out))
        })
        .unwrap();
        assert!(err < 1e-4, "max fd error {err}");
    }

    #[test]
    fn scene_memory_checks_row_width_and_flattens_in_order() {
        let mut mem = SceneMemory::new(3);
        mem.push(vec![1.0, 2.0, 3.0]).unwrap();
        mem.push(vec![4.0, 5.0, 6.0]).unwrap();
        assert!(mem.push(vec![1.0]).is_err());
        assert_eq!(mem.len(), 2);
        let mut t = Tape::no_grad();
        let n = mem.to_node(&mut t).unwrap();
        assert_eq!(t.shape(n), (2, 3));
        assert_eq!(t.value(n), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        mem.clear();
        assert!(mem.to_node(&mut Tape::no_grad()).is_err());
    }
}
