//! Named trainable parameters with deterministic iteration order.

use std::collections::HashMap;

use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};

/// Index of a parameter inside a [`ParameterSet`]. Stable for the set's
/// lifetime.
pub type ParamId = usize;

struct Entry {
    name: String,
    value: Tensor,
    grad: Vec<f64>,
}

/// Ordered collection of trainable tensors. Iteration follows insertion
/// order, so identical construction sequences yield identical layouts (and
/// bit-identical checkpoints).
#[derive(Default)]
pub struct ParameterSet {
    entries: Vec<Entry>,
    by_name: HashMap<String, ParamId>,
    grads_populated: bool,
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, value: Tensor) -> Result<ParamId> {
        if self.by_name.contains_key(name) {
            return Err(Error::Contract(format!("duplicate parameter name {name:?}")));
        }
        let id = self.entries.len();
        let grad = vec![0.0; value.numel()];
        self.entries.push(Entry { name: name.to_string(), value, grad });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id].name
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.entries[id].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id].value
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.entries[id].grad
    }

    /// Add `delta` into the stored gradient and mark gradients populated.
    pub fn accumulate_grad(&mut self, id: ParamId, delta: &[f64]) {
        let g = &mut self.entries[id].grad;
        debug_assert_eq!(g.len(), delta.len());
        for (gi, di) in g.iter_mut().zip(delta) {
            *gi += di;
        }
        self.grads_populated = true;
    }

    pub fn scale_grad(&mut self, id: ParamId, scale: f64) {
        for g in &mut self.entries[id].grad {
            *g *= scale;
        }
    }

    pub fn zero_grad(&mut self) {
        for e in &mut self.entries {
            e.grad.iter_mut().for_each(|g| *g = 0.0);
        }
        self.grads_populated = false;
    }

    /// Whether any backward pass has deposited gradients since the last
    /// `zero_grad`.
    pub fn grads_populated(&self) -> bool {
        self.grads_populated
    }

    /// `(name, value)` pairs in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|e| (e.name.as_str(), &e.value))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        0..self.entries.len()
    }

    pub fn total_numel(&self) -> usize {
        self.entries.iter().map(|e| e.value.numel()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_names_rejected() {
        let mut ps = ParameterSet::new();
        ps.add("w", Tensor::zeros(&[2, 2])).unwrap();
        assert!(ps.add("w", Tensor::zeros(&[2, 2])).is_err());
    }

    #[test]
    fn iteration_order_is_insertion_order() {
        let mut ps = ParameterSet::new();
        for name in ["zeta", "alpha", "mid"] {
            ps.add(name, Tensor::zeros(&[1])).unwrap();
        }
        let names: Vec<_> = ps.iter().map(|(n, _)| n.to_string()).collect();
        assert_eq!(names, vec!["zeta", "alpha", "mid"]);
    }
}
