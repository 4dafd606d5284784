//! Adam optimizer with bias correction, plus global-norm gradient clipping.

use serde::{Deserialize, Serialize};

use crate::autodiff::params::ParameterSet;
use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-5, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment accumulators, one pair per parameter entry.
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new(ps: &ParameterSet) -> Self {
        let m = ps.ids().map(|id| vec![0.0; ps.value(id).numel()]).collect();
        let v = ps.ids().map(|id| vec![0.0; ps.value(id).numel()]).collect();
        AdamState { m, v, t: 0 }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// Apply one update from the gradients currently on `ps`. It is a
    /// contract error to call this before any gradient has been accumulated
    /// since the last `zero_grad`.
    pub fn step(&mut self, ps: &mut ParameterSet, cfg: &AdamConfig) -> Result<()> {
        if !ps.grads_populated() {
            return Err(Error::Contract("optimizer step without populated gradients".into()));
        }
        if self.m.len() != ps.len() {
            return Err(Error::Contract(format!(
                "optimizer state has {} entries, parameter set has {}",
                self.m.len(),
                ps.len()
            )));
        }
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for id in ps.ids().collect::<Vec<_>>() {
            let g = ps.grad(id).to_vec();
            let m = &mut self.m[id];
            let v = &mut self.v[id];
            let p = ps.value_mut(id).data_mut();
            for j in 0..g.len() {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
                let mhat = m[j] / bc1;
                let vhat = v[j] / bc2;
                p[j] -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }

    /// Serialize moments and step count as named tensors for checkpointing.
    pub fn to_tensors(&self, ps: &ParameterSet) -> Vec<(String, Tensor)> {
        let mut out = Vec::with_capacity(2 * self.m.len() + 1);
        for id in ps.ids() {
            let shape = ps.value(id).shape().to_vec();
            out.push((format!("adam.m.{}", ps.name(id)), Tensor::from_vec(&shape, self.m[id].clone()).unwrap()));
            out.push((format!("adam.v.{}", ps.name(id)), Tensor::from_vec(&shape, self.v[id].clone()).unwrap()));
        }
        out.push(("adam.t".to_string(), Tensor::from_vec(&[1, 1], vec![self.t as f64]).unwrap()));
        out
    }

    /// Rebuild from checkpoint tensors; missing entries are a data error.
    pub fn from_tensors(ps: &ParameterSet, tensors: &[(String, Tensor)]) -> Result<Self> {
        let lookup = |name: &str| -> Result<&Tensor> {
            tensors
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t)
                .ok_or_else(|| Error::Data(format!("checkpoint missing optimizer tensor {name}")))
        };
        let mut m = Vec::with_capacity(ps.len());
        let mut v = Vec::with_capacity(ps.len());
        for id in ps.ids() {
            let tm = lookup(&format!("adam.m.{}", ps.name(id)))?;
            let tv = lookup(&format!("adam.v.{}", ps.name(id)))?;
            if tm.numel() != ps.value(id).numel() || tv.numel() != ps.value(id).numel() {
                return Err(Error::Data(format!("optimizer tensor size mismatch for {}", ps.name(id))));
            }
            m.push(tm.data().to_vec());
            v.push(tv.data().to_vec());
        }
        let t = lookup("adam.t")?.data()[0] as u64;
        Ok(AdamState { m, v, t })
    }
}

/// Scale all gradients so their global L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_grad_norm(ps: &mut ParameterSet, max_norm: f64) -> f64 {
    let ids: Vec<_> = ps.ids().collect();
    let mut sq = 0.0;
    for &id in &ids {
        sq += ps.grad(id).iter().map(|g| g * g).sum::<f64>();
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for &id in &ids {
            ps.scale_grad(id, scale);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(v: f64) -> (ParameterSet, crate::autodiff::params::ParamId) {
        let mut ps = ParameterSet::new();
        let id = ps.add("p", Tensor::from_vec(&[1, 1], vec![v]).unwrap()).unwrap();
        (ps, id)
    }

    #[test]
    fn first_step_moves_by_lr() {
        // With bias correction, step 1 moves by lr·g/(|g|+ε·…) ≈ lr·sign(g).
        let (mut ps, id) = one_param(1.0);
        ps.accumulate_grad(id, &[0.5]);
        let mut adam = AdamState::new(&ps);
        let cfg = AdamConfig { lr: 0.1, ..AdamConfig::default() };
        adam.step(&mut ps, &cfg).unwrap();
        let moved = 1.0 - ps.value(id).data()[0];
        assert!((moved - 0.1).abs() < 1e-6, "moved {moved}");
    }

    #[test]
    fn step_without_grads_is_contract_error() {
        let (mut ps, _) = one_param(1.0);
        let mut adam = AdamState::new(&ps);
        assert!(matches!(adam.step(&mut ps, &AdamConfig::default()), Err(Error::Contract(_))));
    }

    #[test]
    fn converges_on_quadratic() {
        // minimize (p-3)², gradient 2(p-3)
        let (mut ps, id) = one_param(0.0);
        let mut adam = AdamState::new(&ps);
        let cfg = AdamConfig { lr: 0.05, ..AdamConfig::default() };
        for _ in 0..2000 {
            ps.zero_grad();
            let p = ps.value(id).data()[0];
            ps.accumulate_grad(id, &[2.0 * (p - 3.0)]);
            adam.step(&mut ps, &cfg).unwrap();
        }
        assert!((ps.value(id).data()[0] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn state_round_trips_through_tensors() {
        let (mut ps, id) = one_param(2.0);
        let mut adam = AdamState::new(&ps);
        for _ in 0..3 {
            ps.zero_grad();
            ps.accumulate_grad(id, &[0.7]);
            adam.step(&mut ps, &AdamConfig::default()).unwrap();
        }
        let tensors = adam.to_tensors(&ps);
        let restored = AdamState::from_tensors(&ps, &tensors).unwrap();
        assert_eq!(restored.t, adam.t);
        assert_eq!(restored.m, adam.m);
        assert_eq!(restored.v, adam.v);
    }

    #[test]
    fn clip_rescales_to_max_norm() {
        let mut ps = ParameterSet::new();
        let a = ps.add("a", Tensor::from_vec(&[1, 2], vec![0.0; 2]).unwrap()).unwrap();
        ps.accumulate_grad(a, &[3.0, 4.0]);
        let pre = clip_grad_norm(&mut ps, 1.0);
        assert!((pre - 5.0).abs() < 1e-12);
        assert!((ps.grad(a)[0] - 0.6).abs() < 1e-12);
        assert!((ps.grad(a)[1] - 0.8).abs() < 1e-12);
    }
}
