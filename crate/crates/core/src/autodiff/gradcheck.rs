//! Finite-difference validation of tape gradients.

use crate::autodiff::params::ParameterSet;
use crate::autodiff::tape::{NodeId, Tape};
use crate::error::Result;

/// Compare analytic gradients of a scalar loss against central differences.
///
/// `build` constructs the loss from scratch on the given tape; it is called
/// once on a recording tape for the analytic pass and then repeatedly on
/// no-grad tapes while each parameter entry is perturbed by ±h. Returns the
/// worst error `|a − n| / max(|a|, |n|, 1)` over all entries.
pub fn finite_difference_check<F>(ps: &mut ParameterSet, h: f64, build: F) -> Result<f64>
where
    F: Fn(&mut Tape, &ParameterSet) -> Result<NodeId>,
{
    ps.zero_grad();
    let mut tape = Tape::new();
    let loss = build(&mut tape, ps)?;
    tape.backward_into(loss, ps)?;
    let analytic: Vec<Vec<f64>> = ps.ids().map(|id| ps.grad(id).to_vec()).collect();

    let eval = |ps: &ParameterSet| -> Result<f64> {
        let mut t = Tape::no_grad();
        let n = build(&mut t, ps)?;
        Ok(t.value(n)[0])
    };

    let mut worst = 0.0f64;
    let ids: Vec<_> = ps.ids().collect();
    for (slot, id) in ids.into_iter().enumerate() {
        for j in 0..analytic[slot].len() {
            let orig = ps.value(id).data()[j];
            ps.value_mut(id).data_mut()[j] = orig + h;
            let fp = eval(ps)?;
            ps.value_mut(id).data_mut()[j] = orig - h;
            let fm = eval(ps)?;
            ps.value_mut(id).data_mut()[j] = orig;
            let numeric = (fp - fm) / (2.0 * h);
            let a = analytic[slot][j];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            worst = worst.max(err);
        }
    }
    ps.zero_grad();
    Ok(worst)
}

/// Like [`finite_difference_check`], but probes at most `per_param` evenly
/// strided entries of each parameter. A wrong backward rule corrupts whole
/// tensors, so strided probes catch it at a fraction of the cost; use this
/// for model-sized graphs where the exhaustive sweep is unaffordable.
pub fn finite_difference_check_sampled<F>(ps: &mut ParameterSet, h: f64, per_param: usize, build: F) -> Result<f64>
where
    F: Fn(&mut Tape, &ParameterSet) -> Result<NodeId>,
{
    ps.zero_grad();
    let mut tape = Tape::new();
    let loss = build(&mut tape, ps)?;
    tape.backward_into(loss, ps)?;
    let analytic: Vec<Vec<f64>> = ps.ids().map(|id| ps.grad(id).to_vec()).collect();

    let eval = |ps: &ParameterSet| -> Result<f64> {
        let mut t = Tape::no_grad();
        let n = build(&mut t, ps)?;
        Ok(t.value(n)[0])
    };

    let mut worst = 0.0f64;
    let ids: Vec<_> = ps.ids().collect();
    for (slot, id) in ids.into_iter().enumerate() {
        let len = analytic[slot].len();
        let probes = per_param.max(1).min(len);
        for p in 0..probes {
            let j = p * len / probes;
            let orig = ps.value(id).data()[j];
            ps.value_mut(id).data_mut()[j] = orig + h;
            let fp = eval(ps)?;
            ps.value_mut(id).data_mut()[j] = orig - h;
            let fm = eval(ps)?;
            ps.value_mut(id).data_mut()[j] = orig;
            let numeric = (fp - fm) / (2.0 * h);
            let a = analytic[slot][j];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            worst = worst.max(err);
        }
    }
    ps.zero_grad();
    Ok(worst)
}
