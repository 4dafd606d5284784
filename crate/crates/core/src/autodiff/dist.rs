//! Categorical distribution over a logit row, for action selection outside
//! the tape.
//!
//! `log_prob` here is the same expression the training graph records
//! (`logit − logsumexp`), through the same kernel, so values stored during
//! rollout and values recomputed on a tape are bit-identical.

use rand::Rng as _;

use crate::autodiff::kernels;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoricalSample {
    pub index: usize,
    pub log_prob: f64,
}

pub fn log_prob(logits: &[f64], index: usize) -> f64 {
    logits[index] - kernels::logsumexp(logits)
}

/// Draw an index with probability softmax(logits) by inverse CDF.
pub fn categorical_sample(logits: &[f64], rng: &mut Rng) -> CategoricalSample {
    let lse = kernels::logsumexp(logits);
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    let mut index = logits.len() - 1;
    for (i, &l) in logits.iter().enumerate() {
        cum += (l - lse).exp();
        if u < cum {
            index = i;
            break;
        }
    }
    CategoricalSample { index, log_prob: logits[index] - lse }
}

/// Highest-probability index; ties resolve to the lowest index.
pub fn categorical_greedy(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &l) in logits.iter().enumerate().skip(1) {
        if l > logits[best] {
            best = i;
        }
    }
    best
}

/// Shannon entropy in nats.
pub fn entropy(logits: &[f64]) -> f64 {
    let lse = kernels::logsumexp(logits);
    let mut h = 0.0;
    for &l in logits {
        let lp = l - lse;
        h -= lp.exp() * lp;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn uniform_logits_have_uniform_log_prob() {
        let logits = [0.0; 4];
        for i in 0..4 {
            assert!((log_prob(&logits, i) - 0.25f64.ln()).abs() < 1e-15);
        }
        assert!((entropy(&logits) - 4.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn sample_frequencies_track_probabilities() {
        // softmax([ln 6, ln 3, ln 1]) = [0.6, 0.3, 0.1]
        let logits = [6.0f64.ln(), 3.0f64.ln(), 1.0f64.ln()];
        let mut r = rng::stream(123, "dist", 0);
        let mut counts = [0usize; 3];
        let n = 60_000;
        for _ in 0..n {
            counts[categorical_sample(&logits, &mut r).index] += 1;
        }
        for (c, p) in counts.iter().zip([0.6, 0.3, 0.1]) {
            let freq = *c as f64 / n as f64;
            assert!((freq - p).abs() < 0.01, "freq {freq} vs p {p}");
        }
    }

    #[test]
    fn greedy_breaks_ties_low() {
        assert_eq!(categorical_greedy(&[1.0, 3.0, 3.0, 0.0]), 1);
        assert_eq!(categorical_greedy(&[2.0, 2.0]), 0);
    }

    #[test]
    fn sampled_log_prob_matches_direct() {
        let logits = [0.3, -1.2, 0.9, 0.1];
        let mut r = rng::stream(5, "dist", 1);
        for _ in 0..50 {
            let s = categorical_sample(&logits, &mut r);
            assert_eq!(s.log_prob, log_prob(&logits, s.index));
        }
    }

    #[test]
    fn entropy_of_peaked_distribution_is_small() {
        let logits = [50.0, 0.0, 0.0];
        assert!(entropy(&logits) < 1e-10);
    }
}
