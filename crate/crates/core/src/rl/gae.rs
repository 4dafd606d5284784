//! Generalized advantage estimation.

/// Backward recursion over a flat buffer that may contain several episodes:
/// `δ_t = r_t + γ·V_{t+1}·(1 − done_t) − V_t` and
/// `A_t = δ_t + γλ·(1 − done_t)·A_{t+1}`. `last_value` bootstraps the value
/// after the final step when the buffer ends mid-episode. Returns
/// advantages and value targets (`A + V`).
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n);
    assert_eq!(dones.len(), n);
    let mut advantages = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let cont = if dones[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 < n { values[t + 1] } else { last_value };
        let delta = rewards[t] + gamma * next_value * cont - values[t];
        next_adv = delta + gamma * lambda * cont * next_adv;
        advantages[t] = next_adv;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct-sum oracle: `A_t = Σ_k (γλ)^k δ_{t+k}` within the episode.
    fn oracle(rewards: &[f64], values: &[f64], dones: &[bool], last_value: f64, gamma: f64, lambda: f64) -> Vec<f64> {
        let n = rewards.len();
        let delta = |t: usize| {
            let next = if dones[t] {
                0.0
            } else if t + 1 < n {
                values[t + 1]
            } else {
                last_value
            };
            rewards[t] + gamma * next - values[t]
        };
        (0..n)
            .map(|t| {
                let mut acc = 0.0;
                let mut w = 1.0;
                for k in t..n {
                    acc += w * delta(k);
                    if dones[k] {
                        break;
                    }
                    w *= gamma * lambda;
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum_oracle_with_mid_buffer_episode_ends() {
        let rewards = [0.24, -0.01, -0.01, 2.49, -0.01, 0.113, -0.26, 1.0];
        let values = [0.4, 0.2, -0.1, 0.9, 0.05, 0.3, -0.2, 0.6];
        let dones = [false, false, false, true, false, false, false, false];
        let (a, r) = gae(&rewards, &values, &dones, 0.77, 0.99, 0.95);
        let want = oracle(&rewards, &values, &dones, 0.77, 0.99, 0.95);
        for t in 0..rewards.len() {
            assert!((a[t] - want[t]).abs() < 1e-12, "t={t}: {} vs {}", a[t], want[t]);
            assert!((r[t] - (want[t] + values[t])).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_zero_is_the_one_step_td_error() {
        let rewards = [1.0, 0.5, -0.2];
        let values = [0.3, 0.1, 0.4];
        let dones = [false, false, true];
        let (a, _) = gae(&rewards, &values, &dones, 9.9, 0.9, 0.0);
        assert!((a[0] - (1.0 + 0.9 * 0.1 - 0.3)).abs() < 1e-12);
        assert!((a[1] - (0.5 + 0.9 * 0.4 - 0.1)).abs() < 1e-12);
        // terminal step ignores the bootstrap value entirely
        assert!((a[2] - (-0.2 - 0.4)).abs() < 1e-12);
    }

    #[test]
    fn lambda_one_is_discounted_return_minus_value() {
        let rewards = [1.0, 2.0, 3.0];
        let values = [0.5, -0.5, 0.25];
        let dones = [false, false, true];
        let (a, _) = gae(&rewards, &values, &dones, 0.0, 0.5, 1.0);
        let g2 = 3.0;
        let g1 = 2.0 + 0.5 * g2;
        let g0 = 1.0 + 0.5 * g1;
        assert!((a[0] - (g0 - 0.5)).abs() < 1e-12);
        assert!((a[1] - (g1 + 0.5)).abs() < 1e-12);
        assert!((a[2] - (g2 - 0.25)).abs() < 1e-12);
    }
}
