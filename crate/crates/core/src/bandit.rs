//! UCB1-tuned over transmission parameter sets.
//!
//! Each arm keeps a running sum, count and Welford variance of its
//! normalized rewards. The score is
//!
//! ```text
//! P = R/N + sqrt(ln t / N * min(1/4, V))
//! ```
//!
//! where `t` is the number of completed transmissions since the last reset.
//! An arm that has never been played scores `+inf`, so the policy is total
//! even right after a reset.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One selectable (channel, bandwidth, transmit power) combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub channel_id: usize,
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: i32,
}

impl ParameterSet {
    /// Label used in CSV output, e.g. `920.7MHz/250kHz/-3dBm`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ParameterSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}MHz/{}kHz/{}dBm",
            self.center_frequency_hz / 1e6,
            self.bandwidth_hz / 1e3,
            self.tx_power_dbm
        )
    }
}

/// How the variance term `V` of the score is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// Population variance of the arm's observed rewards.
    #[default]
    Empirical,
    /// Population variance plus `sqrt(2 ln t / N)`, as in Auer et al.
    Padded,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ArmStats {
    pub cumulative_reward: f64,
    pub selection_count: u64,
    pub mean: f64,
    /// Sum of squared deviations from the mean.
    pub m2: f64,
    pub last_score: f64,
}

impl ArmStats {
    /// Population variance, zero for an unplayed arm.
    pub fn variance(&self) -> f64 {
        if self.selection_count == 0 {
            0.0
        } else {
            self.m2 / self.selection_count as f64
        }
    }

    fn push(&mut self, reward: f64) {
        self.selection_count += 1;
        self.cumulative_reward += reward;
        let delta = reward - self.mean;
        self.mean += delta / self.selection_count as f64;
        self.m2 += delta * (reward - self.mean);
        if self.m2 < 0.0 {
            self.m2 = 0.0;
        }
    }
}

pub fn ucb1_tuned_score(stats: &ArmStats, t: u64, mode: VarianceMode) -> f64 {
    if stats.selection_count == 0 {
        return f64::INFINITY;
    }
    let n = stats.selection_count as f64;
    let ln_t = (t.max(1) as f64).ln();
    let v = match mode {
        VarianceMode::Empirical => stats.variance(),
        VarianceMode::Padded => stats.variance() + (2.0 * ln_t / n).sqrt(),
    };
    stats.cumulative_reward / n + (ln_t / n * v.min(0.25)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditState {
    arms: Vec<(ParameterSet, ArmStats)>,
    total_steps: u64,
    variance_mode: VarianceMode,
}

impl BanditState {
    pub fn new(arms: Vec<ParameterSet>, variance_mode: VarianceMode) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::Config("arm set is empty".into()));
        }
        for (i, a) in arms.iter().enumerate() {
            let dup = arms[..i].iter().any(|b| {
                b.channel_id == a.channel_id
                    && b.tx_power_dbm == a.tx_power_dbm
                    && b.bandwidth_hz == a.bandwidth_hz
            });
            if dup {
                return Err(Error::Config(format!("duplicate arm {a}")));
            }
        }
        Ok(Self {
            arms: arms.into_iter().map(|p| (p, ArmStats::default())).collect(),
            total_steps: 0,
            variance_mode,
        })
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arm(&self, index: usize) -> &ParameterSet {
        &self.arms[index].0
    }

    pub fn stats(&self, index: usize) -> &ArmStats {
        &self.arms[index].1
    }

    pub fn arms(&self) -> impl Iterator<Item = &ParameterSet> {
        self.arms.iter().map(|(p, _)| p)
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    pub fn variance_mode(&self) -> VarianceMode {
        self.variance_mode
    }

    /// Refreshes every arm's score and returns the index of the best one.
    /// Ties go to the lowest index; unplayed arms win outright.
    pub fn select_arm(&mut self) -> usize {
        let t = self.total_steps;
        let mode = self.variance_mode;
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, (_, stats)) in self.arms.iter_mut().enumerate() {
            let score = ucb1_tuned_score(stats, t, mode);
            stats.last_score = score;
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        best
    }

    pub fn update(&mut self, arm: usize, normalized_reward: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&normalized_reward) {
            return Err(Error::Contract(format!(
                "reward {normalized_reward} outside [0, 1]"
            )));
        }
        let (_, stats) = self
            .arms
            .get_mut(arm)
            .ok_or_else(|| Error::Contract(format!("arm index {arm} out of range")))?;
        stats.push(normalized_reward);
        self.total_steps += 1;
        Ok(())
    }

    /// Forgets everything learned; the arm list is kept as is.
    pub fn reset(&mut self) {
        for (_, stats) in &mut self.arms {
            *stats = ArmStats::default();
        }
        self.total_steps = 0;
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn arms(n: usize) -> Vec<ParameterSet> {
        (0..n)
            .map(|i| ParameterSet {
                channel_id: i,
                center_frequency_hz: 921e6 + i as f64 * 2e5,
                bandwidth_hz: 125e3,
                tx_power_dbm: -3,
            })
            .collect()
    }

    fn stats_with(r: f64, n: u64, v: f64) -> ArmStats {
        ArmStats {
            cumulative_reward: r,
            selection_count: n,
            mean: r / n as f64,
            m2: v * n as f64,
            last_score: 0.0,
        }
    }

    fn two_pass(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        (mean, var)
    }

    #[test]
    fn score_examples() {
        let s = ucb1_tuned_score(&stats_with(5.0, 10, 0.3), 100, VarianceMode::Empirical);
        let expected = 0.5 + (100f64.ln() / 10.0 * 0.25).sqrt();
        assert_relative_eq!(s, expected, max_relative = 1e-12);
        assert_relative_eq!(s, 0.83931, max_relative = 1e-5);
        assert_eq!(
            ucb1_tuned_score(&stats_with(5.0, 10, 0.0), 100, VarianceMode::Empirical),
            0.5
        );
        assert_eq!(
            ucb1_tuned_score(&stats_with(0.0, 1, 0.0), 1, VarianceMode::Empirical),
            0.0
        );
        assert_eq!(
            ucb1_tuned_score(&ArmStats::default(), 5, VarianceMode::Empirical),
            f64::INFINITY
        );
    }

    #[test]
    fn padded_variance_inflates_bonus() {
        let s = stats_with(5.0, 10, 0.01);
        let plain = ucb1_tuned_score(&s, 100, VarianceMode::Empirical);
        let padded = ucb1_tuned_score(&s, 100, VarianceMode::Padded);
        assert!(padded > plain);
        // clamp still applies
        assert!(padded <= 0.5 + (100f64.ln() / 40.0).sqrt() + 1e-12);
    }

    #[test]
    fn select_argmax_tie_and_unplayed() {
        let mut b = BanditState::new(arms(2), VarianceMode::Empirical).unwrap();
        b.update(0, 0.9).unwrap();
        b.update(1, 0.4).unwrap();
        assert_eq!(b.select_arm(), 0);

        let mut b = BanditState::new(arms(3), VarianceMode::Empirical).unwrap();
        b.update(0, 0.5).unwrap();
        b.update(1, 0.5).unwrap();
        b.update(2, 0.5).unwrap();
        assert_eq!(b.select_arm(), 0);

        let mut b = BanditState::new(arms(3), VarianceMode::Empirical).unwrap();
        b.update(0, 1.0).unwrap();
        b.update(2, 1.0).unwrap();
        assert_eq!(b.select_arm(), 1);
        assert_eq!(b.stats(1).last_score, f64::INFINITY);
    }

    #[test]
    fn empty_and_duplicate_arm_sets_rejected() {
        assert!(matches!(
            BanditState::new(vec![], VarianceMode::Empirical),
            Err(Error::Config(_))
        ));
        let mut a = arms(2);
        a.push(a[0]);
        assert!(matches!(
            BanditState::new(a, VarianceMode::Empirical),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn update_examples() {
        let mut b = BanditState::new(arms(3), VarianceMode::Empirical).unwrap();
        b.update(0, 1.0).unwrap();
        let s = b.stats(0);
        assert_eq!(
            (s.selection_count, s.cumulative_reward, s.mean, s.variance()),
            (1, 1.0, 1.0, 0.0)
        );

        b.update(1, 1.0).unwrap();
        b.update(1, 0.0).unwrap();
        assert_eq!(b.stats(1).mean, 0.5);
        assert_eq!(b.stats(1).variance(), 0.25);

        for r in [0.2, 0.4, 0.6] {
            b.update(2, r).unwrap();
        }
        let (mean, var) = two_pass(&[0.2, 0.4, 0.6]);
        assert_relative_eq!(b.stats(2).mean, mean, max_relative = 1e-12);
        assert_relative_eq!(b.stats(2).variance(), var, max_relative = 1e-12);
        assert_relative_eq!(
            b.stats(2).variance(),
            0.026666666666666,
            max_relative = 1e-9
        );
        assert_eq!(b.total_steps(), 6);
    }

    #[test]
    fn update_rejects_out_of_range_reward() {
        let mut b = BanditState::new(arms(1), VarianceMode::Empirical).unwrap();
        assert!(matches!(b.update(0, 1.5), Err(Error::Contract(_))));
        assert!(matches!(b.update(0, -0.1), Err(Error::Contract(_))));
        assert!(matches!(b.update(0, f64::NAN), Err(Error::Contract(_))));
        assert!(matches!(b.update(3, 0.5), Err(Error::Contract(_))));
    }

    #[test]
    fn reset_zeroes_and_is_idempotent() {
        let mut b = BanditState::new(arms(4), VarianceMode::Empirical).unwrap();
        for i in 0..4 {
            b.update(i, 0.25 * i as f64).unwrap();
        }
        b.select_arm();
        b.reset();
        let once = b.clone();
        b.reset();
        assert_eq!(once, b);
        assert_eq!(b.len(), 4);
        assert_eq!(b.total_steps(), 0);
        for i in 0..4 {
            assert_eq!(*b.stats(i), ArmStats::default());
        }
    }

    #[test]
    fn reset_state_behaves_like_fresh_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut used = BanditState::new(arms(5), VarianceMode::Empirical).unwrap();
        for _ in 0..200 {
            let a = used.select_arm();
            used.update(a, rng.random::<f64>()).unwrap();
        }
        used.reset();
        let mut fresh = BanditState::new(arms(5), VarianceMode::Empirical).unwrap();
        let mut ra = ChaCha8Rng::seed_from_u64(9);
        let mut rb = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let a = used.select_arm();
            let b = fresh.select_arm();
            assert_eq!(a, b);
            used.update(a, ra.random::<f64>()).unwrap();
            fresh.update(b, rb.random::<f64>()).unwrap();
        }
        assert_eq!(used, fresh);
    }

    #[test]
    fn welford_matches_two_pass_on_long_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let mut b = BanditState::new(arms(1), VarianceMode::Empirical).unwrap();
        for &x in &xs {
            b.update(0, x).unwrap();
        }
        let (mean, var) = two_pass(&xs);
        assert_relative_eq!(b.stats(0).mean, mean, max_relative = 1e-12);
        assert_relative_eq!(b.stats(0).variance(), var, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn score_increasing_in_reward(r in 0.0f64..50.0, dr in 1e-6f64..10.0, n in 1u64..100, v in 0.0f64..1.0, t in 1u64..10_000) {
            let lo = ucb1_tuned_score(&stats_with(r, n, v), t, VarianceMode::Empirical);
            let hi = ucb1_tuned_score(&stats_with(r + dr, n, v), t, VarianceMode::Empirical);
            prop_assert!(hi > lo);
        }

        #[test]
        fn bonus_is_clamped(r in 0.0f64..50.0, n in 1u64..100, v in 0.0f64..10.0, t in 1u64..10_000) {
            let s = stats_with(r, n, v);
            let bonus = ucb1_tuned_score(&s, t, VarianceMode::Empirical) - r / n as f64;
            prop_assert!(bonus <= ((t as f64).ln() / (4.0 * n as f64)).sqrt() + 1e-12);
        }

        #[test]
        fn welford_equivalence(xs in proptest::collection::vec(0.0f64..=1.0, 1..2000)) {
            let mut b = BanditState::new(arms(1), VarianceMode::Empirical).unwrap();
            for &x in &xs {
                b.update(0, x).unwrap();
            }
            let (mean, var) = two_pass(&xs);
            prop_assert!((b.stats(0).mean - mean).abs() <= 1e-12 * mean.abs().max(1e-300) + 1e-15);
            prop_assert!((b.stats(0).variance() - var).abs() <= 1e-12 * var.abs() + 1e-15);
        }

        #[test]
        fn selection_invariant_under_reward_scaling(seed in 0u64..1000, k in 0.1f64..100.0) {
            // raw rewards scaled by k then normalized by the (scaled) max give identical choices
            let raw = [3.0, 2.0, 1.0, 2.5];
            let run = |scale: f64| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let max = raw.iter().cloned().fold(0.0, f64::max) * scale;
                let mut b = BanditState::new(arms(4), VarianceMode::Empirical).unwrap();
                let mut picks = Vec::new();
                for _ in 0..100 {
                    let a = b.select_arm();
                    let r = if rng.random::<f64>() < 0.7 { raw[a] * scale } else { 0.0 };
                    b.update(a, r / max).unwrap();
                    picks.push(a);
                }
                picks
            };
            prop_assert_eq!(run(1.0), run(k));
        }
    }
}
