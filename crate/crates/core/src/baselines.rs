//! Reference bandit algorithms and the [`Policy`] interface shared with
//! BelMan.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::belman::BelManState;
use crate::error::{BanditError, Result};
use crate::expfam::{BeliefState, RewardFamily};
use crate::special::{beta_quantile, gamma_quantile};

/// Bisection accuracy of the KL-UCB indices.
pub const KLUCB_TOL: f64 = 1e-8;
/// Accuracy of the Bayes-UCB posterior quantiles.
pub const QUANTILE_TOL: f64 = 1e-8;

/// Tunable constants of the reference algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Conventions {
    /// KL-UCB exploration level `ln t + klucb_c · ln ln t`.
    pub klucb_c: f64,
    /// Bayes-UCB quantile level `1 − 1/(t (ln T)^bayes_ucb_c)`.
    pub bayes_ucb_c: f64,
    /// Q-UCB bonus `q_ucb_scale · sqrt(ln² t / (2 n))`.
    pub q_ucb_scale: f64,
    /// Q-ThS forced-exploration rate `min(1, q_ths_explore · K ln² t / t)`.
    pub q_ths_explore: f64,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            klucb_c: 3.0,
            bayes_ucb_c: 0.0,
            q_ucb_scale: 1.0,
            q_ths_explore: crate::queueing::QTHS_EXPLORE_CONST,
        }
    }
}

impl Conventions {
    pub fn is_default(&self) -> bool {
        *self == Self::default()
    }

    /// Every constant outside its admissible range.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v, positive) in [
            ("klucb_c", self.klucb_c, false),
            ("bayes_ucb_c", self.bayes_ucb_c, false),
            ("q_ucb_scale", self.q_ucb_scale, true),
            ("q_ths_explore", self.q_ths_explore, false),
        ] {
            let ok = v.is_finite() && if positive { v > 0.0 } else { v >= 0.0 };
            if !ok {
                let bound = if positive { "positive" } else { "non-negative" };
                out.push(format!("baselines.{name} must be finite and {bound}, got {v}"));
            }
        }
        out
    }
}

/// A sequential decision rule: choose an arm at 1-based step `t`, then see
/// its reward.
pub trait Policy: Send {
    fn select(&mut self, t: usize) -> Result<usize>;
    fn observe(&mut self, arm: usize, reward: f64) -> Result<()>;
}

impl Policy for BelManState<f64> {
    fn select(&mut self, _t: usize) -> Result<usize> {
        self.select_arm()
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        BelManState::observe(self, arm, reward)
    }
}

/// Sufficient statistics of one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmStats {
    pub pulls: u64,
    pub reward_sum: f64,
    pub reward_sq_sum: f64,
    pub posterior: BeliefState<f64>,
}

impl ArmStats {
    pub fn new(family: RewardFamily) -> Self {
        Self {
            pulls: 0,
            reward_sum: 0.0,
            reward_sq_sum: 0.0,
            posterior: family.default_prior(),
        }
    }

    pub fn record(&mut self, reward: f64) -> Result<()> {
        self.posterior = self.posterior.update(reward)?;
        self.pulls += 1;
        self.reward_sum += reward;
        self.reward_sq_sum += reward * reward;
        Ok(())
    }

    /// Empirical mean; zero before the first pull.
    pub fn mean(&self) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            self.reward_sum / self.pulls as f64
        }
    }

    /// Empirical (biased) variance.
    pub fn variance(&self) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            let m = self.mean();
            (self.reward_sq_sum / self.pulls as f64 - m * m).max(0.0)
        }
    }
}

/// `mean + sqrt(2 ln t / n)`; `+∞` for unpulled arms.
pub fn ucb_index(stats: &ArmStats, t: usize) -> f64 {
    if stats.pulls == 0 {
        return f64::INFINITY;
    }
    let n = stats.pulls as f64;
    stats.mean() + (2.0 * (t as f64).ln() / n).sqrt()
}

/// `mean + sqrt(ln t / n · min(1/4, V + sqrt(2 ln t / n)))`.
pub fn ucb_tuned_index(stats: &ArmStats, t: usize) -> f64 {
    if stats.pulls == 0 {
        return f64::INFINITY;
    }
    let n = stats.pulls as f64;
    let lt = (t as f64).ln();
    let v = stats.variance() + (2.0 * lt / n).sqrt();
    stats.mean() + (lt / n * v.min(0.25)).sqrt()
}

/// KL-UCB exploration level `ln t + 3 ln ln t`, or `ln t` for `t < 3`.
pub fn klucb_exploration(t: usize) -> f64 {
    klucb_exploration_with(t, Conventions::default().klucb_c)
}

/// KL-UCB exploration level `ln t + c ln ln t`, or `ln t` for `t < 3`.
pub fn klucb_exploration_with(t: usize, c: f64) -> f64 {
    let lt = (t.max(1) as f64).ln();
    if t < 3 {
        lt
    } else {
        lt + c * lt.ln()
    }
}

/// Bernoulli KL `d(p, q)` with `0 ln 0 = 0`.
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    let term = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// KL between exponential distributions with means `m1`, `m2`.
pub fn kl_exponential(m1: f64, m2: f64) -> f64 {
    let r = m1 / m2;
    r - 1.0 - r.ln()
}

/// `max{q ∈ [p̂, 1) : n · d(p̂, q) ≤ level}` by bisection to [`KLUCB_TOL`].
pub fn klucb_index(mean: f64, pulls: u64, level: f64) -> f64 {
    if pulls == 0 {
        return f64::INFINITY;
    }
    let p = mean.clamp(0.0, 1.0);
    let budget = level / pulls as f64;
    let (mut lo, mut hi) = (p, 1.0);
    while hi - lo > KLUCB_TOL {
        let mid = 0.5 * (lo + hi);
        if kl_bernoulli(p, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Exponential-reward KL-UCB index on the mean, with an expanding upper
/// bracket and bisection to relative accuracy [`KLUCB_TOL`].
pub fn klucb_exp_index(mean: f64, pulls: u64, level: f64) -> f64 {
    if pulls == 0 {
        return f64::INFINITY;
    }
    let m = mean.max(1e-12);
    let budget = level / pulls as f64;
    let mut hi = 2.0 * m;
    while kl_exponential(m, hi) <= budget {
        hi *= 2.0;
    }
    let mut lo = m;
    while hi - lo > KLUCB_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if kl_exponential(m, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Posterior upper quantile of the mean reward at level `1 − 1/t`.
pub fn bayes_ucb_index(posterior: &BeliefState<f64>, t: usize) -> Result<f64> {
    bayes_ucb_quantile(posterior, bayes_ucb_level(t, 1, 0.0))
}

/// Bayes-UCB quantile level `1 − 1/(t (ln T)^c)` at step `t` of horizon `T`.
pub fn bayes_ucb_level(t: usize, horizon: usize, c: f64) -> f64 {
    let scale = if c == 0.0 { 1.0 } else { (horizon.max(1) as f64).ln().powf(c) };
    1.0 - 1.0 / (t.max(1) as f64 * scale)
}

/// Posterior upper quantile of the mean reward at level `p`.
pub fn bayes_ucb_quantile(posterior: &BeliefState<f64>, p: f64) -> Result<f64> {
    match posterior.family() {
        RewardFamily::Bernoulli => beta_quantile(posterior.alpha(), posterior.beta(), p, QUANTILE_TOL),
        RewardFamily::Exponential => {
            // mean 1/θ is decreasing in θ; at level 0 the upper quantile of
            // the mean is its infimum, 0
            if p <= 0.0 {
                return Ok(0.0);
            }
            let q = gamma_quantile(posterior.alpha(), posterior.beta(), 1.0 - p, QUANTILE_TOL)?;
            Ok(if q > 0.0 { 1.0 / q } else { f64::INFINITY })
        }
    }
}

/// Index of the largest value; exact ties broken uniformly with `rng`.
pub fn argmax_random_tie(values: &[f64], rng: &mut impl Rng) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..values.len()).filter(|&i| values[i] == best).collect();
    match tied.len() {
        0 => rng.random_range(0..values.len()),
        1 => tied[0],
        n => tied[rng.random_range(0..n)],
    }
}

/// Which index rule an [`IndexPolicy`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexRule {
    Ucb,
    UcbTuned,
    KlUcb,
    KlUcbExp,
    BayesUcb,
}

/// Play the arm with the largest index.
#[derive(Debug, Clone)]
pub struct IndexPolicy {
    rule: IndexRule,
    stats: Vec<ArmStats>,
    rng: ChaCha8Rng,
    conventions: Conventions,
    horizon: usize,
}

impl IndexPolicy {
    pub fn new(rule: IndexRule, family: RewardFamily, k: usize, seed: u64) -> Self {
        Self {
            rule,
            stats: vec![ArmStats::new(family); k],
            rng: ChaCha8Rng::seed_from_u64(seed),
            conventions: Conventions::default(),
            horizon: 1,
        }
    }

    /// Uses `conventions` in place of the defaults; `horizon` enters the
    /// Bayes-UCB level.
    pub fn with_conventions(mut self, conventions: Conventions, horizon: usize) -> Self {
        self.conventions = conventions;
        self.horizon = horizon;
        self
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    fn klucb_level(&self, t: usize) -> f64 {
        klucb_exploration_with(t, self.conventions.klucb_c)
    }

    fn index(&self, s: &ArmStats, t: usize) -> Result<f64> {
        Ok(match self.rule {
            IndexRule::Ucb => ucb_index(s, t),
            IndexRule::UcbTuned => ucb_tuned_index(s, t),
            IndexRule::KlUcb => klucb_index(s.mean(), s.pulls, self.klucb_level(t)),
            IndexRule::KlUcbExp => klucb_exp_index(s.mean(), s.pulls, self.klucb_level(t)),
            IndexRule::BayesUcb => bayes_ucb_quantile(
                &s.posterior,
                bayes_ucb_level(t, self.horizon, self.conventions.bayes_ucb_c),
            )?,
        })
    }
}

impl Policy for IndexPolicy {
    fn select(&mut self, t: usize) -> Result<usize> {
        let idx = self
            .stats
            .iter()
            .map(|s| self.index(s, t))
            .collect::<Result<Vec<f64>>>()?;
        Ok(argmax_random_tie(&idx, &mut self.rng))
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.stats[arm].record(reward)
    }
}

/// Draws one parameter from a posterior and returns the implied mean reward.
pub fn posterior_sample_mean(posterior: &BeliefState<f64>, rng: &mut impl Rng) -> Result<f64> {
    match posterior.family() {
        RewardFamily::Bernoulli => Beta::new(posterior.alpha(), posterior.beta())
            .map(|d| d.sample(rng))
            .map_err(|e| BanditError::Domain(e.to_string())),
        RewardFamily::Exponential => Gamma::new(posterior.alpha(), 1.0 / posterior.beta())
            .map(|d| 1.0 / d.sample(rng))
            .map_err(|e| BanditError::Domain(e.to_string())),
    }
}

/// Thompson sampling: argmax of the sampled mean (argmin of the sampled
/// rate for exponential rewards).
pub fn thompson_select(posteriors: &[BeliefState<f64>], rng: &mut impl Rng) -> Result<usize> {
    let draws = posteriors
        .iter()
        .map(|p| posterior_sample_mean(p, rng))
        .collect::<Result<Vec<f64>>>()?;
    Ok(argmax_random_tie(&draws, rng))
}

#[derive(Debug, Clone)]
pub struct ThompsonPolicy {
    posteriors: Vec<BeliefState<f64>>,
    rng: ChaCha8Rng,
}

impl ThompsonPolicy {
    pub fn new(family: RewardFamily, k: usize, seed: u64) -> Self {
        Self {
            posteriors: vec![family.default_prior(); k],
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn posteriors(&self) -> &[BeliefState<f64>] {
        &self.posteriors
    }
}

impl Policy for ThompsonPolicy {
    fn select(&mut self, _t: usize) -> Result<usize> {
        thompson_select(&self.posteriors, &mut self.rng)
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.posteriors[arm] = self.posteriors[arm].update(reward)?;
        Ok(())
    }
}

/// Uniform choice over `k` arms.
pub fn random_select(k: usize, rng: &mut impl Rng) -> usize {
    rng.random_range(0..k)
}

#[derive(Debug, Clone)]
pub struct RandomPolicy {
    k: usize,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn select(&mut self, _t: usize) -> Result<usize> {
        Ok(random_select(self.k, &mut self.rng))
    }

    fn observe(&mut self, _arm: usize, _reward: f64) -> Result<()> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::regularized_beta;
    use proptest::prelude::*;

    fn stats(mean: f64, pulls: u64) -> ArmStats {
        ArmStats {
            pulls,
            reward_sum: mean * pulls as f64,
            reward_sq_sum: mean * pulls as f64,
            posterior: RewardFamily::Bernoulli.default_prior(),
        }
    }

    #[test]
    fn ucb_examples() {
        assert_eq!(ucb_index(&stats(0.0, 0), 10), f64::INFINITY);
        let v = ucb_index(&stats(0.5, 10), 100);
        assert!((v - (0.5 + (2.0 * 100f64.ln() / 10.0).sqrt())).abs() < 1e-14);
        assert!((v - 1.4597).abs() < 1e-3);
        let mut prev = f64::INFINITY;
        for n in 1..100 {
            let v = ucb_index(&stats(0.5, n), 100);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn klucb_matches_grid_scan() {
        let level = 100f64.ln();
        let v = klucb_index(0.5, 10, level);
        // largest point of a 1e-6 grid satisfying the constraint
        let mut best = 0.5;
        let mut q = 0.5;
        while q < 1.0 {
            if 10.0 * kl_bernoulli(0.5, q) <= level {
                best = q;
            }
            q += 1e-6;
        }
        assert!((v - best).abs() < 2e-6, "{v} vs {best}");
    }

    #[test]
    fn klucb_zero_mean_closed_form() {
        let (n, level) = (7, 3.2);
        let v = klucb_index(0.0, n, level);
        assert!((v - (1.0 - (-level / n as f64).exp())).abs() < 1e-7);
    }

    #[test]
    fn klucb_exp_solves_its_constraint() {
        let (m, n, level) = (0.4, 12, klucb_exploration(500));
        let v = klucb_exp_index(m, n, level);
        assert!(v > m);
        assert!((n as f64 * kl_exponential(m, v) - level).abs() < 1e-5);
    }

    #[test]
    fn quantile_examples() {
        let b11 = BeliefState::new_beta(1.0, 1.0).unwrap();
        assert!((bayes_ucb_index(&b11, 2).unwrap() - 0.5).abs() < 1e-8);
        assert_eq!(bayes_ucb_level(10, 500, 0.0), 0.9);
        let level = bayes_ucb_level(4, 100, 2.0);
        assert!((level - (1.0 - 1.0 / (4.0 * 100f64.ln().powi(2)))).abs() < 1e-15);
        assert_eq!(klucb_exploration_with(100, 0.0), 100f64.ln());
        let b22 = BeliefState::new_beta(2.0, 2.0).unwrap();
        assert!((bayes_ucb_index(&b22, 2).unwrap() - 0.5).abs() < 1e-8);
        // Beta(5, 2) at 0.9 against a 1e-7-step CDF scan near the answer
        let q = bayes_ucb_index(&BeliefState::new_beta(5.0, 2.0).unwrap(), 10).unwrap();
        let mut x = q - 1e-4;
        while regularized_beta(5.0, 2.0, x).unwrap() < 0.9 {
            x += 1e-7;
        }
        assert!((q - x).abs() < 2e-7, "{q} vs {x}");
    }

    #[test]
    fn thompson_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sep = [
            BeliefState::new_beta(1000.0, 1.0).unwrap(),
            BeliefState::new_beta(1.0, 1000.0).unwrap(),
        ];
        let zeros = (0..1000).filter(|_| thompson_select(&sep, &mut rng).unwrap() == 0).count();
        assert!(zeros > 990);
        let same = [BeliefState::new_beta(3.0, 3.0).unwrap(); 2];
        let zeros = (0..10_000).filter(|_| thompson_select(&same, &mut rng).unwrap() == 0).count();
        assert!((zeros as f64 / 1e4 - 0.5).abs() < 0.05);
        let seq = |seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| thompson_select(&same, &mut r).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(seq(5), seq(5));
    }

    #[test]
    fn thompson_exponential_prefers_low_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let post = [
            BeliefState::new_gamma(500.0, 100.0).unwrap(), // rate ≈ 5
            BeliefState::new_gamma(500.0, 500.0).unwrap(), // rate ≈ 1
        ];
        let ones = (0..1000).filter(|_| thompson_select(&post, &mut rng).unwrap() == 1).count();
        assert!(ones > 990);
    }

    #[test]
    fn random_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(random_select(1, &mut rng), 0);
        let mut counts = [0usize; 5];
        for _ in 0..50_000 {
            counts[random_select(5, &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / 50_000.0 - 0.2).abs() < 0.02);
        }
        let mut a = RandomPolicy::new(5, 4);
        let mut b = RandomPolicy::new(5, 4);
        for t in 1..100 {
            assert_eq!(a.select(t).unwrap(), b.select(t).unwrap());
        }
    }

    #[test]
    fn index_policies_pull_every_arm_first() {
        for rule in [IndexRule::Ucb, IndexRule::UcbTuned, IndexRule::KlUcb] {
            let mut p = IndexPolicy::new(rule, RewardFamily::Bernoulli, 6, 1);
            let mut seen = std::collections::HashSet::new();
            for t in 1..=6 {
                let a = p.select(t).unwrap();
                seen.insert(a);
                p.observe(a, 1.0).unwrap();
            }
            assert_eq!(seen.len(), 6, "{rule:?}");
        }
    }

    proptest! {
        #[test]
        fn indices_dominate_mean(mean in 0.0f64..=1.0, pulls in 1u64..500, t in 1usize..10_000) {
            let s = stats(mean, pulls);
            prop_assert!(ucb_index(&s, t) >= s.mean());
            prop_assert!(klucb_index(mean, pulls, klucb_exploration(t)) >= mean - 1e-12);
            prop_assert!(klucb_exp_index(mean.max(1e-3), pulls, klucb_exploration(t)) >= mean.max(1e-3));
        }
    }
}
