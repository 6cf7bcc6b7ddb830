//! The BelMan decision loop: I-projection arm selection, conjugate update of
//! the played arm, rI-projection of the pseudobelief.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::expfam::{BeliefState, RewardFamily};
use crate::manifold::{i_projection_score, ri_projection, BeliefReward, ExposureSchedule, PseudobeliefFocal};
use crate::scalar::Scalar;

/// Scores closer than this are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// One decision of the loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<F> {
    /// 1-based step index.
    pub t: usize,
    pub arm: usize,
    pub reward: F,
}

/// Complete state of one BelMan run.
#[derive(Debug, Clone)]
pub struct BelManState<F> {
    arms: Vec<BeliefReward<F>>,
    pseudo: PseudobeliefFocal<F>,
    t: usize,
    schedule: ExposureSchedule,
    rng: ChaCha8Rng,
    ri_every: usize,
}

impl<F: Scalar> BelManState<F> {
    /// `k` arms with the family's default prior.
    pub fn new(family: RewardFamily, k: usize, schedule: ExposureSchedule, seed: u64) -> Result<Self> {
        Self::with_priors(vec![family.default_prior(); k], schedule, seed)
    }

    /// Arms start from the given priors; Q̄₀ is the rI-projection of the
    /// priors at τ(1).
    pub fn with_priors(priors: Vec<BeliefState<F>>, schedule: ExposureSchedule, seed: u64) -> Result<Self> {
        if priors.len() < 2 {
            return Err(BanditError::Domain(format!(
                "BelMan needs at least two arms, got {}",
                priors.len()
            )));
        }
        schedule.validate().map_err(BanditError::Domain)?;
        let arms: Vec<BeliefReward<F>> = priors.into_iter().map(BeliefReward::new).collect();
        let pseudo = ri_projection(&arms, schedule.exposure(1), None)?;
        Ok(Self {
            arms,
            pseudo,
            t: 0,
            schedule,
            rng: ChaCha8Rng::seed_from_u64(seed),
            ri_every: 1,
        })
    }

    /// Recompute the pseudobelief only every `k` steps (default 1).
    pub fn with_ri_every(mut self, k: usize) -> Self {
        self.ri_every = k.max(1);
        self
    }

    pub fn arms(&self) -> &[BeliefReward<F>] {
        &self.arms
    }

    pub fn pseudo(&self) -> &PseudobeliefFocal<F> {
        &self.pseudo
    }

    /// Steps taken so far.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn schedule(&self) -> ExposureSchedule {
        self.schedule
    }

    pub fn family(&self) -> RewardFamily {
        self.arms[0].family()
    }

    /// Arm-dependent part of `KL(P^a ‖ Q̄)` for every arm.
    pub fn scores(&self) -> Result<Vec<F>> {
        self.arms.iter().map(|a| i_projection_score(a, &self.pseudo)).collect()
    }

    /// Arm minimizing the I-projection score; ties within
    /// [`TIE_TOLERANCE`] are broken uniformly at random.
    pub fn select_arm(&mut self) -> Result<usize> {
        let scores = self.scores()?;
        let best = scores.iter().copied().fold(F::infinity(), F::min);
        let tol = F::lit(TIE_TOLERANCE);
        let tied: Vec<usize> = scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == best || s - best <= tol)
            .map(|(i, _)| i)
            .collect();
        match tied.len() {
            0 => Err(BanditError::Domain("no finite arm score".into())),
            1 => Ok(tied[0]),
            n => Ok(tied[self.rng.random_range(0..n)]),
        }
    }

    /// Plays one step: select, observe `reward(arm)`, update that arm's
    /// belief, refresh Q̄ at τ(t + 1).
    pub fn step(&mut self, mut reward: impl FnMut(usize) -> F) -> Result<StepRecord<F>> {
        let arm = self.select_arm()?;
        let x = reward(arm);
        self.observe(arm, x)?;
        Ok(StepRecord { t: self.t, arm, reward: x })
    }

    /// Feeds back the reward of an externally chosen `arm` and advances the
    /// clock. Used by [`BelManState::step`] and by the queueing scheduler.
    pub fn observe(&mut self, arm: usize, reward: F) -> Result<()> {
        let updated = self.arms[arm].belief.update(reward)?;
        self.arms[arm] = BeliefReward::new(updated);
        let next = self.t + 1;
        if next.is_multiple_of(self.ri_every) {
            let tau = self.schedule.exposure(next);
            self.pseudo = ri_projection(&self.arms, tau, Some(&self.pseudo.pseudo))?;
        }
        self.t = next;
        Ok(())
    }

    /// Plays `horizon` steps.
    pub fn run(&mut self, horizon: usize, mut reward: impl FnMut(usize) -> F) -> Result<Vec<StepRecord<F>>> {
        let mut trace = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            trace.push(self.step(&mut reward)?);
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::pseudobelief_barycentre;
    use rand::SeedableRng;

    fn two(a: (f64, f64), b: (f64, f64), schedule: ExposureSchedule) -> BelManState<f64> {
        BelManState::with_priors(
            vec![
                BeliefState::new_beta(a.0, a.1).unwrap(),
                BeliefState::new_beta(b.0, b.1).unwrap(),
            ],
            schedule,
            0,
        )
        .unwrap()
    }

    #[test]
    fn symmetric_ties_are_uniform() {
        let mut counts = [0usize; 3];
        for seed in 0..10_000 {
            let mut s = BelManState::<f64>::new(RewardFamily::Bernoulli, 3, ExposureSchedule::default(), seed).unwrap();
            counts[s.select_arm().unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 10_000.0 - 1.0 / 3.0).abs() < 0.05, "{counts:?}");
        }
    }

    #[test]
    fn small_exposure_prefers_higher_mean() {
        let mut s = two((50.0, 10.0), (10.0, 50.0), ExposureSchedule::Infinite);
        let arms = s.arms.clone();
        s.pseudo = ri_projection(&arms, 0.1, None).unwrap();
        assert_eq!(s.select_arm().unwrap(), 0);
    }

    #[test]
    fn infinite_exposure_prefers_under_explored_arm() {
        let mut s = two((100.0, 100.0), (2.0, 2.0), ExposureSchedule::Infinite);
        let scores = s.scores().unwrap();
        // the diffuse arm is the one closer to the barycentre
        assert!(scores[1] < scores[0]);
        assert_eq!(s.select_arm().unwrap(), 1);
    }

    #[test]
    fn initial_pseudobelief_is_prior_barycentre() {
        let s = BelManState::<f64>::new(RewardFamily::Bernoulli, 4, ExposureSchedule::default(), 1).unwrap();
        let b = pseudobelief_barycentre(s.arms()).unwrap();
        assert!((s.pseudo().pseudo.alpha() - b.alpha()).abs() < 1e-12);
        assert!(s.pseudo().tau.is_infinite());
    }

    fn bernoulli_env(means: Vec<f64>, seed: u64) -> impl FnMut(usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        move |a| if rng.random::<f64>() < means[a] { 1.0 } else { 0.0 }
    }

    #[test]
    fn zero_and_short_horizons() {
        let mut s = BelManState::<f64>::new(RewardFamily::Bernoulli, 2, ExposureSchedule::default(), 3).unwrap();
        assert!(s.run(0, bernoulli_env(vec![0.5, 0.6], 1)).unwrap().is_empty());
        let trace = s.run(5, bernoulli_env(vec![0.5, 0.6], 1)).unwrap();
        assert_eq!(trace.len(), 5);
        assert_eq!(trace.iter().map(|r| r.t).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn only_played_arm_changes_and_counts_add_up() {
        let mut s = BelManState::<f64>::new(RewardFamily::Bernoulli, 4, ExposureSchedule::default(), 9).unwrap();
        let mut env = bernoulli_env(vec![0.2, 0.4, 0.6, 0.8], 2);
        for t in 1..=300 {
            let before = s.arms().to_vec();
            let rec = s.step(&mut env).unwrap();
            for (i, (b, a)) in before.iter().zip(s.arms()).enumerate() {
                if i != rec.arm {
                    assert_eq!(b, a);
                }
            }
            let extra: f64 = s.arms().iter().map(|a| a.belief.count() - 2.0).sum();
            assert_eq!(extra, t as f64);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let run = || {
            let mut s = BelManState::<f64>::new(RewardFamily::Bernoulli, 3, ExposureSchedule::default(), 42).unwrap();
            s.run(400, bernoulli_env(vec![0.3, 0.5, 0.55], 7)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn pseudobelief_is_a_fixed_point_of_the_projection() {
        let mut s = BelManState::<f64>::new(RewardFamily::Bernoulli, 3, ExposureSchedule::default(), 5).unwrap();
        s.run(200, bernoulli_env(vec![0.3, 0.5, 0.7], 5)).unwrap();
        let again = ri_projection(s.arms(), s.pseudo().tau, Some(&s.pseudo().pseudo)).unwrap();
        assert!((again.pseudo.alpha() - s.pseudo().pseudo.alpha()).abs() < 1e-8);
        assert!((again.pseudo.beta() - s.pseudo().pseudo.beta()).abs() < 1e-8);
    }

    fn pure_exploration_pulls(means: Vec<f64>, seed: u64) -> Vec<usize> {
        let k = means.len();
        let mut s = BelManState::<f64>::new(RewardFamily::Bernoulli, k, ExposureSchedule::Infinite, seed).unwrap();
        let trace = s.run(10_000, bernoulli_env(means, seed + 3)).unwrap();
        let mut pulls = vec![0usize; k];
        for r in &trace {
            pulls[r.arm] += 1;
        }
        pulls
    }

    /// Without exploitation bias every arm keeps a linear share of the
    /// pulls, but the share is largest for arms whose mean sits near the
    /// barycentre and smallest for the extreme arms: equalising
    /// KL(P^a || Q) gives n_a roughly proportional to the squared
    /// barycentre density at the arm's mean.
    #[test]
    fn pure_exploration_favours_central_arms() {
        for seed in [11, 12, 13] {
            let pulls = pure_exploration_pulls(vec![0.1, 0.3, 0.5, 0.7, 0.9], seed);
            assert!(pulls.iter().all(|&p| p >= 200), "{pulls:?}");
            assert!(pulls[2] > pulls[1] && pulls[2] > pulls[3], "{pulls:?}");
            assert!(pulls[1] > pulls[0] && pulls[3] > pulls[4], "{pulls:?}");
        }
    }

    /// Uniform coverage of at least T/(2K) pulls per arm does not hold:
    /// on spread-out means the extreme arms receive about 7% each, and even
    /// with equal means an arm whose early rewards run low is starved for
    /// thousands of steps.
    #[test]
    #[ignore = "does not hold: extreme arms receive about 7% of pulls (see pure_exploration_favours_central_arms)"]
    fn pure_exploration_spreads_pulls() {
        let pulls = pure_exploration_pulls(vec![0.1, 0.3, 0.5, 0.7, 0.9], 11);
        for &p in &pulls {
            assert!(p >= 10_000 / 10, "{pulls:?}");
        }
    }

    #[test]
    fn exponential_rewards_run() {
        let mut s = BelManState::<f64>::new(RewardFamily::Exponential, 3, ExposureSchedule::default(), 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rates = [5.0, 2.0, 1.0];
        let trace = s
            .run(300, |a| -(1.0 - rng.random::<f64>()).ln() / rates[a])
            .unwrap();
        assert_eq!(trace.len(), 300);
    }

    #[test]
    fn ri_every_skips_projections() {
        let mut s = BelManState::<f64>::new(RewardFamily::Bernoulli, 2, ExposureSchedule::default(), 1)
            .unwrap()
            .with_ri_every(10);
        let q0 = *s.pseudo();
        s.run(9, bernoulli_env(vec![0.5, 0.6], 1)).unwrap();
        assert_eq!(*s.pseudo(), q0);
        s.run(1, bernoulli_env(vec![0.5, 0.6], 1)).unwrap();
        assert_ne!(*s.pseudo(), q0);
    }

    #[test]
    fn rejects_out_of_support_rewards() {
        let mut s = BelManState::<f64>::new(RewardFamily::Bernoulli, 2, ExposureSchedule::default(), 1).unwrap();
        assert!(s.step(|_| 0.5).is_err());
    }
}
