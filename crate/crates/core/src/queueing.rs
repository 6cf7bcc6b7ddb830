//! Discrete-time single queue served by one of K Bernoulli servers per slot.
//!
//! Each slot: `A(t) ~ Poisson(λ)` jobs arrive; if the queue is non-empty a
//! scheduler picks a server `a`, which completes one job with probability
//! `μ_a`; then `Q(t) = Q(t−1) + A(t) − S(t)`. Arrivals and a uniform service
//! variate `U_t` are drawn every slot from two separate streams, and server
//! `a` succeeds iff `U_t < μ_a`. Sharing both streams across schedulers
//! couples their queues (common random numbers).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::baselines::{argmax_random_tie, random_select, thompson_select, Conventions, Policy};
use crate::belman::BelManState;
use crate::error::{BanditError, Result};
use crate::expfam::{BeliefState, RewardFamily};
use crate::manifold::ExposureSchedule;

/// Arrival rate, server success probabilities and run length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueConfig {
    pub lambda: f64,
    pub mu: Vec<f64>,
    pub horizon: usize,
    pub n_runs: usize,
}

impl QueueConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            out.push(format!("arrival rate {} must be positive", self.lambda));
        }
        if self.mu.len() < 2 {
            out.push(format!("need at least 2 servers, got {}", self.mu.len()));
        }
        for (i, &m) in self.mu.iter().enumerate() {
            if !(m > 0.0 && m < 1.0) {
                out.push(format!("server {i}: service rate {m} not in (0, 1)"));
            }
        }
        let best = self.mu.iter().copied().fold(0.0, f64::max);
        if self.lambda >= best {
            out.push(format!(
                "unstable queue: arrival rate {} is not below the best service rate {best}",
                self.lambda
            ));
        }
        if self.horizon == 0 {
            out.push("horizon must be at least 1".into());
        }
        if self.n_runs == 0 {
            out.push("n_runs must be at least 1".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(BanditError::Validation(p))
        }
    }

    /// Index of the fastest server (first on ties).
    pub fn best_server(&self) -> usize {
        let mut best = 0;
        for (i, &m) in self.mu.iter().enumerate() {
            if m > self.mu[best] {
                best = i;
            }
        }
        best
    }
}

/// Scheduling rules for the queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    BelmanQ,
    Thompson,
    QUcb,
    QThs,
    Opt,
    Random,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 6] = [
        SchedulerKind::BelmanQ,
        SchedulerKind::Thompson,
        SchedulerKind::QUcb,
        SchedulerKind::QThs,
        SchedulerKind::Opt,
        SchedulerKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::BelmanQ => "belman-q",
            SchedulerKind::Thompson => "thompson",
            SchedulerKind::QUcb => "q-ucb",
            SchedulerKind::QThs => "q-ths",
            SchedulerKind::Opt => "opt",
            SchedulerKind::Random => "random",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Q-UCB: `p̂_a + sqrt(ln² t / (2 n_a))`, unserved-yet servers first.
#[derive(Debug, Clone)]
pub struct QUcb {
    pulls: Vec<u64>,
    successes: Vec<u64>,
    scale: f64,
    rng: ChaCha8Rng,
}

impl QUcb {
    pub fn new(k: usize, seed: u64) -> Self {
        Self::with_scale(k, Conventions::default().q_ucb_scale, seed)
    }

    /// Q-UCB with the exploration bonus multiplied by `scale`.
    pub fn with_scale(k: usize, scale: f64, seed: u64) -> Self {
        Self {
            pulls: vec![0; k],
            successes: vec![0; k],
            scale,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn index(&self, arm: usize, t: usize) -> f64 {
        let n = self.pulls[arm];
        if n == 0 {
            return f64::INFINITY;
        }
        let lt = (t.max(1) as f64).ln();
        self.successes[arm] as f64 / n as f64 + self.scale * (lt * lt / (2.0 * n as f64)).sqrt()
    }
}

impl Policy for QUcb {
    fn select(&mut self, t: usize) -> Result<usize> {
        let idx: Vec<f64> = (0..self.pulls.len()).map(|a| self.index(a, t)).collect();
        Ok(argmax_random_tie(&idx, &mut self.rng))
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.pulls[arm] += 1;
        if reward > 0.5 {
            self.successes[arm] += 1;
        }
        Ok(())
    }
}

/// Thompson sampling with forced uniform exploration at rate
/// `min(1, explore_const · K · ln² t / t)`.
#[derive(Debug, Clone)]
pub struct QThs {
    posteriors: Vec<BeliefState<f64>>,
    explore_const: f64,
    rng: ChaCha8Rng,
    explorations: u64,
}

/// Default forced-exploration constant of Q-ThS.
pub const QTHS_EXPLORE_CONST: f64 = 3.0;

impl QThs {
    pub fn new(k: usize, explore_const: f64, seed: u64) -> Self {
        Self {
            posteriors: vec![RewardFamily::Bernoulli.default_prior(); k],
            explore_const,
            rng: ChaCha8Rng::seed_from_u64(seed),
            explorations: 0,
        }
    }

    pub fn exploration_rate(&self, t: usize) -> f64 {
        let lt = (t.max(1) as f64).ln();
        (self.explore_const * self.posteriors.len() as f64 * lt * lt / t.max(1) as f64).min(1.0)
    }

    /// Number of forced-exploration decisions so far.
    pub fn explorations(&self) -> u64 {
        self.explorations
    }
}

impl Policy for QThs {
    fn select(&mut self, t: usize) -> Result<usize> {
        if self.rng.random::<f64>() < self.exploration_rate(t) {
            self.explorations += 1;
            Ok(random_select(self.posteriors.len(), &mut self.rng))
        } else {
            thompson_select(&self.posteriors, &mut self.rng)
        }
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.posteriors[arm] = self.posteriors[arm].update(reward)?;
        Ok(())
    }
}

/// Full-information scheduler: always the fastest server.
#[derive(Debug, Clone)]
pub struct Opt {
    best: usize,
}

impl Opt {
    pub fn new(mu: &[f64]) -> Self {
        let cfg_best = mu
            .iter()
            .enumerate()
            .fold(0, |b, (i, &m)| if m > mu[b] { i } else { b });
        Self { best: cfg_best }
    }
}

impl Policy for Opt {
    fn select(&mut self, _t: usize) -> Result<usize> {
        Ok(self.best)
    }

    fn observe(&mut self, _arm: usize, _reward: f64) -> Result<()> {
        Ok(())
    }
}

/// Builds a scheduler seeded with `seed`.
pub fn make_scheduler(
    kind: SchedulerKind,
    mu: &[f64],
    schedule: ExposureSchedule,
    conventions: &Conventions,
    seed: u64,
) -> Result<Box<dyn Policy>> {
    let k = mu.len();
    Ok(match kind {
        SchedulerKind::BelmanQ => Box::new(BelManState::<f64>::new(RewardFamily::Bernoulli, k, schedule, seed)?),
        SchedulerKind::Thompson => Box::new(crate::baselines::ThompsonPolicy::new(RewardFamily::Bernoulli, k, seed)),
        SchedulerKind::QUcb => Box::new(QUcb::with_scale(k, conventions.q_ucb_scale, seed)),
        SchedulerKind::QThs => Box::new(QThs::new(k, conventions.q_ths_explore, seed)),
        SchedulerKind::Opt => Box::new(Opt::new(mu)),
        SchedulerKind::Random => Box::new(crate::baselines::RandomPolicy::new(k, seed)),
    })
}

/// One slot of a queue trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueRecord {
    pub t: usize,
    /// Q(t) after the slot.
    pub queue_len: u64,
    /// Server used, if any job was available.
    pub arm: Option<usize>,
    pub arrivals: u64,
    pub served: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QueueTrace {
    pub records: Vec<QueueRecord>,
}

impl QueueTrace {
    pub fn queue_lengths(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.queue_len).collect()
    }

    pub fn mean_queue_length(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.records.iter().map(|r| r.queue_len as f64).sum::<f64>() / self.records.len() as f64
        }
    }
}

/// Mutable simulator state of one queue.
#[derive(Debug, Clone)]
pub struct QueueState {
    pub queue_len: u64,
    pub t: usize,
    arrivals: Poisson<f64>,
    mu: Vec<f64>,
}

impl QueueState {
    pub fn new(lambda: f64, mu: Vec<f64>) -> Result<Self> {
        Ok(Self {
            queue_len: 0,
            t: 0,
            arrivals: Poisson::new(lambda).map_err(|e| BanditError::Domain(e.to_string()))?,
            mu,
        })
    }

    /// Advances one slot with explicit arrivals `a` and service variate `u`.
    pub fn step_with(&mut self, scheduler: &mut dyn Policy, a: u64, u: f64) -> Result<QueueRecord> {
        self.t += 1;
        let available = self.queue_len + a;
        let (arm, served) = if available > 0 {
            let arm = scheduler.select(self.t)?;
            let served = u < self.mu[arm];
            scheduler.observe(arm, if served { 1.0 } else { 0.0 })?;
            (Some(arm), served)
        } else {
            (None, false)
        };
        self.queue_len = available - u64::from(served);
        Ok(QueueRecord {
            t: self.t,
            queue_len: self.queue_len,
            arm,
            arrivals: a,
            served,
        })
    }

    /// Advances one slot drawing arrivals and the service variate.
    pub fn step(
        &mut self,
        scheduler: &mut dyn Policy,
        arrival_rng: &mut impl Rng,
        service_rng: &mut impl Rng,
    ) -> Result<QueueRecord> {
        let a = self.arrivals.sample(arrival_rng) as u64;
        let u: f64 = service_rng.random();
        self.step_with(scheduler, a, u)
    }
}

/// Seeds of the three random streams of one queue run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueSeeds {
    pub arrival: u64,
    pub service: u64,
    pub scheduler: u64,
}

/// Simulates `config.horizon` slots with the default scheduler constants.
pub fn simulate(
    config: &QueueConfig,
    kind: SchedulerKind,
    schedule: ExposureSchedule,
    seeds: QueueSeeds,
) -> Result<QueueTrace> {
    simulate_with(config, kind, schedule, &Conventions::default(), seeds)
}

/// Simulates `config.horizon` slots.
pub fn simulate_with(
    config: &QueueConfig,
    kind: SchedulerKind,
    schedule: ExposureSchedule,
    conventions: &Conventions,
    seeds: QueueSeeds,
) -> Result<QueueTrace> {
    config.validate()?;
    let mut scheduler = make_scheduler(kind, &config.mu, schedule, conventions, seeds.scheduler)?;
    let mut state = QueueState::new(config.lambda, config.mu.clone())?;
    let mut arrival_rng = ChaCha8Rng::seed_from_u64(seeds.arrival);
    let mut service_rng = ChaCha8Rng::seed_from_u64(seeds.service);
    let records = (0..config.horizon)
        .map(|_| state.step(scheduler.as_mut(), &mut arrival_rng, &mut service_rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(QueueTrace { records })
}

/// `Q(t) − Q^OPT(t)` per slot.
pub fn queue_regret(alg: &QueueTrace, opt: &QueueTrace) -> Result<Vec<f64>> {
    if alg.records.len() != opt.records.len() {
        return Err(BanditError::HorizonMismatch(alg.records.len(), opt.records.len()));
    }
    Ok(alg
        .records
        .iter()
        .zip(&opt.records)
        .map(|(a, o)| a.queue_len as f64 - o.queue_len as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MU: [f64; 5] = [0.5, 0.33, 0.33, 0.33, 0.25];

    fn config(horizon: usize) -> QueueConfig {
        QueueConfig {
            lambda: 0.35,
            mu: MU.to_vec(),
            horizon,
            n_runs: 1,
        }
    }

    fn seeds(r: u64) -> QueueSeeds {
        QueueSeeds {
            arrival: 1000 + r,
            service: 2000 + r,
            scheduler: 3000 + r,
        }
    }

    #[test]
    fn step_examples() {
        let mut opt = Opt::new(&MU);
        let mut s = QueueState::new(0.35, MU.to_vec()).unwrap();
        let r = s.step_with(&mut opt, 0, 0.0).unwrap();
        assert_eq!((r.queue_len, r.arm, r.served), (0, None, false));
        s.queue_len = 3;
        let r = s.step_with(&mut opt, 2, 0.1).unwrap();
        assert_eq!((r.queue_len, r.arm, r.served), (4, Some(0), true));
        s.queue_len = 0;
        let r = s.step_with(&mut opt, 1, 0.1).unwrap();
        assert_eq!(r.queue_len, 0);
        let r = s.step_with(&mut opt, 1, 0.9).unwrap();
        assert_eq!((r.queue_len, r.served), (1, false));
    }

    #[test]
    fn validation_lists_every_problem() {
        let bad = QueueConfig {
            lambda: 0.6,
            mu: vec![0.5, -0.2],
            horizon: 0,
            n_runs: 0,
        };
        match bad.validate() {
            Err(BanditError::Validation(v)) => assert_eq!(v.len(), 4, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn opt_uses_fastest_server() {
        let tr = simulate(&config(2000), SchedulerKind::Opt, ExposureSchedule::default(), seeds(1)).unwrap();
        assert!(tr.records.iter().all(|r| r.arm.is_none_or(|a| a == 0)));
        assert!(tr.records.iter().all(|r| r.arm.is_some() || r.queue_len == 0));
    }

    #[test]
    fn opt_queue_is_stable() {
        let mut total = 0.0;
        for r in 0..50 {
            total += simulate(&config(10_000), SchedulerKind::Opt, ExposureSchedule::default(), seeds(r))
                .unwrap()
                .mean_queue_length();
        }
        assert!(total / 50.0 < 10.0, "{}", total / 50.0);
    }

    #[test]
    fn traces_are_deterministic_and_consistent() {
        for kind in SchedulerKind::ALL {
            let a = simulate(&config(1000), kind, ExposureSchedule::default(), seeds(4)).unwrap();
            let b = simulate(&config(1000), kind, ExposureSchedule::default(), seeds(4)).unwrap();
            assert_eq!(a, b, "{}", kind.name());
            let mut q = 0u64;
            for r in &a.records {
                assert!(u64::from(r.served) <= (q + r.arrivals).min(1));
                q = q + r.arrivals - u64::from(r.served);
                assert_eq!(q, r.queue_len);
            }
        }
    }

    #[test]
    fn regret_examples() {
        let a = simulate(&config(500), SchedulerKind::Random, ExposureSchedule::default(), seeds(2)).unwrap();
        assert!(queue_regret(&a, &a).unwrap().iter().all(|&x| x == 0.0));
        let short = QueueTrace {
            records: a.records[..10].to_vec(),
        };
        assert!(matches!(queue_regret(&a, &short), Err(BanditError::HorizonMismatch(500, 10))));
    }

    #[test]
    fn opt_against_opt_is_unbiased() {
        let mut total = 0.0;
        for r in 0..50 {
            let a = simulate(&config(10_000), SchedulerKind::Opt, ExposureSchedule::default(), seeds(r)).unwrap();
            let mut other = seeds(r);
            other.service += 77_777;
            let b = simulate(&config(10_000), SchedulerKind::Opt, ExposureSchedule::default(), other).unwrap();
            total += queue_regret(&a, &b).unwrap()[9_999];
        }
        assert!((total / 50.0).abs() <= 1.0, "{}", total / 50.0);
    }

    #[test]
    fn qths_exploration_rate() {
        let p = QThs::new(5, 3.0, 0);
        assert_eq!(p.exploration_rate(1), 0.0);
        assert_eq!(p.exploration_rate(10), 1.0);
        let t = 10_000usize;
        let want = 15.0 * (t as f64).ln().powi(2) / t as f64;
        assert!((p.exploration_rate(t) - want).abs() < 1e-15);
    }

    #[test]
    fn departures_are_conserved_against_opt() {
        let a = simulate(&config(3000), SchedulerKind::Random, ExposureSchedule::default(), seeds(3)).unwrap();
        let o = simulate(&config(3000), SchedulerKind::Opt, ExposureSchedule::default(), seeds(3)).unwrap();
        let served = |tr: &QueueTrace| tr.records.iter().filter(|r| r.served).count() as i64;
        let (qa, qo) = (a.records.last().unwrap().queue_len as i64, o.records.last().unwrap().queue_len as i64);
        // same arrivals: departures differ exactly by the final queue gap
        assert_eq!(served(&a) + qa, served(&o) + qo);
    }
}
