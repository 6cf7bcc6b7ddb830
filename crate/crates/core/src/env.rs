//! Stochastic bandit environments and regret accounting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::belman::StepRecord;
use crate::error::{BanditError, Result};
use crate::expfam::RewardFamily;
use crate::seed::mix;

/// How exponential rewards are confined to `[0, 1]`, if at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bounding {
    /// Raw exponential rewards on `[0, ∞)`.
    #[default]
    None,
    /// Redraw until the reward is at most 1.
    Resample,
    /// Replace rewards above 1 by 1.
    Truncate,
}

/// True arm parameters: Bernoulli means or exponential rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    pub family: RewardFamily,
    pub theta: Vec<f64>,
    pub horizon: usize,
    #[serde(default)]
    pub bounding: Bounding,
}

impl BanditInstance {
    pub fn new(family: RewardFamily, theta: Vec<f64>, horizon: usize) -> Result<Self> {
        Self::with_bounding(family, theta, horizon, Bounding::None)
    }

    pub fn with_bounding(family: RewardFamily, theta: Vec<f64>, horizon: usize, bounding: Bounding) -> Result<Self> {
        let inst = Self {
            family,
            theta,
            horizon,
            bounding,
        };
        let problems = inst.problems();
        if problems.is_empty() {
            Ok(inst)
        } else {
            Err(BanditError::Validation(problems))
        }
    }

    /// Every invariant violation, for validation reports.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.theta.len() < 2 {
            out.push(format!("need at least 2 arms, got {}", self.theta.len()));
        }
        for (i, &th) in self.theta.iter().enumerate() {
            let ok = match self.family {
                RewardFamily::Bernoulli => th > 0.0 && th < 1.0,
                RewardFamily::Exponential => th > 0.0 && th.is_finite(),
            };
            if !ok {
                out.push(match self.family {
                    RewardFamily::Bernoulli => format!("arm {i}: Bernoulli mean {th} not in (0, 1)"),
                    RewardFamily::Exponential => format!("arm {i}: exponential rate {th} not positive"),
                });
            }
        }
        if self.family == RewardFamily::Bernoulli && self.bounding != Bounding::None {
            out.push("bounding applies to exponential rewards only".into());
        }
        out
    }

    pub fn k(&self) -> usize {
        self.theta.len()
    }

    /// True expected reward of each arm, under the configured bounding.
    pub fn means(&self) -> Vec<f64> {
        self.theta.iter().map(|&th| self.arm_mean(th)).collect()
    }

    fn arm_mean(&self, th: f64) -> f64 {
        match (self.family, self.bounding) {
            (RewardFamily::Bernoulli, _) => th,
            (RewardFamily::Exponential, Bounding::None) => 1.0 / th,
            // E[X | X ≤ 1]
            (RewardFamily::Exponential, Bounding::Resample) => 1.0 / th - (-th).exp() / (-(-th).exp_m1()),
            // E[min(X, 1)]
            (RewardFamily::Exponential, Bounding::Truncate) => -(-th).exp_m1() / th,
        }
    }

    /// Largest true mean.
    pub fn best_mean(&self) -> f64 {
        self.means().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `μ* − μ_a` per arm.
    pub fn gaps(&self) -> Vec<f64> {
        let best = self.best_mean();
        self.means().into_iter().map(|m| best - m).collect()
    }

    /// Draws one reward of `arm`.
    pub fn sample_reward(&self, arm: usize, rng: &mut impl Rng) -> f64 {
        let th = self.theta[arm];
        match self.family {
            RewardFamily::Bernoulli => {
                if rng.random::<f64>() < th {
                    1.0
                } else {
                    0.0
                }
            }
            RewardFamily::Exponential => {
                let d = Exp::new(th).expect("validated positive rate");
                match self.bounding {
                    Bounding::None => d.sample(rng),
                    Bounding::Truncate => d.sample(rng).min(1.0),
                    Bounding::Resample => loop {
                        let x = d.sample(rng);
                        if x <= 1.0 {
                            break x;
                        }
                    },
                }
            }
        }
    }

    /// Whether rewards are confined to `[0, 1]`.
    pub fn unit_bounded(&self) -> bool {
        self.family == RewardFamily::Bernoulli || self.bounding != Bounding::None
    }
}

/// Reward source with one independent stream per arm: the n-th pull of arm
/// `a` always receives the n-th draw of stream `a`, whatever the algorithm,
/// which gives common random numbers across algorithms.
#[derive(Debug, Clone)]
pub struct ArmStreams {
    instance: BanditInstance,
    streams: Vec<ChaCha8Rng>,
}

impl ArmStreams {
    pub fn new(instance: BanditInstance, seed: u64) -> Self {
        let streams = (0..instance.k())
            .map(|a| ChaCha8Rng::seed_from_u64(mix(seed, a as u64, 0)))
            .collect();
        Self { instance, streams }
    }

    pub fn pull(&mut self, arm: usize) -> f64 {
        self.instance.sample_reward(arm, &mut self.streams[arm])
    }

    pub fn instance(&self) -> &BanditInstance {
        &self.instance
    }
}

/// Per-step decisions of one run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<StepRecord<f64>>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn arms(&self) -> impl Iterator<Item = usize> + '_ {
        self.records.iter().map(|r| r.arm)
    }
}

impl From<Vec<StepRecord<f64>>> for RunTrace {
    fn from(records: Vec<StepRecord<f64>>) -> Self {
        Self { records }
    }
}

/// Pseudo-regret `R_t = Σ_a (μ* − μ_a) · n_a(t)` after every step.
pub fn cumulative_regret(trace: &RunTrace, instance: &BanditInstance) -> Vec<f64> {
    let gaps = instance.gaps();
    let mut counts = vec![0u64; gaps.len()];
    trace
        .arms()
        .map(|a| {
            counts[a] += 1;
            gaps.iter().zip(&counts).map(|(g, &n)| g * n as f64).sum()
        })
        .collect()
}

/// Number of pulls of arms whose mean is below μ* after every step.
pub fn suboptimal_draws(trace: &RunTrace, instance: &BanditInstance) -> Vec<u64> {
    let gaps = instance.gaps();
    let mut n = 0u64;
    trace
        .arms()
        .map(|a| {
            if gaps[a] > 0.0 {
                n += 1;
            }
            n
        })
        .collect()
}
