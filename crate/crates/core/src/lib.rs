//! Information-geometric stochastic bandits.
//!
//! The crate implements the BelMan alternating-projection bandit algorithm
//! over conjugate exponential-family beliefs (Beta–Bernoulli and
//! Gamma–exponential), the usual reference algorithms, a queueing-bandit
//! simulator and a seeded experiment harness.
//!
//! The numerical core ([`expfam`], [`manifold`], [`belman`]) is generic over
//! the floating-point type through [`Scalar`]; the aliases below fix it to
//! `f64` (or `f32` where noted). The simulators and the harness work in
//! `f64`.
//!
//! ```
//! use belman::{BelMan, ExposureSchedule, RewardFamily};
//!
//! let mut agent = BelMan::new(RewardFamily::Bernoulli, 2, ExposureSchedule::default(), 7).unwrap();
//! let trace = agent.run(50, |arm| if arm == 1 { 1.0 } else { 0.0 }).unwrap();
//! assert_eq!(trace.len(), 50);
//! ```

pub mod baselines;
pub mod belman;
pub mod env;
pub mod error;
pub mod expfam;
pub mod harness;
pub mod manifold;
pub mod oracle;
pub mod quadrature;
pub mod queueing;
pub mod scalar;
pub mod seed;
pub mod special;

pub use baselines::{ArmStats, Policy};
pub use belman::{BelManState, StepRecord};
pub use env::{BanditInstance, Bounding, RunTrace};
pub use error::{BanditError, Result};
pub use expfam::{BeliefState, ExpectationParams, Observation, RewardFamily};
pub use harness::{ExperimentConfig, ExperimentResult, Mode};
pub use manifold::{BeliefReward, ExposureSchedule, PseudobeliefFocal};
pub use queueing::{QueueConfig, QueueTrace, SchedulerKind};
pub use scalar::Scalar;

/// Double-precision belief.
pub type Belief = BeliefState<f64>;
/// Single-precision belief.
pub type Belief32 = BeliefState<f32>;
/// Double-precision belief-reward distribution.
pub type Joint = BeliefReward<f64>;
/// Double-precision pseudobelief-focal-reward distribution.
pub type Focal = PseudobeliefFocal<f64>;
/// Double-precision BelMan agent.
pub type BelMan = BelManState<f64>;
/// Single-precision BelMan agent.
pub type BelMan32 = BelManState<f32>;
