//! Conjugate exponential-family beliefs: Beta beliefs over Bernoulli means
//! and Gamma beliefs over exponential rates.
//!
//! A belief is a point on a dually flat manifold. Its natural parameters are
//! `(α − 1, β − 1)` for Beta and `(α − 1, −β)` for Gamma; the dual
//! expectation parameters are the means of the sufficient statistics
//! `(ln θ, ln(1 − θ))` and `(ln θ, θ)` respectively.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::scalar::Scalar;
use crate::special::{digamma_unchecked, ln_beta_unchecked, ln_gamma_unchecked, trigamma_unchecked};

/// Reward model of every arm of a bandit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardFamily {
    /// Rewards in `{0, 1}`; Beta beliefs.
    Bernoulli,
    /// Rewards in `[0, ∞)` with rate θ; Gamma beliefs.
    Exponential,
}

impl RewardFamily {
    pub fn name(self) -> &'static str {
        match self {
            RewardFamily::Bernoulli => "bernoulli",
            RewardFamily::Exponential => "exponential",
        }
    }

    pub fn in_support<F: Scalar>(self, reward: F) -> bool {
        match self {
            RewardFamily::Bernoulli => reward == F::zero() || reward == F::one(),
            RewardFamily::Exponential => reward >= F::zero() && reward.is_finite(),
        }
    }

    /// Uniform Beta(1, 1) or the proper Gamma(1, 1).
    pub fn default_prior<F: Scalar>(self) -> BeliefState<F> {
        BeliefState {
            family: self,
            alpha: F::one(),
            beta: F::one(),
        }
    }
}

impl fmt::Display for RewardFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Conjugate posterior of one arm.
///
/// Beta: `alpha` successes and `beta` failures (pseudo-counts).
/// Gamma: shape `alpha` (play count) and rate `beta` (reward sum).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefState<F> {
    family: RewardFamily,
    alpha: F,
    beta: F,
}

/// Expectation parameters, the dual coordinates of a belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationParams<F>(pub [F; 2]);

/// One reward drawn from one arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation<F> {
    pub arm: usize,
    pub reward: F,
}

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-12;

impl<F: Scalar> BeliefState<F> {
    pub fn new(family: RewardFamily, alpha: F, beta: F) -> Result<Self> {
        if !(alpha > F::zero() && alpha.is_finite() && beta > F::zero() && beta.is_finite()) {
            return Err(BanditError::Domain(format!(
                "belief parameters must be positive and finite, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { family, alpha, beta })
    }

    /// Beta(alpha, beta).
    pub fn new_beta(alpha: F, beta: F) -> Result<Self> {
        Self::new(RewardFamily::Bernoulli, alpha, beta)
    }

    /// Gamma(shape, rate).
    pub fn new_gamma(shape: F, rate: F) -> Result<Self> {
        Self::new(RewardFamily::Exponential, shape, rate)
    }

    pub fn family(&self) -> RewardFamily {
        self.family
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn beta(&self) -> F {
        self.beta
    }

    /// `α + β`; the pseudo-count of a Beta belief.
    pub fn count(&self) -> F {
        self.alpha + self.beta
    }

    /// Conjugate Bayesian update with one reward. `self` is untouched.
    pub fn update(&self, reward: F) -> Result<Self> {
        if !self.family.in_support(reward) {
            return Err(BanditError::RewardOutOfSupport {
                reward: reward.as_f64(),
                family: self.family.name(),
            });
        }
        let one = F::one();
        let next = match self.family {
            RewardFamily::Bernoulli if reward == one => (self.alpha + one, self.beta),
            RewardFamily::Bernoulli => (self.alpha, self.beta + one),
            RewardFamily::Exponential => (self.alpha + one, self.beta + reward),
        };
        Ok(Self {
            family: self.family,
            alpha: next.0,
            beta: next.1,
        })
    }

    /// Posterior-predictive mean reward `E[X]`.
    ///
    /// Beta: `α / (α + β)`. Gamma: `E[1/θ] = β / (α − 1)`, defined only for
    /// `α > 1`.
    pub fn mean_reward(&self) -> Result<F> {
        match self.family {
            RewardFamily::Bernoulli => Ok(self.alpha / self.count()),
            RewardFamily::Exponential => {
                if self.alpha <= F::one() {
                    Err(BanditError::UndefinedMean {
                        alpha: self.alpha.as_f64(),
                    })
                } else {
                    Ok(self.beta / (self.alpha - F::one()))
                }
            }
        }
    }

    /// Mean of the parameter θ itself (success probability or rate).
    pub fn mean_parameter(&self) -> F {
        match self.family {
            RewardFamily::Bernoulli => self.alpha / self.count(),
            RewardFamily::Exponential => self.alpha / self.beta,
        }
    }

    /// Log-partition function of the belief in its natural parameters.
    pub fn log_partition(&self) -> F {
        match self.family {
            RewardFamily::Bernoulli => ln_beta_unchecked(self.alpha, self.beta),
            RewardFamily::Exponential => ln_gamma_unchecked(self.alpha) - self.alpha * self.beta.ln(),
        }
    }

    /// Log density of the belief at θ.
    pub fn ln_density(&self, theta: F) -> F {
        let one = F::one();
        match self.family {
            RewardFamily::Bernoulli => {
                (self.alpha - one) * theta.ln() + (self.beta - one) * (one - theta).ln()
                    - self.log_partition()
            }
            RewardFamily::Exponential => {
                (self.alpha - one) * theta.ln() - self.beta * theta - self.log_partition()
            }
        }
    }

    /// `∇ Ψ(ξ)`: `(ψ(α) − ψ(α+β), ψ(β) − ψ(α+β))` or `(ψ(α) − ln β, α/β)`.
    pub fn expectation(&self) -> ExpectationParams<F> {
        match self.family {
            RewardFamily::Bernoulli => {
                let psi_n = digamma_unchecked(self.count());
                ExpectationParams([
                    digamma_unchecked(self.alpha) - psi_n,
                    digamma_unchecked(self.beta) - psi_n,
                ])
            }
            RewardFamily::Exponential => ExpectationParams([
                digamma_unchecked(self.alpha) - self.beta.ln(),
                self.alpha / self.beta,
            ]),
        }
    }

    /// Closed-form `KL(self ‖ other)` between beliefs of the same family.
    pub fn kl(&self, other: &Self) -> Result<F> {
        if self.family != other.family {
            return Err(BanditError::FamilyMismatch(
                self.family.name(),
                other.family.name(),
            ));
        }
        let (ap, bp, aq, bq) = (self.alpha, self.beta, other.alpha, other.beta);
        let value = match self.family {
            RewardFamily::Bernoulli => {
                ln_beta_unchecked(aq, bq) - ln_beta_unchecked(ap, bp)
                    + (ap - aq) * digamma_unchecked(ap)
                    + (bp - bq) * digamma_unchecked(bp)
                    - ((ap - aq) + (bp - bq)) * digamma_unchecked(ap + bp)
            }
            RewardFamily::Exponential => {
                (ap - aq) * digamma_unchecked(ap) - ln_gamma_unchecked(ap)
                    + ln_gamma_unchecked(aq)
                    + aq * (bp.ln() - bq.ln())
                    + ap * (bq - bp) / bp
            }
        };
        Ok(value.max(F::zero()))
    }

    /// Inverse of [`BeliefState::expectation`]: the unique belief whose
    /// expectation parameters equal `mu`.
    ///
    /// Beta is solved by damped 2-D Newton in `(ln α, ln β)` with the
    /// trigamma Jacobian. For Gamma the second equation gives `β = α / μ₂`,
    /// which reduces the system to 1-D Newton on `ψ(α) − ln α`.
    pub fn from_expectation(mu: ExpectationParams<F>, family: RewardFamily) -> Result<Self> {
        let [m1, m2] = mu.0;
        if !(m1.is_finite() && m2.is_finite()) {
            return Err(BanditError::NoSolution(m1.as_f64(), m2.as_f64()));
        }
        match family {
            RewardFamily::Bernoulli => invert_beta(m1, m2),
            RewardFamily::Exponential => invert_gamma(m1, m2),
        }
    }
}

impl<F: Scalar> fmt::Display for BeliefState<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            RewardFamily::Bernoulli => write!(f, "Beta({}, {})", self.alpha, self.beta),
            RewardFamily::Exponential => write!(f, "Gamma({}, {})", self.alpha, self.beta),
        }
    }
}

fn invert_beta<F: Scalar>(m1: F, m2: F) -> Result<BeliefState<F>> {
    let zero = F::zero();
    let one = F::one();
    let half = F::lit(0.5);
    let s = m1.exp() + m2.exp();
    if !(m1 < zero && m2 < zero && s < one) {
        return Err(BanditError::NoSolution(m1.as_f64(), m2.as_f64()));
    }
    // e^{ψ(x)} ≈ x − 1/2 gives a starting point
    let n0 = (one - half * s) / (one - s);
    let mut u = (half + m1.exp() * (n0 - half)).ln();
    let mut v = (half + m2.exp() * (n0 - half)).ln();
    let tol = F::tol(NEWTON_TOL);

    let residual = |u: F, v: F| -> [F; 2] {
        let (a, b) = (u.exp(), v.exp());
        let psi_n = digamma_unchecked(a + b);
        [
            digamma_unchecked(a) - psi_n - m1,
            digamma_unchecked(b) - psi_n - m2,
        ]
    };
    let norm = |r: [F; 2]| r[0].abs().max(r[1].abs());

    let mut r = residual(u, v);
    for _ in 0..NEWTON_MAX_ITER {
        if norm(r) <= tol {
            return BeliefState::new_beta(u.exp(), v.exp());
        }
        let (a, b) = (u.exp(), v.exp());
        let tn = trigamma_unchecked(a + b);
        let j11 = (trigamma_unchecked(a) - tn) * a;
        let j12 = -tn * b;
        let j21 = -tn * a;
        let j22 = (trigamma_unchecked(b) - tn) * b;
        let det = j11 * j22 - j12 * j21;
        let du = -(j22 * r[0] - j12 * r[1]) / det;
        let dv = -(-j21 * r[0] + j11 * r[1]) / det;
        let mut step = one;
        let mut accepted = false;
        for _ in 0..60 {
            // cap log-steps so exp() stays finite
            let su = (step * du).max(F::lit(-5.0)).min(F::lit(5.0));
            let sv = (step * dv).max(F::lit(-5.0)).min(F::lit(5.0));
            let trial = residual(u + su, v + sv);
            if trial[0].is_finite() && trial[1].is_finite() && norm(trial) < norm(r) {
                u = u + su;
                v = v + sv;
                r = trial;
                accepted = true;
                break;
            }
            step = step * half;
        }
        if !accepted {
            break;
        }
    }
    if norm(r) <= tol * F::lit(1e3) {
        // stalled at rounding level
        return BeliefState::new_beta(u.exp(), v.exp());
    }
    Err(BanditError::Convergence {
        iterations: NEWTON_MAX_ITER,
        residual: norm(r).as_f64(),
    })
}

fn invert_gamma<F: Scalar>(m1: F, m2: F) -> Result<BeliefState<F>> {
    let zero = F::zero();
    let one = F::one();
    let half = F::lit(0.5);
    if !(m2 > zero) {
        return Err(BanditError::NoSolution(m1.as_f64(), m2.as_f64()));
    }
    // ψ(α) − ln α = d < 0 has a unique solution for every d < 0
    let d = m1 - m2.ln();
    if !(d < zero) {
        return Err(BanditError::NoSolution(m1.as_f64(), m2.as_f64()));
    }
    let g = |u: F| digamma_unchecked(u.exp()) - u - d;
    let mut u = (-half / d).ln();
    let mut r = g(u);
    let tol = F::tol(NEWTON_TOL);
    for _ in 0..NEWTON_MAX_ITER {
        if r.abs() <= tol {
            let alpha = u.exp();
            return BeliefState::new_gamma(alpha, alpha / m2);
        }
        let a = u.exp();
        let slope = trigamma_unchecked(a) * a - one;
        let du = -r / slope;
        let mut step = one;
        let mut accepted = false;
        for _ in 0..60 {
            let su = (step * du).max(F::lit(-5.0)).min(F::lit(5.0));
            let trial = g(u + su);
            if trial.is_finite() && trial.abs() < r.abs() {
                u = u + su;
                r = trial;
                accepted = true;
                break;
            }
            step = step * half;
        }
        if !accepted {
            break;
        }
    }
    if r.abs() <= tol * F::lit(1e3) {
        let alpha = u.exp();
        return BeliefState::new_gamma(alpha, alpha / m2);
    }
    Err(BanditError::Convergence {
        iterations: NEWTON_MAX_ITER,
        residual: r.abs().as_f64(),
    })
}
