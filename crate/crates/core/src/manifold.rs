//! Belief-reward distributions, the focal exposure schedule and the two KL
//! projections that drive arm selection and pseudobelief updates.
//!
//! For conjugate pairs the joint `P(X, θ) = b(θ) f_θ(X)` factorizes, so
//! `KL(P^a ‖ P)` between belief-rewards reduces to `KL(b^a ‖ b)`. The
//! pseudobelief-focal-reward is `Q̄ = P̄ · exp(X/τ) / Z̄`, hence
//!
//! ```text
//! KL(P^a ‖ Q̄) = KL(b^a ‖ b̄) − E_{P^a}[X] / τ + ln Z̄(b̄, τ)
//! ```
//!
//! The rI-projection minimizes `Σ_a KL(P^a ‖ Q̄)` over `b̄`, i.e.
//! `K · [Ψ(ξ̄) − ⟨ξ̄, μ̂⟩ + ln Z̄(b̄)]` up to constants, where `μ̂` is the mean
//! of the arms' expectation parameters. The I-projection picks the arm with
//! the smallest `KL(b^a ‖ b̄) − E[X]/τ`.

use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::expfam::{BeliefState, ExpectationParams, RewardFamily};
use crate::quadrature::gauss_kronrod_vec;
use crate::scalar::Scalar;
use crate::special::{digamma_unchecked, gamma_quantile, regularized_gamma_p, trigamma_unchecked};

/// Denominators of the log schedule at or below this value map to `τ = +∞`.
pub const SCHEDULE_FLOOR: f64 = 1e-12;

/// Largest gamma belief mass allowed below the tilt threshold `2/τ`.
pub const NEGLIGIBLE_MASS: f64 = 0.01;

/// Quantile of the gamma pseudobelief used to clamp the exposure.
const CLAMP_QUANTILE: f64 = 0.01;

const RI_MAX_ITER: usize = 200;
const RI_GRAD_TOL: f64 = 1e-10;
const FALLBACK_GRAD_TOL: f64 = 1e-6;

/// Joint distribution `b(θ) f_θ(X)` of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefReward<F> {
    pub belief: BeliefState<F>,
}

impl<F: Scalar> BeliefReward<F> {
    pub fn new(belief: BeliefState<F>) -> Self {
        Self { belief }
    }

    pub fn family(&self) -> RewardFamily {
        self.belief.family()
    }
}

impl<F> From<BeliefState<F>> for BeliefReward<F> {
    fn from(belief: BeliefState<F>) -> Self {
        Self { belief }
    }
}

/// Exposure τ(t) of the focal distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExposureSchedule {
    /// τ = +∞ at every step: pure exploration.
    Infinite,
    /// τ(t) = 1 / (ln t + C ln ln t).
    LogSchedule { c: f64 },
    /// τ = +∞ for `t <= explore_steps`, then the log schedule.
    TwoPhase { explore_steps: usize, c: f64 },
}

impl Default for ExposureSchedule {
    fn default() -> Self {
        ExposureSchedule::LogSchedule { c: 15.0 }
    }
}

impl ExposureSchedule {
    /// Evaluates τ(t) for `t >= 1`. Non-positive denominators of the log
    /// schedule (small `t`) give `+∞`.
    pub fn exposure<F: Scalar>(&self, t: usize) -> F {
        match *self {
            ExposureSchedule::Infinite => F::infinity(),
            ExposureSchedule::LogSchedule { c } => log_schedule(c, t),
            ExposureSchedule::TwoPhase { explore_steps, c } => {
                if t <= explore_steps {
                    F::infinity()
                } else {
                    log_schedule(c, t)
                }
            }
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        match *self {
            ExposureSchedule::Infinite => Ok(()),
            ExposureSchedule::LogSchedule { c } | ExposureSchedule::TwoPhase { c, .. } => {
                if c > 0.0 && c.is_finite() {
                    Ok(())
                } else {
                    Err(format!("exposure constant C must be positive, got {c}"))
                }
            }
        }
    }
}

fn log_schedule<F: Scalar>(c: f64, t: usize) -> F {
    let lt = (t.max(1) as f64).ln();
    let denom = lt + c * lt.ln();
    if denom > SCHEDULE_FLOOR {
        F::lit(1.0 / denom)
    } else {
        F::infinity()
    }
}

/// The pseudobelief-focal-reward distribution Q̄.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudobeliefFocal<F> {
    /// Pseudobelief (ᾱ, β̄).
    pub pseudo: BeliefState<F>,
    /// Requested exposure; weights the reward term of arm selection.
    pub tau: F,
    /// Exposure of the focal tilt inside the rI-projection; smaller than
    /// `tau` when clamped for gamma beliefs, see `tau_clamped`.
    pub focal_tau: F,
    /// ln Z̄ at (pseudo, focal_tau); zero when `focal_tau` is infinite.
    pub log_z: F,
    /// Set when the requested exposure was clamped to keep Z̄ finite.
    pub tau_clamped: bool,
}

impl<F: Scalar> PseudobeliefFocal<F> {
    /// Q̄ with no focal tilt.
    pub fn untilted(pseudo: BeliefState<F>) -> Self {
        Self {
            pseudo,
            tau: F::infinity(),
            focal_tau: F::infinity(),
            log_z: F::zero(),
            tau_clamped: false,
        }
    }

    /// `1/τ` of the requested exposure, zero when infinite.
    pub fn inverse_exposure(&self) -> F {
        inverse(self.tau)
    }
}

fn inverse<F: Scalar>(tau: F) -> F {
    if tau.is_infinite() {
        F::zero()
    } else {
        F::one() / tau
    }
}

/// Value, gradient and Hessian of `ln Z̄` in `(ᾱ, β̄)`.
#[derive(Debug, Clone, Copy)]
struct FocalTerm<F> {
    value: F,
    grad: [F; 2],
    hess: [[F; 3]; 1],
}

impl<F: Scalar> FocalTerm<F> {
    fn zero() -> Self {
        Self {
            value: F::zero(),
            grad: [F::zero(); 2],
            hess: [[F::zero(); 3]],
        }
    }

    fn h(&self) -> (F, F, F) {
        (self.hess[0][0], self.hess[0][1], self.hess[0][2])
    }
}

/// `ln E_b[exp(X/τ)]` for Bernoulli: `ln((ᾱ e^{1/τ} + β̄) / N̄)`.
fn bernoulli_focal<F: Scalar>(alpha: F, beta: F, inv_tau: F) -> FocalTerm<F> {
    if inv_tau == F::zero() {
        return FocalTerm::zero();
    }
    let e = inv_tau.exp();
    let s = alpha * e + beta;
    let n = alpha + beta;
    let value = s.ln() - n.ln();
    let grad = [e / s - F::one() / n, F::one() / s - F::one() / n];
    let s2 = s * s;
    let n2 = n * n;
    let hess = [[
        -e * e / s2 + F::one() / n2,
        -e / s2 + F::one() / n2,
        -F::one() / s2 + F::one() / n2,
    ]];
    FocalTerm { value, grad, hess }
}

/// Tilted moments `∫_{2c}^∞ b(θ) · c/(θ − c) · m(θ) dθ` for the six score
/// monomials `m ∈ {1, s₁, s₂, s₁², s₁s₂, s₂²}`, where `s = ∇ ln b` in (α, β).
fn gamma_tilt_moments<F: Scalar>(alpha: F, beta: F, c: F) -> Result<[F; 6]> {
    let one = F::one();
    let two = F::lit(2.0);
    let lower = two * c;
    let ln_norm = crate::special::ln_gamma_unchecked(alpha) - alpha * beta.ln();
    let psi = digamma_unchecked(alpha);
    let ln_beta = beta.ln();
    let ratio = alpha / beta;
    let integrand = |theta: F| -> [F; 6] {
        if theta <= lower {
            return [F::zero(); 6];
        }
        let ln_b = (alpha - one) * theta.ln() - beta * theta - ln_norm;
        let w = ln_b.exp() * c / (theta - c);
        let s1 = ln_beta - psi + theta.ln();
        let s2 = ratio - theta;
        [w, w * s1, w * s2, w * s1 * s1, w * s1 * s2, w * s2 * s2]
    };
    // split around the bulk of the belief so narrow posteriors are resolved
    let mean = alpha / beta;
    let sd = alpha.sqrt() / beta;
    let eight = F::lit(8.0);
    let lo_bulk = (mean - eight * sd).max(lower);
    let hi_bulk = (mean + eight * sd).max(lower);
    let abs_tol = F::tol(1e-15);
    let rel_tol = F::tol(1e-11);
    let mut total = [F::zero(); 6];
    let mut add = |part: [F; 6]| {
        for i in 0..6 {
            total[i] = total[i] + part[i];
        }
    };
    if lo_bulk > lower {
        add(gauss_kronrod_vec(integrand, lower, lo_bulk, abs_tol, rel_tol, 500)?);
    }
    if hi_bulk > lo_bulk {
        add(gauss_kronrod_vec(integrand, lo_bulk, hi_bulk, abs_tol, rel_tol, 500)?);
    }
    // tail: θ = hi + sd · s/(1 − s)
    let scale = sd.max(F::epsilon());
    add(gauss_kronrod_vec(
        |s: F| {
            let sc = one - s;
            if sc <= F::zero() {
                return [F::zero(); 6];
            }
            let jac = scale / (sc * sc);
            let mut v = integrand(hi_bulk + scale * s / sc);
            for x in v.iter_mut() {
                *x = *x * jac;
            }
            v
        },
        F::zero(),
        one,
        abs_tol,
        rel_tol,
        500,
    )?);
    Ok(total)
}

/// `ln Z̄` for Gamma beliefs with the tilt applied where `θ > 2c`:
/// `Z̄ = 1 + ∫_{2c}^∞ b(θ) c/(θ − c) dθ`.
fn gamma_focal<F: Scalar>(alpha: F, beta: F, c: F) -> Result<FocalTerm<F>> {
    if c == F::zero() {
        return Ok(FocalTerm::zero());
    }
    let [i0, i1, i2, i11, i12, i22] = gamma_tilt_moments(alpha, beta, c)?;
    let z = F::one() + i0;
    let tg = trigamma_unchecked(alpha);
    let hz = [
        i11 - tg * i0,
        i12 + i0 / beta,
        i22 - alpha / (beta * beta) * i0,
    ];
    let grad = [i1 / z, i2 / z];
    let hess = [[
        hz[0] / z - grad[0] * grad[0],
        hz[1] / z - grad[0] * grad[1],
        hz[2] / z - grad[1] * grad[1],
    ]];
    Ok(FocalTerm {
        value: z.ln(),
        grad,
        hess,
    })
}

fn gamma_mass_below<F: Scalar>(alpha: F, beta: F, threshold: F) -> Result<F> {
    regularized_gamma_p(alpha, beta * threshold)
}

/// `ln Z̄` of the focal tilt `exp(X/τ)` applied to the belief-reward of `pb`.
///
/// Bernoulli uses the closed form. For Gamma beliefs the reward integral
/// `∫ θ e^{−(θ − 1/τ)x} dx` only converges for `θ > 1/τ`; the tilt is applied
/// where `θ > 2/τ` and the remaining mass, which must stay below
/// [`NEGLIGIBLE_MASS`], enters untilted.
pub fn log_focal_normalizer<F: Scalar>(pb: &BeliefState<F>, tau: F) -> Result<F> {
    if !(tau > F::zero()) {
        return Err(BanditError::Domain(format!("exposure must be positive, got {tau}")));
    }
    let inv_tau = inverse(tau);
    match pb.family() {
        RewardFamily::Bernoulli => Ok(bernoulli_focal(pb.alpha(), pb.beta(), inv_tau).value),
        RewardFamily::Exponential => {
            if inv_tau == F::zero() {
                return Ok(F::zero());
            }
            let threshold = F::lit(2.0) * inv_tau;
            let mass = gamma_mass_below(pb.alpha(), pb.beta(), threshold)?;
            if mass > F::lit(NEGLIGIBLE_MASS) * (F::one() + F::tol(1e-9)) {
                return Err(BanditError::DivergentNormalizer {
                    mass: mass.as_f64(),
                    threshold: threshold.as_f64(),
                });
            }
            Ok(gamma_focal(pb.alpha(), pb.beta(), inv_tau)?.value)
        }
    }
}

fn common_family<F: Scalar>(arms: &[BeliefReward<F>]) -> Result<RewardFamily> {
    let first = arms.first().ok_or(BanditError::Empty("arm list"))?.family();
    for arm in arms {
        if arm.family() != first {
            return Err(BanditError::FamilyMismatch(first.name(), arm.family().name()));
        }
    }
    Ok(first)
}

fn mean_expectation<F: Scalar>(arms: &[BeliefReward<F>]) -> ExpectationParams<F> {
    let k = F::lit(arms.len() as f64);
    let mut acc = [F::zero(); 2];
    for arm in arms {
        let mu = arm.belief.expectation().0;
        acc[0] = acc[0] + mu[0];
        acc[1] = acc[1] + mu[1];
    }
    ExpectationParams([acc[0] / k, acc[1] / k])
}

/// KL barycentre of the arms' belief-rewards: the belief whose expectation
/// parameters are the arithmetic mean of the arms' expectation parameters.
pub fn pseudobelief_barycentre<F: Scalar>(arms: &[BeliefReward<F>]) -> Result<BeliefState<F>> {
    let family = common_family(arms)?;
    if arms.len() == 1 {
        return Ok(arms[0].belief);
    }
    let mu = mean_expectation(arms);
    BeliefState::from_expectation(mu, family)
}

/// Per-arm objective `Ψ(ξ̄) − ⟨ξ̄, μ̂⟩ + ln Z̄` with derivatives in (ᾱ, β̄).
struct RiObjective<F> {
    family: RewardFamily,
    mu: [F; 2],
    inv_tau: F,
}

struct Eval<F> {
    value: F,
    grad: [F; 2],
    hess: (F, F, F),
}

impl<F: Scalar> RiObjective<F> {
    fn focal(&self, a: F, b: F) -> Result<FocalTerm<F>> {
        match self.family {
            RewardFamily::Bernoulli => Ok(bernoulli_focal(a, b, self.inv_tau)),
            RewardFamily::Exponential => gamma_focal(a, b, self.inv_tau),
        }
    }

    fn value(&self, a: F, b: F) -> Result<F> {
        let one = F::one();
        let base = match self.family {
            RewardFamily::Bernoulli => {
                crate::special::ln_beta_unchecked(a, b) - (a - one) * self.mu[0] - (b - one) * self.mu[1]
            }
            RewardFamily::Exponential => {
                crate::special::ln_gamma_unchecked(a) - a * b.ln() - (a - one) * self.mu[0]
                    + b * self.mu[1]
            }
        };
        Ok(base + self.focal(a, b)?.value)
    }

    fn eval(&self, a: F, b: F) -> Result<Eval<F>> {
        let focal = self.focal(a, b)?;
        let one = F::one();
        let (value, grad, hess) = match self.family {
            RewardFamily::Bernoulli => {
                let n = a + b;
                let psi_n = digamma_unchecked(n);
                let tn = trigamma_unchecked(n);
                (
                    crate::special::ln_beta_unchecked(a, b) - (a - one) * self.mu[0]
                        - (b - one) * self.mu[1],
                    [
                        digamma_unchecked(a) - psi_n - self.mu[0],
                        digamma_unchecked(b) - psi_n - self.mu[1],
                    ],
                    (trigamma_unchecked(a) - tn, -tn, trigamma_unchecked(b) - tn),
                )
            }
            RewardFamily::Exponential => (
                crate::special::ln_gamma_unchecked(a) - a * b.ln() - (a - one) * self.mu[0]
                    + b * self.mu[1],
                [digamma_unchecked(a) - b.ln() - self.mu[0], self.mu[1] - a / b],
                (trigamma_unchecked(a), -one / b, a / (b * b)),
            ),
        };
        let (f11, f12, f22) = focal.h();
        Ok(Eval {
            value: value + focal.value,
            grad: [grad[0] + focal.grad[0], grad[1] + focal.grad[1]],
            hess: (hess.0 + f11, hess.1 + f12, hess.2 + f22),
        })
    }

    /// Gradient and Hessian in log coordinates `(ln ᾱ, ln β̄)`.
    fn eval_log(&self, u: F, v: F) -> Result<(F, [F; 2], (F, F, F))> {
        let (a, b) = (u.exp(), v.exp());
        let e = self.eval(a, b)?;
        let g = [a * e.grad[0], b * e.grad[1]];
        let h = (
            a * a * e.hess.0 + g[0],
            a * b * e.hess.1,
            b * b * e.hess.2 + g[1],
        );
        Ok((e.value, g, h))
    }

    fn value_log(&self, u: F, v: F) -> Result<F> {
        self.value(u.exp(), v.exp())
    }
}

fn grad_norm<F: Scalar>(g: [F; 2]) -> F {
    g[0].abs().max(g[1].abs())
}

/// Damped Newton with Levenberg regularization in log coordinates.
fn newton_minimize<F: Scalar>(obj: &RiObjective<F>, start: (F, F)) -> Result<(F, F)> {
    let (mut u, mut v) = start;
    let tol = F::tol(RI_GRAD_TOL);
    let half = F::lit(0.5);
    let max_step = F::lit(3.0);
    for _ in 0..RI_MAX_ITER {
        let (value, g, h) = obj.eval_log(u, v)?;
        if !value.is_finite() {
            break;
        }
        log::trace!("newton at ({}, {}): value {} gradient {:?}", u.exp(), v.exp(), value, g);
        if grad_norm(g) <= tol {
            return Ok((u.exp(), v.exp()));
        }
        // regularize until positive definite
        let mut lambda = F::zero();
        let (mut du, mut dv);
        loop {
            let h11 = h.0 + lambda;
            let h22 = h.2 + lambda;
            let det = h11 * h22 - h.1 * h.1;
            if h11 > F::zero() && det > F::zero() {
                du = -(h22 * g[0] - h.1 * g[1]) / det;
                dv = -(h11 * g[1] - h.1 * g[0]) / det;
                break;
            }
            lambda = if lambda == F::zero() {
                F::tol(1e-8) + (h.0.abs() + h.2.abs()) * F::lit(1e-6)
            } else {
                lambda * F::lit(10.0)
            };
            if !lambda.is_finite() {
                return Err(BanditError::Convergence {
                    iterations: 0,
                    residual: grad_norm(g).as_f64(),
                });
            }
        }
        let len = du.abs().max(dv.abs());
        if len > max_step {
            du = du * max_step / len;
            dv = dv * max_step / len;
        }
        let slope = g[0] * du + g[1] * dv;
        let mut step = F::one();
        let mut moved = false;
        for _ in 0..50 {
            let (nu, nv) = (u + step * du, v + step * dv);
            if let Ok(next) = obj.value_log(nu, nv) {
                let armijo = next <= value + F::lit(1e-4) * step * slope;
                // below rounding: accept if the gradient shrinks. The value
                // carries cancellation noise from ln Γ, so a predicted decrease
                // far below it cannot be verified from values alone.
                let flat = (next - value).abs() <= F::epsilon() * F::lit(16.0) * (value.abs() + F::one());
                let negligible = slope.abs() <= F::tol(1e-12) * (value.abs() + F::one());
                let ok = armijo
                    || ((flat || negligible)
                        && obj
                            .eval_log(nu, nv)
                            .map(|(_, g2, _)| grad_norm(g2) < grad_norm(g))
                            .unwrap_or(false));
                if next.is_finite() && ok {
                    u = nu;
                    v = nv;
                    moved = true;
                    break;
                }
            }
            step = step * half;
        }
        if !moved {
            break;
        }
    }
    let (_, g, _) = obj.eval_log(u, v)?;
    if grad_norm(g) <= tol {
        Ok((u.exp(), v.exp()))
    } else {
        Err(BanditError::Convergence {
            iterations: RI_MAX_ITER,
            residual: grad_norm(g).as_f64(),
        })
    }
}

/// Pattern-search coordinate descent in log coordinates.
fn coordinate_descent<F: Scalar>(obj: &RiObjective<F>, start: (F, F)) -> Result<(F, F)> {
    let mut x = [start.0, start.1];
    let mut best = obj.value_log(x[0], x[1])?;
    let mut step = F::lit(0.5);
    let min_step = F::tol(1e-13);
    let mut iterations = 0;
    while step > min_step && iterations < 100_000 {
        iterations += 1;
        let mut improved = false;
        for i in 0..2 {
            for dir in [F::one(), -F::one()] {
                let mut trial = x;
                trial[i] = trial[i] + dir * step;
                if let Ok(val) = obj.value_log(trial[0], trial[1]) {
                    if val < best {
                        best = val;
                        x = trial;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step = step * F::lit(0.5);
        }
    }
    let (_, g, _) = obj.eval_log(x[0], x[1])?;
    if grad_norm(g) <= F::tol(FALLBACK_GRAD_TOL) {
        Ok((x[0].exp(), x[1].exp()))
    } else {
        Err(BanditError::Convergence {
            iterations,
            residual: grad_norm(g).as_f64(),
        })
    }
}

/// Reverse I-projection of the arms' belief-rewards onto the
/// pseudobelief-focal-reward family at exposure `tau`.
///
/// With `tau = +∞` the answer is exactly [`pseudobelief_barycentre`].
/// Otherwise the objective is minimized by Newton from `warm_start` (or the
/// barycentre). Gamma beliefs clamp `1/τ` to half the 1% quantile of the
/// barycentre so the focal normalizer stays finite.
pub fn ri_projection<F: Scalar>(
    arms: &[BeliefReward<F>],
    tau: F,
    warm_start: Option<&BeliefState<F>>,
) -> Result<PseudobeliefFocal<F>> {
    let family = common_family(arms)?;
    if !(tau > F::zero()) {
        return Err(BanditError::Domain(format!("exposure must be positive, got {tau}")));
    }
    let bary = pseudobelief_barycentre(arms)?;
    if tau.is_infinite() {
        return Ok(PseudobeliefFocal::untilted(bary));
    }
    let mut inv_tau = F::one() / tau;
    let mut tau_clamped = false;
    if family == RewardFamily::Exponential {
        let q = gamma_quantile(bary.alpha(), bary.beta(), F::lit(CLAMP_QUANTILE), F::tol(1e-10))?;
        let cap = F::lit(0.5) * q;
        if inv_tau > cap {
            log::debug!(
                "clamping exposure: 1/tau {} exceeds half the 1% quantile {} of {}",
                inv_tau,
                q,
                bary
            );
            inv_tau = cap;
            tau_clamped = true;
        }
    }
    let obj = RiObjective {
        family,
        mu: mean_expectation(arms).0,
        inv_tau,
    };
    let start = warm_start
        .filter(|w| w.family() == family)
        .copied()
        .unwrap_or(bary);
    let (a, b) = match newton_minimize(&obj, (start.alpha().ln(), start.beta().ln())) {
        Ok(x) => x,
        Err(e) => {
            log::debug!("newton failed ({e}); falling back to coordinate descent");
            coordinate_descent(&obj, (bary.alpha().ln(), bary.beta().ln()))?
        }
    };
    let pseudo = BeliefState::new(family, a, b)?;
    let log_z = obj.focal(a, b)?.value;
    Ok(PseudobeliefFocal {
        pseudo,
        tau,
        focal_tau: if tau_clamped { F::one() / inv_tau } else { tau },
        log_z,
        tau_clamped,
    })
}

/// `Σ_a KL(P^a ‖ Q̄)` for a candidate pseudobelief `pseudo` at exposure `tau`.
pub fn ri_objective<F: Scalar>(arms: &[BeliefReward<F>], pseudo: &BeliefState<F>, tau: F) -> Result<F> {
    common_family(arms)?;
    let inv_tau = inverse(tau);
    let log_z = if inv_tau == F::zero() {
        F::zero()
    } else {
        match pseudo.family() {
            RewardFamily::Bernoulli => bernoulli_focal(pseudo.alpha(), pseudo.beta(), inv_tau).value,
            RewardFamily::Exponential => gamma_focal(pseudo.alpha(), pseudo.beta(), inv_tau)?.value,
        }
    };
    let mut total = F::zero();
    for arm in arms {
        total = total + arm.belief.kl(pseudo)? + log_z;
        if inv_tau > F::zero() {
            total = total - inv_tau * arm.belief.mean_reward()?;
        }
    }
    Ok(total)
}

/// Arm-dependent part of `KL(P^a ‖ Q̄)`:
/// `KL(b^a ‖ b̄) − E_{P^a}[X] / τ` with the requested exposure τ.
///
/// Scores are comparable only against the same Q̄. A gamma arm whose
/// predictive mean is infinite (shape ≤ 1) scores `−∞` under a finite
/// exposure.
pub fn i_projection_score<F: Scalar>(arm: &BeliefReward<F>, q: &PseudobeliefFocal<F>) -> Result<F> {
    let kl = arm.belief.kl(&q.pseudo)?;
    let inv_tau = q.inverse_exposure();
    if inv_tau == F::zero() {
        return Ok(kl);
    }
    match arm.belief.mean_reward() {
        Ok(mean) => Ok(kl - inv_tau * mean),
        Err(BanditError::UndefinedMean { .. }) => Ok(F::neg_infinity()),
        Err(e) => Err(e),
    }
}

/// Full `KL(P^a ‖ Q̄)`, i.e. the score plus `ln Z̄`.
pub fn i_projection_divergence<F: Scalar>(arm: &BeliefReward<F>, q: &PseudobeliefFocal<F>) -> Result<F> {
    Ok(i_projection_score(arm, q)? + q.log_z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn beta(a: f64, b: f64) -> BeliefReward<f64> {
        BeliefState::new_beta(a, b).unwrap().into()
    }

    fn gamma(a: f64, b: f64) -> BeliefReward<f64> {
        BeliefState::new_gamma(a, b).unwrap().into()
    }

    #[test]
    fn exposure_examples() {
        let inf = ExposureSchedule::Infinite;
        assert!(inf.exposure::<f64>(57).is_infinite());
        let log = ExposureSchedule::LogSchedule { c: 15.0 };
        assert!(log.exposure::<f64>(1).is_infinite());
        assert!(log.exposure::<f64>(2).is_infinite());
        let t10: f64 = log.exposure(10);
        let direct = 1.0 / (10f64.ln() + 15.0 * 10f64.ln().ln());
        assert!((t10 - direct).abs() < 1e-15);
        assert!((t10 - 0.06751).abs() < 5e-6);
        let two = ExposureSchedule::TwoPhase { explore_steps: 500, c: 15.0 };
        assert!(two.exposure::<f64>(500).is_infinite());
        assert_eq!(two.exposure::<f64>(501), log.exposure::<f64>(501));
    }

    #[test]
    fn exposure_monotone_after_three() {
        let log = ExposureSchedule::LogSchedule { c: 15.0 };
        let mut prev: f64 = log.exposure(3);
        assert!(prev.is_finite() && prev > 0.0);
        for t in 4..100_000 {
            let cur: f64 = log.exposure(t);
            assert!(cur > 0.0 && cur <= prev);
            prev = cur;
        }
    }

    #[test]
    fn normalizer_examples() {
        let b = BeliefState::new_beta(1.0, 1.0).unwrap();
        assert_eq!(log_focal_normalizer(&b, f64::INFINITY).unwrap(), 0.0);
        let b = BeliefState::new_beta(2.0, 2.0).unwrap();
        let v = log_focal_normalizer(&b, 1.0).unwrap();
        let want = ((2.0 * 1f64.exp() + 2.0) / 4.0).ln();
        assert!((v - want).abs() < 1e-14);
        assert!((v - 0.620_114_506_958_277).abs() < 1e-12);
        let quad = oracle::bernoulli_focal_normalizer_quadrature((2.0, 2.0), 1.0).unwrap();
        assert!((v - quad.ln()).abs() < 1e-10);
        let b = BeliefState::new_beta(3.0, 1.0).unwrap();
        let v = log_focal_normalizer(&b, 0.5).unwrap();
        let quad = oracle::bernoulli_focal_normalizer_quadrature((3.0, 1.0), 0.5).unwrap();
        assert!((v - ((3.0 * 2f64.exp() + 1.0) / 4.0).ln()).abs() < 1e-14);
        assert!((v - quad.ln()).abs() < 1e-10);
    }

    #[test]
    fn gamma_normalizer_rejects_divergent_exposure() {
        let b = BeliefState::new_gamma(2.0, 1.0).unwrap();
        assert!(matches!(
            log_focal_normalizer(&b, 0.5),
            Err(BanditError::DivergentNormalizer { .. })
        ));
        let b = BeliefState::new_gamma(200.0f64, 100.0).unwrap();
        let v = log_focal_normalizer(&b, 20.0).unwrap();
        // θ ≈ 2 ≫ c = 0.05: ln E[θ/(θ − c)] ≈ ln(1 + c E[1/θ])
        assert!(v > 0.0 && (v - (1.0f64 + 0.05 * 100.0 / 199.0 + 0.0025 * 1e4 / (199.0 * 198.0)).ln()).abs() < 1e-4);
    }

    #[test]
    fn gamma_focal_derivatives_match_finite_differences() {
        let (a, b, c) = (30.0f64, 12.0, 0.6);
        let f = gamma_focal(a, b, c).unwrap();
        let h = 1e-5;
        let da = (gamma_focal(a + h, b, c).unwrap().value - gamma_focal(a - h, b, c).unwrap().value) / (2.0 * h);
        let db = (gamma_focal(a, b + h, c).unwrap().value - gamma_focal(a, b - h, c).unwrap().value) / (2.0 * h);
        assert!((f.grad[0] - da).abs() < 1e-7, "{} {}", f.grad[0], da);
        assert!((f.grad[1] - db).abs() < 1e-7, "{} {}", f.grad[1], db);
        let daa = (gamma_focal(a + h, b, c).unwrap().grad[0] - gamma_focal(a - h, b, c).unwrap().grad[0]) / (2.0 * h);
        let dab = (gamma_focal(a, b + h, c).unwrap().grad[0] - gamma_focal(a, b - h, c).unwrap().grad[0]) / (2.0 * h);
        let dbb = (gamma_focal(a, b + h, c).unwrap().grad[1] - gamma_focal(a, b - h, c).unwrap().grad[1]) / (2.0 * h);
        let (h11, h12, h22) = f.h();
        assert!((h11 - daa).abs() < 1e-6);
        assert!((h12 - dab).abs() < 1e-6);
        assert!((h22 - dbb).abs() < 1e-6);
    }

    #[test]
    fn barycentre_examples() {
        let b = pseudobelief_barycentre(&[beta(2.0, 3.0), beta(2.0, 3.0)]).unwrap();
        assert!((b.alpha() - 2.0).abs() < 1e-9 && (b.beta() - 3.0).abs() < 1e-9);
        let b = pseudobelief_barycentre(&[beta(5.0, 2.0)]).unwrap();
        assert_eq!((b.alpha(), b.beta()), (5.0, 2.0));
        assert!(pseudobelief_barycentre::<f64>(&[]).is_err());
        assert!(pseudobelief_barycentre(&[beta(1.0, 1.0), gamma(1.0, 1.0)]).is_err());
    }

    #[test]
    fn barycentre_matches_grid_search() {
        let arms = [beta(1.0, 1.0), beta(3.0, 1.0)];
        let b = pseudobelief_barycentre(&arms).unwrap();
        let (ga, gb, _) = oracle::grid_argmin(
            |a, b| {
                let q = BeliefState::new_beta(a, b).unwrap();
                arms.iter().map(|p| p.belief.kl(&q).unwrap()).sum()
            },
            (10.0 / 400.0, 10.0),
            (10.0 / 400.0, 10.0),
            400,
        );
        let cell = 10.0 / 400.0;
        assert!((b.alpha() - ga).abs() <= cell, "{} vs {}", b.alpha(), ga);
        assert!((b.beta() - gb).abs() <= cell, "{} vs {}", b.beta(), gb);
    }

    #[test]
    fn ri_projection_at_infinite_exposure_is_barycentre() {
        let arms = [beta(3.0, 7.0), beta(12.0, 2.0)];
        let q = ri_projection(&arms, f64::INFINITY, None).unwrap();
        let b = pseudobelief_barycentre(&arms).unwrap();
        assert!((q.pseudo.alpha() - b.alpha()).abs() < 1e-8);
        assert!((q.pseudo.beta() - b.beta()).abs() < 1e-8);
        assert_eq!(q.log_z, 0.0);
    }

    #[test]
    fn ri_projection_matches_objective_grid() {
        let arms = [beta(9.0, 3.0), beta(2.0, 10.0)];
        let tau = 0.5;
        let q = ri_projection(&arms, tau, None).unwrap();
        let objective = |a: f64, b: f64| oracle::bernoulli_ri_objective(&[(9.0, 3.0), (2.0, 10.0)], (a, b), tau);
        let (ga, gb, gv) = oracle::refined_grid_argmin(objective, (0.01, 30.0), (0.01, 30.0), 0.01);
        let at_q = objective(q.pseudo.alpha(), q.pseudo.beta());
        assert!(at_q <= gv + 1e-9, "{at_q} vs grid {gv} at ({ga}, {gb})");
        assert!((q.pseudo.alpha() - ga).abs() < 0.02 && (q.pseudo.beta() - gb).abs() < 0.02);
    }

    #[test]
    fn focal_tilt_on_identical_arms() {
        // the gradient of K ln Z̄ at (4, 4) is (+, −): the pseudobelief moves to
        // a lower mean while the tilted reward mean of Q̄ rises above 1/2
        let arms = [beta(4.0, 4.0); 3];
        let q = ri_projection(&arms, f64::INFINITY, None).unwrap();
        assert!((q.pseudo.alpha() - 4.0).abs() < 1e-9 && (q.pseudo.beta() - 4.0).abs() < 1e-9);
        for tau in [0.3, 1.0, 5.0] {
            let q = ri_projection(&arms, tau, None).unwrap();
            let f = bernoulli_focal(4.0, 4.0, 1.0 / tau);
            assert!(f.grad[0] > 0.0 && f.grad[1] < 0.0);
            let m = q.pseudo.mean_reward().unwrap();
            assert!(m < 0.5, "{tau}: {}", q.pseudo);
            let tilted = q.pseudo.alpha() * (1.0 / tau).exp()
                / (q.pseudo.alpha() * (1.0 / tau).exp() + q.pseudo.beta());
            assert!(tilted > 0.5);
        }
    }

    #[test]
    fn ri_projection_improves_on_previous_pseudobelief() {
        let arms = [beta(5.0, 3.0), beta(2.0, 6.0), beta(7.0, 7.0)];
        for tau in [0.2, 1.0, 4.0] {
            let prev = ri_projection(&arms[..2], tau, None).unwrap();
            let q = ri_projection(&arms, tau, Some(&prev.pseudo)).unwrap();
            let at_new = ri_objective(&arms, &q.pseudo, tau).unwrap();
            let at_prev = ri_objective(&arms, &prev.pseudo, tau).unwrap();
            let bary = pseudobelief_barycentre(&arms).unwrap();
            assert!(at_new <= at_prev + 1e-12);
            assert!(at_new <= ri_objective(&arms, &bary, tau).unwrap() + 1e-12);
        }
    }

    #[test]
    fn gamma_ri_projection_clamps_and_converges() {
        let arms = [gamma(20.0, 5.0), gamma(8.0, 8.0), gamma(3.0, 1.0)];
        let q = ri_projection(&arms, 0.05, None).unwrap();
        assert!(q.tau_clamped);
        assert_eq!(q.tau, 0.05);
        assert!(q.focal_tau > 0.05);
        assert!(q.log_z > 0.0);
        let bary = pseudobelief_barycentre(&arms).unwrap();
        assert!(ri_objective(&arms, &q.pseudo, q.focal_tau).unwrap() <= ri_objective(&arms, &bary, q.focal_tau).unwrap() + 1e-12);
        // tilting toward long rewards is penalized through Z̄: larger rates
        assert!(q.pseudo.mean_parameter() >= bary.mean_parameter());
        assert!(log_focal_normalizer(&q.pseudo, q.focal_tau).is_ok());
    }

    #[test]
    fn score_examples() {
        let arms = [beta(3.0, 4.0), beta(6.0, 2.0)];
        let q = ri_projection(&arms, f64::INFINITY, None).unwrap();
        let own = BeliefReward::new(q.pseudo);
        assert_eq!(i_projection_score(&own, &q).unwrap(), 0.0);
        let s1 = i_projection_score(&beta(2.0, 2.0), &q).unwrap();
        let s2 = i_projection_score(&beta(2.0, 2.0), &q).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn divergence_matches_joint_quadrature() {
        let arms = [beta(5.0, 5.0), beta(2.0, 8.0)];
        let q = ri_projection(&arms, 1.0, None).unwrap();
        let full = i_projection_divergence(&arms[0], &q).unwrap();
        let quad = oracle::joint_kl_bernoulli_quadrature(
            (5.0, 5.0),
            (q.pseudo.alpha(), q.pseudo.beta()),
            1.0,
        )
        .unwrap();
        assert!((full - quad).abs() < 1e-5, "{full} vs {quad}");
    }

    #[test]
    fn undefined_gamma_mean_scores_minus_infinity() {
        let arms = [gamma(1.0, 1.0), gamma(5.0, 2.0)];
        let q = ri_projection(&arms, 0.5, None).unwrap();
        assert_eq!(i_projection_score(&arms[0], &q).unwrap(), f64::NEG_INFINITY);
        assert!(i_projection_score(&arms[1], &q).unwrap().is_finite());
    }

    #[test]
    fn works_in_f32() {
        let arms: [BeliefReward<f32>; 2] = [
            BeliefState::new_beta(3.0f32, 5.0).unwrap().into(),
            BeliefState::new_beta(6.0f32, 2.0).unwrap().into(),
        ];
        let q = ri_projection(&arms, 0.5f32, None).unwrap();
        let q64 = ri_projection(&[beta(3.0, 5.0), beta(6.0, 2.0)], 0.5, None).unwrap();
        assert!((q.pseudo.alpha() as f64 - q64.pseudo.alpha()).abs() < 1e-3);
    }
}
