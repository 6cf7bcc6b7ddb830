//! Independent numerical oracles for the closed forms.
//!
//! Densities are evaluated from their unnormalized kernels and normalized by
//! quadrature, so the density oracles do not rely on the log-beta /
//! log-gamma / digamma identities used by the production code. Grid searches
//! take any objective and return the best grid point; they are the reference
//! for the projections' argmins, with the Beta–Bernoulli projection objective
//! transcribed directly in [`bernoulli_ri_objective`].
//!
//! [`run_suite`] bundles the checks for the `bandit oracle-check` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::expfam::BeliefState;
use crate::manifold::{
    i_projection_score, log_focal_normalizer, pseudobelief_barycentre, ri_projection, BeliefReward,
};
use crate::quadrature::{tanh_sinh_half_line, tanh_sinh_unit};

const QUAD_TOL: f64 = 1e-12;

/// Unnormalized Beta log-kernel, shifted so its maximum is near zero.
fn beta_kernel(a: f64, b: f64) -> impl Fn(f64, f64) -> f64 {
    let shift = if a > 1.0 && b > 1.0 {
        let m = (a - 1.0) / (a + b - 2.0);
        (a - 1.0) * m.ln() + (b - 1.0) * (1.0 - m).ln()
    } else {
        0.0
    };
    move |x, xc| (a - 1.0) * x.ln() + (b - 1.0) * xc.ln() - shift
}

/// Unnormalized Gamma log-kernel, shifted at the mode.
fn gamma_kernel(shape: f64, rate: f64) -> impl Fn(f64) -> f64 {
    let shift = if shape > 1.0 {
        let m = (shape - 1.0) / rate;
        (shape - 1.0) * m.ln() - rate * m
    } else {
        0.0
    };
    move |t| (shape - 1.0) * t.ln() - rate * t - shift
}

/// Log of `∫ exp(kernel)` over (0, 1).
fn beta_log_norm(a: f64, b: f64) -> Result<f64> {
    let k = beta_kernel(a, b);
    Ok(tanh_sinh_unit(|x, xc| k(x, xc).exp(), QUAD_TOL)?.ln())
}

fn gamma_log_norm(shape: f64, rate: f64) -> Result<f64> {
    let k = gamma_kernel(shape, rate);
    Ok(tanh_sinh_half_line(|t| k(t).exp(), shape / rate, QUAD_TOL)?.ln())
}

/// `∫ b_p ln(b_p / b_q)` for Beta densities by quadrature.
pub fn kl_beta_quadrature(p: (f64, f64), q: (f64, f64)) -> Result<f64> {
    let (kp, kq) = (beta_kernel(p.0, p.1), beta_kernel(q.0, q.1));
    let (np, nq) = (beta_log_norm(p.0, p.1)?, beta_log_norm(q.0, q.1)?);
    tanh_sinh_unit(
        |x, xc| {
            let lp = kp(x, xc) - np;
            let lq = kq(x, xc) - nq;
            let w = lp.exp();
            if w == 0.0 {
                0.0
            } else {
                w * (lp - lq)
            }
        },
        QUAD_TOL,
    )
}

/// `∫ b_p ln(b_p / b_q)` for Gamma(shape, rate) densities by quadrature.
pub fn kl_gamma_quadrature(p: (f64, f64), q: (f64, f64)) -> Result<f64> {
    let (kp, kq) = (gamma_kernel(p.0, p.1), gamma_kernel(q.0, q.1));
    let (np, nq) = (gamma_log_norm(p.0, p.1)?, gamma_log_norm(q.0, q.1)?);
    tanh_sinh_half_line(
        |t| {
            let lp = kp(t) - np;
            let lq = kq(t) - nq;
            let w = lp.exp();
            if w == 0.0 {
                0.0
            } else {
                w * (lp - lq)
            }
        },
        p.0 / p.1,
        QUAD_TOL,
    )
}

/// Posterior-predictive mean `∫∫ x θ e^{−θx} b(θ) dx dθ` under Gamma(shape, rate).
pub fn predictive_mean_exponential(shape: f64, rate: f64) -> Result<f64> {
    let k = gamma_kernel(shape, rate);
    let norm = gamma_log_norm(shape, rate)?;
    tanh_sinh_half_line(
        |theta| {
            let w = (k(theta) - norm).exp();
            if w == 0.0 {
                return 0.0;
            }
            let inner = tanh_sinh_half_line(|x| x * theta * (-theta * x).exp(), 1.0 / theta, 1e-13)
                .unwrap_or(f64::NAN);
            w * inner
        },
        shape / rate,
        1e-10,
    )
}

/// `Z̄ = Σ_x ∫ b(θ) θ^x (1 − θ)^{1−x} e^{x/τ} dθ` by quadrature.
pub fn bernoulli_focal_normalizer_quadrature(pseudo: (f64, f64), tau: f64) -> Result<f64> {
    let k = beta_kernel(pseudo.0, pseudo.1);
    let norm = beta_log_norm(pseudo.0, pseudo.1)?;
    let tilt = if tau.is_infinite() { 1.0 } else { (1.0 / tau).exp() };
    tanh_sinh_unit(|x, xc| (k(x, xc) - norm).exp() * (x * tilt + xc), QUAD_TOL)
}

/// Mass of the normalized focal joint `P̄ e^{X/τ} / Z̄` for a Beta
/// pseudobelief, with `Z̄` taken from the closed form.
pub fn bernoulli_focal_mass(pseudo: (f64, f64), tau: f64) -> Result<f64> {
    let b = BeliefState::new_beta(pseudo.0, pseudo.1)?;
    let log_z = log_focal_normalizer(&b, tau)?;
    Ok(bernoulli_focal_normalizer_quadrature(pseudo, tau)? / log_z.exp())
}

/// Mass of the normalized focal joint for a Gamma pseudobelief: the tilted
/// joint `b(θ) θ e^{−(θ − 1/τ)x}` where `θ > 2/τ`, untilted elsewhere,
/// integrated over `(x, θ)` by nested quadrature and divided by `Z̄`.
pub fn exponential_focal_mass(pseudo: (f64, f64), tau: f64) -> Result<f64> {
    let b = BeliefState::new_gamma(pseudo.0, pseudo.1)?;
    let log_z = log_focal_normalizer(&b, tau)?;
    let c = if tau.is_infinite() { 0.0 } else { 1.0 / tau };
    let k = gamma_kernel(pseudo.0, pseudo.1);
    let norm = gamma_log_norm(pseudo.0, pseudo.1)?;
    let total = tanh_sinh_half_line(
        |theta| {
            let w = (k(theta) - norm).exp();
            if w == 0.0 {
                return 0.0;
            }
            let tilt = if theta > 2.0 * c { c } else { 0.0 };
            let inner = tanh_sinh_half_line(
                |x| theta * (-(theta - tilt) * x).exp(),
                1.0 / (theta - tilt),
                1e-13,
            )
            .unwrap_or(f64::NAN);
            w * inner
        },
        pseudo.0 / pseudo.1,
        1e-10,
    )?;
    Ok(total / log_z.exp())
}

/// Full joint divergence `KL(P^a ‖ Q̄)` for Bernoulli rewards, with
/// `P^a = b_a(θ) θ^x (1 − θ)^{1−x}` and `Q̄ = b̄(θ) θ^x (1 − θ)^{1−x} e^{x/τ} / Z̄`,
/// computed by summing over `x ∈ {0, 1}` and integrating θ.
pub fn joint_kl_bernoulli_quadrature(arm: (f64, f64), pseudo: (f64, f64), tau: f64) -> Result<f64> {
    let (ka, kq) = (beta_kernel(arm.0, arm.1), beta_kernel(pseudo.0, pseudo.1));
    let (na, nq) = (beta_log_norm(arm.0, arm.1)?, beta_log_norm(pseudo.0, pseudo.1)?);
    let inv_tau = if tau.is_infinite() { 0.0 } else { 1.0 / tau };
    let log_z = bernoulli_focal_normalizer_quadrature(pseudo, tau)?.ln();
    tanh_sinh_unit(
        |x, xc| {
            let la = ka(x, xc) - na;
            let lq = kq(x, xc) - nq;
            let w = la.exp();
            if w == 0.0 {
                return 0.0;
            }
            // reward 1 with probability θ, reward 0 with probability 1 − θ;
            // the likelihood cancels inside the log ratio
            let base = la - lq + log_z;
            w * (x * (base - inv_tau) + xc * base)
        },
        QUAD_TOL,
    )
}

/// Beta–Bernoulli rI-projection objective, transcribed term by term:
/// `Σ_a KL(b_a ‖ b̄) − (1/τ) Σ_a α_a/N_a + K ln((ᾱ e^{1/τ} + β̄)/N̄)`,
/// with the belief KLs by quadrature-free closed form of the integrals
/// `∫ b_a ln b̄`. Only used as a grid-search target.
pub fn bernoulli_ri_objective(arms: &[(f64, f64)], pseudo: (f64, f64), tau: f64) -> f64 {
    use crate::special::{digamma, ln_beta};
    let (qa, qb) = pseudo;
    let inv_tau = if tau.is_infinite() { 0.0 } else { 1.0 / tau };
    let k = arms.len() as f64;
    let lb_q = ln_beta(qa, qb).unwrap_or(f64::NAN);
    let mut total = 0.0;
    for &(a, b) in arms {
        let n = a + b;
        let (pa, pb, pn) = (
            digamma(a).unwrap_or(f64::NAN),
            digamma(b).unwrap_or(f64::NAN),
            digamma(n).unwrap_or(f64::NAN),
        );
        // E_a[ln θ] = ψ(a) − ψ(n), E_a[ln(1 − θ)] = ψ(b) − ψ(n)
        let cross = (qa - 1.0) * (pa - pn) + (qb - 1.0) * (pb - pn) - lb_q;
        let entropy_part = (a - 1.0) * (pa - pn) + (b - 1.0) * (pb - pn) - ln_beta(a, b).unwrap_or(f64::NAN);
        total += entropy_part - cross - inv_tau * a / n;
    }
    let log_z = ((qa * inv_tau.exp() + qb) / (qa + qb)).ln();
    total + k * log_z
}

/// Exhaustive search over an `n × n` grid spanning `a_range × b_range`
/// (endpoints included). Returns `(a, b, f(a, b))` at the best point.
pub fn grid_argmin(
    f: impl Fn(f64, f64) -> f64,
    a_range: (f64, f64),
    b_range: (f64, f64),
    n: usize,
) -> (f64, f64, f64) {
    let step = |r: (f64, f64), i: usize| {
        if n <= 1 {
            r.0
        } else {
            r.0 + (r.1 - r.0) * i as f64 / (n - 1) as f64
        }
    };
    let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
    for i in 0..n {
        let a = step(a_range, i);
        for j in 0..n {
            let b = step(b_range, j);
            let v = f(a, b);
            if v < best.2 {
                best = (a, b, v);
            }
        }
    }
    best
}

/// Two-stage grid search: a 0.1-spaced grid over the ranges, then a grid at
/// spacing `resolution` over ±0.2 around the coarse winner.
pub fn refined_grid_argmin(
    f: impl Fn(f64, f64) -> f64,
    a_range: (f64, f64),
    b_range: (f64, f64),
    resolution: f64,
) -> (f64, f64, f64) {
    let coarse = 0.1;
    let count = |r: (f64, f64), h: f64| ((r.1 - r.0) / h).floor() as usize + 1;
    let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
    for i in 0..count(a_range, coarse) {
        let a = a_range.0 + coarse * i as f64;
        for j in 0..count(b_range, coarse) {
            let b = b_range.0 + coarse * j as f64;
            let v = f(a, b);
            if v < best.2 {
                best = (a, b, v);
            }
        }
    }
    let (ca, cb) = (best.0, best.1);
    let m = (2.0 * coarse / resolution).round() as i64;
    for i in -m..=m {
        let a = ca + resolution * i as f64;
        if a <= 0.0 || a < a_range.0 {
            continue;
        }
        for j in -m..=m {
            let b = cb + resolution * j as f64;
            if b <= 0.0 || b < b_range.0 {
                continue;
            }
            let v = f(a, b);
            if v < best.2 {
                best = (a, b, v);
            }
        }
    }
    best
}

/// One line of the oracle report.
#[derive(Debug, Clone)]
pub struct OracleCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64, what: &str) -> OracleCheck {
    OracleCheck {
        name,
        passed: worst.is_finite() && worst <= tol,
        detail: format!("{what}: worst {worst:.3e} (tolerance {tol:.0e})"),
    }
}

/// Worst absolute gap between closed-form and quadrature KL over `n` random
/// Beta pairs with parameters in `[0.5, 30]`.
pub fn beta_kl_sweep(n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let p = (rng.random_range(0.5..30.0), rng.random_range(0.5..30.0));
        let q = (rng.random_range(0.5..30.0), rng.random_range(0.5..30.0));
        let closed = BeliefState::new_beta(p.0, p.1)?.kl(&BeliefState::new_beta(q.0, q.1)?)?;
        worst = worst.max((closed - kl_beta_quadrature(p, q)?).abs());
    }
    Ok(worst)
}

/// As [`beta_kl_sweep`] for Gamma pairs, shape in `[0.5, 30]`, rate in `[0.2, 10]`.
pub fn gamma_kl_sweep(n: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let p = (rng.random_range(0.5..30.0), rng.random_range(0.2..10.0));
        let q = (rng.random_range(0.5..30.0), rng.random_range(0.2..10.0));
        let closed = BeliefState::new_gamma(p.0, p.1)?.kl(&BeliefState::new_gamma(q.0, q.1)?)?;
        worst = worst.max((closed - kl_gamma_quadrature(p, q)?).abs());
    }
    Ok(worst)
}

/// Random Bernoulli arm set: `k` Beta beliefs with parameters in `[1, 20]`.
pub fn random_beta_arms(rng: &mut impl Rng, k: usize) -> Vec<(f64, f64)> {
    (0..k)
        .map(|_| (rng.random_range(1.0..20.0), rng.random_range(1.0..20.0)))
        .collect()
}

fn beliefs(arms: &[(f64, f64)]) -> Result<Vec<BeliefReward<f64>>> {
    arms.iter()
        .map(|&(a, b)| Ok(BeliefState::new_beta(a, b)?.into()))
        .collect()
}

/// Projection sweep over `n` random 2–3-arm instances. Returns the worst
/// excess of the optimizer's objective over the refined grid minimum and the
/// worst parameter gap to the barycentre at infinite exposure.
pub fn projection_sweep(n: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_excess: f64 = 0.0;
    let mut worst_bary: f64 = 0.0;
    for _ in 0..n {
        let k = rng.random_range(2..=3);
        let arms = random_beta_arms(&mut rng, k);
        let tau = rng.random_range(0.2..3.0);
        let bel = beliefs(&arms)?;
        let q = ri_projection(&bel, tau, None)?;
        let obj = |a: f64, b: f64| bernoulli_ri_objective(&arms, (a, b), tau);
        let (_, _, grid_min) = refined_grid_argmin(obj, (0.1, 25.0), (0.1, 25.0), 0.01);
        worst_excess = worst_excess.max(obj(q.pseudo.alpha(), q.pseudo.beta()) - grid_min);
        let inf = ri_projection(&bel, f64::INFINITY, None)?;
        let bary = pseudobelief_barycentre(&bel)?;
        worst_bary = worst_bary
            .max((inf.pseudo.alpha() - bary.alpha()).abs())
            .max((inf.pseudo.beta() - bary.beta()).abs());
    }
    Ok((worst_excess, worst_bary))
}

/// Counts instances (out of `n`) where the arm minimizing the full joint
/// quadrature KL differs from the arm minimizing the closed-form score.
pub fn argmin_decomposition_sweep(n: usize, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..n {
        let k = rng.random_range(2..=4);
        let arms = random_beta_arms(&mut rng, k);
        let tau = if rng.random_bool(0.25) {
            f64::INFINITY
        } else {
            rng.random_range(0.1..5.0)
        };
        let bel = beliefs(&arms)?;
        let q = ri_projection(&bel, tau, None)?;
        let mut by_score = (0, f64::INFINITY);
        let mut by_quad = (0, f64::INFINITY);
        for (i, arm) in bel.iter().enumerate() {
            let s = i_projection_score(arm, &q)?;
            if s < by_score.1 {
                by_score = (i, s);
            }
            let full = joint_kl_bernoulli_quadrature(arms[i], (q.pseudo.alpha(), q.pseudo.beta()), q.tau)?;
            if full < by_quad.1 {
                by_quad = (i, full);
            }
        }
        if by_score.0 != by_quad.0 {
            mismatches += 1;
        }
    }
    Ok(mismatches)
}

/// Runs every oracle family once and reports pass/fail lines.
pub fn run_suite(seed: u64) -> Vec<OracleCheck> {
    let mut out = Vec::new();
    let mut push = |res: Result<OracleCheck>, name: &'static str| {
        out.push(res.unwrap_or_else(|e| OracleCheck {
            name,
            passed: false,
            detail: format!("error: {e}"),
        }))
    };
    push(
        beta_kl_sweep(100, seed).map(|w| check("kl-beta", w, 1e-6, "100 random pairs vs quadrature")),
        "kl-beta",
    );
    push(
        gamma_kl_sweep(100, seed ^ 1).map(|w| check("kl-gamma", w, 1e-6, "100 random pairs vs quadrature")),
        "kl-gamma",
    );
    push(
        (|| {
            let mut worst: f64 = 0.0;
            for (p, tau) in [((2.0, 2.0), 1.0), ((3.0, 1.0), 0.5), ((7.5, 2.5), 0.2), ((1.0, 1.0), f64::INFINITY)] {
                worst = worst.max((bernoulli_focal_mass(p, tau)? - 1.0).abs());
            }
            for (p, tau) in [((40.0, 20.0), 5.0), ((200.0, 100.0), 4.0)] {
                worst = worst.max((exponential_focal_mass(p, tau)? - 1.0).abs());
            }
            Ok(check("focal-normalization", worst, 1e-6, "focal joint mass"))
        })(),
        "focal-normalization",
    );
    push(
        (|| {
            let arms = [(1.0, 1.0), (3.0, 1.0)];
            let bel = beliefs(&arms)?;
            let b = pseudobelief_barycentre(&bel)?;
            let cell = 10.0 / 400.0;
            let (ga, gb, _) = grid_argmin(
                |a, bb| {
                    let q = BeliefState::new_beta(a, bb).unwrap();
                    bel.iter().map(|p| p.belief.kl(&q).unwrap()).sum()
                },
                (cell, 10.0),
                (cell, 10.0),
                400,
            );
            let gap = ((b.alpha() - ga).abs()).max((b.beta() - gb).abs());
            Ok(check("barycentre-grid", gap, cell, "parameter gap to 400x400 grid argmin"))
        })(),
        "barycentre-grid",
    );
    push(
        projection_sweep(20, seed ^ 2).map(|(excess, bary)| {
            let mut c = check("ri-projection-grid", excess.max(0.0), 1e-4, "objective excess over grid minimum");
            if bary > 1e-8 {
                c.passed = false;
            }
            c.detail.push_str(&format!("; barycentre gap {bary:.3e} (tolerance 1e-8)"));
            c
        }),
        "ri-projection-grid",
    );
    push(
        argmin_decomposition_sweep(50, seed ^ 3).map(|m| OracleCheck {
            name: "argmin-decomposition",
            passed: m == 0,
            detail: format!("{m} of 50 instances select a different arm"),
        }),
        "argmin-decomposition",
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_kl_of_identical_beliefs_is_zero() {
        assert!(kl_beta_quadrature((3.0, 4.0), (3.0, 4.0)).unwrap().abs() < 1e-12);
        assert!(kl_gamma_quadrature((3.0, 4.0), (3.0, 4.0)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn predictive_mean_oracle_matches_known_value() {
        // E[1/θ] under Gamma(3, 1) is 1/2
        assert!((predictive_mean_exponential(3.0, 1.0).unwrap() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn grid_argmin_of_quadratic() {
        let (a, b, v) = grid_argmin(|a, b| (a - 1.0).powi(2) + (b - 2.0).powi(2), (0.0, 4.0), (0.0, 4.0), 41);
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12 && v < 1e-20);
        let (a, b, _) = refined_grid_argmin(|a, b| (a - 1.234).powi(2) + (b - 2.345).powi(2), (0.01, 5.0), (0.01, 5.0), 0.01);
        assert!((a - 1.234).abs() <= 0.005 + 1e-9 && (b - 2.345).abs() <= 0.005 + 1e-9);
    }

    #[test]
    fn transcribed_objective_agrees_with_manifold_objective() {
        let arms = [(9.0, 3.0), (2.0, 10.0)];
        let bel = beliefs(&arms).unwrap();
        let pseudo = BeliefState::new_beta(4.0, 6.0).unwrap();
        let here = bernoulli_ri_objective(&arms, (4.0, 6.0), 0.5);
        let there = crate::manifold::ri_objective(&bel, &pseudo, 0.5).unwrap();
        assert!((here - there).abs() < 1e-10);
    }
}
