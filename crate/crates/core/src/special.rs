//! Special functions: digamma, trigamma, log-gamma, log-beta and the
//! regularized incomplete gamma/beta functions.
//!
//! Digamma and trigamma shift the argument with the recurrence
//! `ψ(x+1) = ψ(x) + 1/x` until `x >= 6` and then apply the asymptotic
//! series; the same is done for `ln Γ` with Stirling's series from `x >= 10`.

use crate::error::{BanditError, Result};
use crate::scalar::Scalar;

const DIGAMMA_SHIFT: f64 = 6.0;
const LGAMMA_SHIFT: f64 = 10.0;

/// B_{2k} / (2k), k = 1..7.
const DIGAMMA_ASYMP: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

/// B_{2k}, k = 1..7.
const BERNOULLI_EVEN: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

fn check_positive<F: Scalar>(x: F, name: &str) -> Result<()> {
    if x > F::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(BanditError::Domain(format!(
            "{name} requires a positive finite argument, got {x}"
        )))
    }
}

/// Digamma ψ(x) for x > 0. Unchecked; see [`digamma`].
pub(crate) fn digamma_unchecked<F: Scalar>(x: F) -> F {
    let one = F::one();
    let mut acc = F::zero();
    let mut xx = x;
    let threshold = F::lit(DIGAMMA_SHIFT);
    while xx < threshold {
        acc = acc - one / xx;
        xx = xx + one;
    }
    acc = acc + xx.ln() - F::lit(0.5) / xx;
    let inv2 = one / (xx * xx);
    let mut pow = inv2;
    for &c in &DIGAMMA_ASYMP {
        acc = acc - F::lit(c) * pow;
        pow = pow * inv2;
    }
    acc
}

/// Trigamma ψ'(x) for x > 0. Unchecked; see [`trigamma`].
pub(crate) fn trigamma_unchecked<F: Scalar>(x: F) -> F {
    let one = F::one();
    let mut acc = F::zero();
    let mut xx = x;
    let threshold = F::lit(DIGAMMA_SHIFT);
    while xx < threshold {
        acc = acc + one / (xx * xx);
        xx = xx + one;
    }
    // ψ'(x) ~ 1/x + 1/(2x²) + Σ B_{2k} / x^{2k+1}
    let inv = one / xx;
    let inv2 = inv * inv;
    acc = acc + inv + F::lit(0.5) * inv2;
    let mut pow = inv2 * inv;
    for &b in &BERNOULLI_EVEN {
        acc = acc + F::lit(b) * pow;
        pow = pow * inv2;
    }
    acc
}

/// ln Γ(x) for x > 0. Unchecked; see [`ln_gamma`].
pub(crate) fn ln_gamma_unchecked<F: Scalar>(x: F) -> F {
    let one = F::one();
    let threshold = F::lit(LGAMMA_SHIFT);
    let mut xx = x;
    let mut prod = one;
    let mut shift = F::zero();
    while xx < threshold {
        prod = prod * xx;
        xx = xx + one;
        // keep the running product away from overflow for tiny x
        if prod > F::lit(1e30) {
            shift = shift + prod.ln();
            prod = one;
        }
    }
    shift = shift + prod.ln();
    let half_ln_2pi = F::lit(0.918_938_533_204_672_8);
    let inv = one / xx;
    let inv2 = inv * inv;
    let mut series = F::zero();
    let mut pow = inv;
    for (k, &b) in BERNOULLI_EVEN.iter().enumerate() {
        let two_k = F::lit(2.0 * (k as f64 + 1.0));
        series = series + F::lit(b) / (two_k * (two_k - one)) * pow;
        pow = pow * inv2;
    }
    (xx - F::lit(0.5)) * xx.ln() - xx + half_ln_2pi + series - shift
}

pub(crate) fn ln_beta_unchecked<F: Scalar>(a: F, b: F) -> F {
    ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)
}

/// Digamma function ψ(x) = d/dx ln Γ(x), x > 0.
pub fn digamma<F: Scalar>(x: F) -> Result<F> {
    check_positive(x, "digamma")?;
    Ok(digamma_unchecked(x))
}

/// Trigamma function ψ'(x), x > 0.
pub fn trigamma<F: Scalar>(x: F) -> Result<F> {
    check_positive(x, "trigamma")?;
    Ok(trigamma_unchecked(x))
}

/// Natural log of the gamma function, x > 0.
pub fn ln_gamma<F: Scalar>(x: F) -> Result<F> {
    check_positive(x, "ln_gamma")?;
    Ok(ln_gamma_unchecked(x))
}

/// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b), a, b > 0.
pub fn ln_beta<F: Scalar>(a: F, b: F) -> Result<F> {
    check_positive(a, "ln_beta")?;
    check_positive(b, "ln_beta")?;
    Ok(ln_beta_unchecked(a, b))
}

const MAX_SERIES_ITER: usize = 10_000;

/// Regularized lower incomplete gamma P(a, x).
pub fn regularized_gamma_p<F: Scalar>(a: F, x: F) -> Result<F> {
    check_positive(a, "regularized_gamma_p")?;
    if x < F::zero() || x.is_nan() {
        return Err(BanditError::Domain(format!(
            "regularized_gamma_p requires x >= 0, got {x}"
        )));
    }
    if x == F::zero() {
        return Ok(F::zero());
    }
    if x.is_infinite() {
        return Ok(F::one());
    }
    let one = F::one();
    let eps = F::epsilon();
    let log_prefix = a * x.ln() - x - ln_gamma_unchecked(a);
    if x < a + one {
        // series
        let mut ap = a;
        let mut del = one / a;
        let mut sum = del;
        for _ in 0..MAX_SERIES_ITER {
            ap = ap + one;
            del = del * x / ap;
            sum = sum + del;
            if del.abs() < sum.abs() * eps {
                return Ok((sum.ln() + log_prefix).exp().min(one));
            }
        }
        Err(BanditError::Convergence {
            iterations: MAX_SERIES_ITER,
            residual: del.as_f64(),
        })
    } else {
        // Lentz continued fraction for Q(a, x)
        let tiny = F::min_positive_value() / eps;
        let two = F::lit(2.0);
        let mut b = x + one - a;
        let mut c = one / tiny;
        let mut d = one / b;
        let mut h = d;
        for i in 1..MAX_SERIES_ITER {
            let fi = F::lit(i as f64);
            let an = -fi * (fi - a);
            b = b + two;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = one / d;
            let del = d * c;
            h = h * del;
            if (del - one).abs() < eps {
                let q = (log_prefix + h.ln()).exp();
                return Ok((one - q).max(F::zero()));
            }
        }
        Err(BanditError::Convergence {
            iterations: MAX_SERIES_ITER,
            residual: f64::NAN,
        })
    }
}

fn beta_continued_fraction<F: Scalar>(a: F, b: F, x: F) -> Result<F> {
    let one = F::one();
    let two = F::lit(2.0);
    let eps = F::epsilon();
    let tiny = F::min_positive_value() / eps;
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = one / d;
    let mut h = d;
    for m in 1..MAX_SERIES_ITER {
        let m = F::lit(m as f64);
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        h = h * d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let del = d * c;
        h = h * del;
        if (del - one).abs() < eps {
            return Ok(h);
        }
    }
    Err(BanditError::Convergence {
        iterations: MAX_SERIES_ITER,
        residual: f64::NAN,
    })
}

/// Regularized incomplete beta I_x(a, b).
pub fn regularized_beta<F: Scalar>(a: F, b: F, x: F) -> Result<F> {
    check_positive(a, "regularized_beta")?;
    check_positive(b, "regularized_beta")?;
    if !(x >= F::zero() && x <= F::one()) {
        return Err(BanditError::Domain(format!(
            "regularized_beta requires x in [0, 1], got {x}"
        )));
    }
    let one = F::one();
    if x == F::zero() {
        return Ok(F::zero());
    }
    if x == one {
        return Ok(one);
    }
    let log_front =
        a * x.ln() + b * (one - x).ln() - ln_beta_unchecked(a, b);
    if x < (a + one) / (a + b + F::lit(2.0)) {
        Ok(log_front.exp() * beta_continued_fraction(a, b, x)? / a)
    } else {
        Ok(one - log_front.exp() * beta_continued_fraction(b, a, one - x)? / b)
    }
}

/// Inverts a monotone increasing CDF on `[lo, hi]` by bisection.
///
/// `cdf` must be non-decreasing; the result `q` satisfies
/// `hi - lo <= tol` at exit with `cdf(lo) <= p <= cdf(hi)`.
pub(crate) fn invert_cdf<F: Scalar>(
    mut lo: F,
    mut hi: F,
    p: F,
    tol: F,
    mut cdf: impl FnMut(F) -> Result<F>,
) -> Result<F> {
    let two = F::lit(2.0);
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / two)
}

/// Quantile of Beta(a, b) at level `p`, absolute accuracy `tol`.
pub fn beta_quantile<F: Scalar>(a: F, b: F, p: F, tol: F) -> Result<F> {
    if !(p >= F::zero() && p <= F::one()) {
        return Err(BanditError::Domain(format!("quantile level {p} not in [0,1]")));
    }
    invert_cdf(F::zero(), F::one(), p, tol, |x| regularized_beta(a, b, x))
}

/// Quantile of Gamma(shape, rate) at level `p`, relative accuracy `rel_tol`.
pub fn gamma_quantile<F: Scalar>(shape: F, rate: F, p: F, rel_tol: F) -> Result<F> {
    check_positive(rate, "gamma_quantile")?;
    if !(p >= F::zero() && p < F::one()) {
        return Err(BanditError::Domain(format!("quantile level {p} not in [0,1)")));
    }
    // bracket on the unit-rate scale
    let mut hi = shape.max(F::one());
    let two = F::lit(2.0);
    while regularized_gamma_p(shape, hi)? < p {
        hi = hi * two;
    }
    let tol = hi * rel_tol;
    let x = invert_cdf(F::zero(), hi, p, tol, |x| regularized_gamma_p(shape, x))?;
    Ok(x / rate)
}
