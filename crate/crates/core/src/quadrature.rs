//! Numerical integration.
//!
//! [`gauss_kronrod`] is a globally adaptive 7/15-point Gauss–Kronrod rule used
//! by the production code for the gamma focal normalizer. [`tanh_sinh`] is a
//! double-exponential rule that tolerates integrable endpoint singularities;
//! the oracle suites rely on it.

use crate::error::{BanditError, Result};
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment<F, const N: usize> {
    a: F,
    b: F,
    value: [F; N],
    error: F,
}

fn gk15<F: Scalar, const N: usize>(
    f: &mut impl FnMut(F) -> [F; N],
    a: F,
    b: F,
) -> Segment<F, N> {
    let half = F::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut kronrod = [F::zero(); N];
    let mut gauss = [F::zero(); N];
    for i in 0..N {
        kronrod[i] = fc[i] * F::lit(WGK[7]);
        gauss[i] = fc[i] * F::lit(WG[3]);
    }
    for j in 0..7 {
        let dx = half_len * F::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for i in 0..N {
            let s = f1[i] + f2[i];
            kronrod[i] = kronrod[i] + F::lit(WGK[j]) * s;
            if j % 2 == 1 {
                gauss[i] = gauss[i] + F::lit(WG[j / 2]) * s;
            }
        }
    }
    let mut value = [F::zero(); N];
    let mut error = F::zero();
    for i in 0..N {
        value[i] = kronrod[i] * half_len;
        error = error.max(((kronrod[i] - gauss[i]) * half_len).abs());
    }
    Segment { a, b, value, error }
}

/// Adaptive Gauss–Kronrod integration of a vector-valued integrand on a
/// finite interval. Stops when the summed error estimate is below
/// `max(abs_tol, rel_tol * |I|)` for every component.
pub fn gauss_kronrod_vec<F: Scalar, const N: usize>(
    mut f: impl FnMut(F) -> [F; N],
    a: F,
    b: F,
    abs_tol: F,
    rel_tol: F,
    max_segments: usize,
) -> Result<[F; N]> {
    let mut segments = vec![gk15(&mut f, a, b)];
    loop {
        let mut total = [F::zero(); N];
        let mut err = F::zero();
        for s in &segments {
            for i in 0..N {
                total[i] = total[i] + s.value[i];
            }
            err = err + s.error;
        }
        let scale = total.iter().fold(F::zero(), |m, v| m.max(v.abs()));
        if err <= abs_tol.max(rel_tol * scale) {
            return Ok(total);
        }
        if segments.len() >= max_segments {
            return Err(BanditError::Convergence {
                iterations: segments.len(),
                residual: err.as_f64(),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, F::neg_infinity()), |(bi, be), (i, s)| {
                if s.error > be {
                    (i, s.error)
                } else {
                    (bi, be)
                }
            });
        let s = segments.swap_remove(worst);
        let mid = F::lit(0.5) * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // interval exhausted at machine resolution
            return Ok(total);
        }
        segments.push(gk15(&mut f, s.a, mid));
        segments.push(gk15(&mut f, mid, s.b));
    }
}

/// Scalar adaptive Gauss–Kronrod on `[a, b]`.
pub fn gauss_kronrod<F: Scalar>(
    mut f: impl FnMut(F) -> F,
    a: F,
    b: F,
    abs_tol: F,
    rel_tol: F,
) -> Result<F> {
    gauss_kronrod_vec(move |x| [f(x)], a, b, abs_tol, rel_tol, 4000).map(|v| v[0])
}

/// Tanh–sinh quadrature on the open interval `(0, 1)`.
///
/// The integrand receives both `x` and `1 - x`, each computed without
/// cancellation, so log-densities can be evaluated accurately at either end.
/// Levels are refined until successive estimates agree to `tol`.
pub fn tanh_sinh_unit(mut f: impl FnMut(f64, f64) -> f64, tol: f64) -> Result<f64> {
    use std::f64::consts::FRAC_PI_2;
    // x = 1/(1 + exp(-pi sinh t)), 1-x = 1/(1 + exp(pi sinh t))
    let mut eval = |t: f64| -> f64 {
        let u = 2.0 * FRAC_PI_2 * t.sinh();
        let w = FRAC_PI_2 * t.cosh();
        // dx/dt = pi cosh t * x (1-x)
        let (x, xc) = if u >= 0.0 {
            let e = (-u).exp();
            (1.0 / (1.0 + e), e / (1.0 + e))
        } else {
            let e = u.exp();
            (e / (1.0 + e), 1.0 / (1.0 + e))
        };
        if x <= 0.0 || xc <= 0.0 {
            return 0.0;
        }
        let v = f(x, xc);
        if v == 0.0 {
            0.0
        } else {
            v * 2.0 * w * x * xc
        }
    };
    let t_max = 6.5;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for level in 0..12 {
        h *= 0.5;
        let mut k = 1;
        let mut add = 0.0;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            add += eval(t) + eval(-t);
            k += 2;
        }
        sum += add;
        let next = sum * h;
        let diff = (next - estimate).abs();
        estimate = next;
        if level >= 2 && diff <= tol * estimate.abs().max(1.0) {
            return Ok(estimate);
        }
    }
    Err(BanditError::Convergence {
        iterations: 12,
        residual: f64::NAN,
    })
}

/// Tanh–sinh on `(0, ∞)` through `x = scale · s / (1 − s)`.
pub fn tanh_sinh_half_line(
    mut f: impl FnMut(f64) -> f64,
    scale: f64,
    tol: f64,
) -> Result<f64> {
    tanh_sinh_unit(
        |s, sc| {
            let x = scale * s / sc;
            if !x.is_finite() {
                return 0.0;
            }
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * (scale / sc) / sc
            }
        },
        tol,
    )
}
