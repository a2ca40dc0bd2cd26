//! Numerical building blocks: log-domain arithmetic, special-function
//! wrappers, root finding, one-dimensional optimisation and quadrature.

pub mod optimize;
pub mod quadrature;

use std::f64::consts::{PI, SQRT_2};

pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Stable `ln(sum(exp(values)))`.
///
/// Returns `-inf` for an empty slice or when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Shift log weights by their maximum and exponentiate, then normalise.
///
/// Returns `None` when every weight is `-inf`.
pub fn normalize_log_weights(log_weights: &[f64]) -> Option<Vec<f64>> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let raw: Vec<f64> = log_weights.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = raw.iter().sum();
    Some(raw.into_iter().map(|v| v / total).collect())
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub(crate) fn digamma(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

/// Standard normal cdf.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Standard normal survival function, accurate in the upper tail.
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

pub fn std_normal_quantile(p: f64) -> f64 {
    -SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}

pub fn std_normal_ln_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// Regularized lower incomplete gamma P(a, x).
pub(crate) fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        statrs::function::gamma::gamma_lr(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x).
pub(crate) fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        statrs::function::gamma::gamma_ur(a, x)
    }
}

/// Lower tail probability of Student's t with `dof` degrees of freedom.
pub(crate) fn student_t_cdf(t: f64, dof: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let x = dof / (dof + t * t);
    let tail = 0.5 * statrs::function::beta::beta_reg(0.5 * dof, 0.5, x);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

pub(crate) fn student_t_sf(t: f64, dof: f64) -> f64 {
    student_t_cdf(-t, dof)
}

pub(crate) fn student_t_ln_pdf(t: f64, dof: f64) -> f64 {
    ln_gamma(0.5 * (dof + 1.0))
        - ln_gamma(0.5 * dof)
        - 0.5 * (dof * PI).ln()
        - 0.5 * (dof + 1.0) * (t * t / dof).ln_1p()
}

/// Solve `f(x) = target` for a nondecreasing `f` on `[lo, hi]` by safeguarded
/// Newton iteration. `deriv` returns `f'(x)`; bisection takes over whenever a
/// Newton step would leave the current bracket.
pub(crate) fn invert_monotone<F, D>(f: F, deriv: D, target: f64, mut lo: f64, mut hi: f64, x0: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = x0.clamp(lo, hi);
    for _ in 0..200 {
        let fx = f(x) - target;
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = deriv(x);
        let newton = x - fx / d;
        let next = if d > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            return 0.5 * (lo + hi);
        }
        x = next;
    }
    x
}

/// Bracket for `invert_monotone` on a half-line: doubles `hi` until `f(hi) >= target`.
pub(crate) fn expand_upper<F: Fn(f64) -> f64>(f: &F, target: f64, start: f64) -> f64 {
    let mut hi = start.max(f64::MIN_POSITIVE);
    for _ in 0..2000 {
        if f(hi) >= target {
            return hi;
        }
        hi *= 2.0;
    }
    hi
}

pub(crate) fn expand_lower<F: Fn(f64) -> f64>(f: &F, target: f64, start: f64) -> f64 {
    let mut lo = start.min(-1.0);
    for _ in 0..2000 {
        if f(lo) <= target {
            return lo;
        }
        lo *= 2.0;
    }
    lo
}
