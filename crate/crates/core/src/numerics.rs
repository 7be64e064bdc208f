//! Semi-infinite quadrature and bracketed scalar maximization.
//!
//! Integration uses the tanh-sinh (double exponential) rule. Nodes carry
//! their exact distances to both interval endpoints so integrands with
//! endpoint singularities, and the map `s = t/(1-t)` of `(0, 1)` onto the
//! half line, stay accurate right up to the ends. Intervals that fail to
//! converge at the finest level are bisected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;

/// Default relative tolerance for quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
/// Default relative tolerance on the maximizer location.
pub const DEFAULT_MAX_TOL: f64 = 1e-8;

const MAX_LEVEL: u32 = 8;
const MIN_LEVEL: u32 = 3;
const MAX_DEPTH: u32 = 10;
const T_MAX: f64 = 6.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl QuadratureResult {
    /// Turns a non-converged result into an error.
    pub fn require(self, what: &'static str) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::non_convergence(
                what,
                format!(
                    "value {:e}, error estimate {:e} after {} evaluations",
                    self.value, self.abs_error_estimate, self.evaluations
                ),
            ))
        }
    }
}

/// A quadrature result kept in log space: the integral is `exp(ln_value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogQuadrature {
    pub ln_value: f64,
    pub rel_error_estimate: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl LogQuadrature {
    pub fn require(self, what: &'static str) -> Result<f64> {
        if self.converged && self.ln_value.is_finite() {
            Ok(self.ln_value)
        } else {
            Err(Error::non_convergence(
                what,
                format!(
                    "ln value {:e}, relative error estimate {:e}",
                    self.ln_value, self.rel_error_estimate
                ),
            ))
        }
    }
}

/// One tanh-sinh pass over `[a, b]`.
///
/// `f(x, dl, dr)` receives the node and its distances to `a` and `b`; nodes
/// closer than `min_dist` to an endpoint are skipped.
fn tanh_sinh<F>(
    f: &mut F,
    a: f64,
    b: f64,
    min_dist: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> QuadratureResult
where
    F: FnMut(f64, f64, f64) -> f64,
{
    let half = 0.5 * (b - a);
    let mut evaluations = 0usize;
    let mut node_sum = |t: f64, evaluations: &mut usize| -> Option<f64> {
        let u = std::f64::consts::FRAC_PI_2 * t.abs().sinh();
        let e = (-2.0 * u).exp();
        let near = half * 2.0 * e / (1.0 + e);
        if near < min_dist {
            return Some(0.0);
        }
        let far = 2.0 * half - near;
        let w = half * std::f64::consts::FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        if w == 0.0 {
            return Some(0.0);
        }
        let (x, dl, dr) = if t >= 0.0 {
            (b - near, far, near)
        } else {
            (a + near, near, far)
        };
        *evaluations += 1;
        let v = f(x, dl, dr);
        if v.is_finite() {
            Some(w * v)
        } else {
            None
        }
    };

    let fail = |evaluations| QuadratureResult {
        value: f64::NAN,
        abs_error_estimate: f64::INFINITY,
        converged: false,
        evaluations,
    };

    // level 0: integer nodes
    let k_max = T_MAX as i64;
    let mut sum = 0.0;
    for k in -k_max..=k_max {
        match node_sum(k as f64, &mut evaluations) {
            Some(v) => sum += v,
            None => return fail(evaluations),
        }
    }
    let mut h = 1.0;
    let mut estimate = sum * h;
    let mut err = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut t = h;
        let mut add = 0.0;
        while t <= T_MAX {
            for tt in [t, -t] {
                match node_sum(tt, &mut evaluations) {
                    Some(v) => add += v,
                    None => return fail(evaluations),
                }
            }
            t += 2.0 * h;
        }
        sum += add;
        let next = sum * h;
        err = (next - estimate).abs();
        estimate = next;
        if level >= MIN_LEVEL && (err <= rel_tol * estimate.abs() || err <= abs_tol) {
            return QuadratureResult {
                value: estimate,
                abs_error_estimate: err,
                converged: true,
                evaluations,
            };
        }
    }
    QuadratureResult {
        value: estimate,
        abs_error_estimate: err,
        converged: false,
        evaluations,
    }
}

/// Adaptive driver: tanh-sinh on `[a, b]`, bisecting on failure.
///
/// `offset_left`/`offset_right` are the distances from `a`/`b` to the ends
/// of the original interval, so `f` always sees distances to those ends.
#[allow(clippy::too_many_arguments)]
fn adaptive<F>(
    f: &mut F,
    a: f64,
    b: f64,
    offset_left: f64,
    offset_right: f64,
    min_dist: f64,
    rel_tol: f64,
    abs_tol: f64,
    depth: u32,
) -> QuadratureResult
where
    F: FnMut(f64, f64, f64) -> f64,
{
    let mut g = |x: f64, dl: f64, dr: f64| f(x, offset_left + dl, offset_right + dr);
    let md = if offset_left == 0.0 || offset_right == 0.0 {
        min_dist
    } else {
        0.0
    };
    let whole = tanh_sinh(&mut g, a, b, md, rel_tol, abs_tol);
    if whole.converged || depth >= MAX_DEPTH || !whole.value.is_finite() {
        return whole;
    }
    let mid = 0.5 * (a + b);
    let half_len = 0.5 * (b - a);
    let abs_tol = if abs_tol > 0.0 {
        0.5 * abs_tol
    } else {
        0.5 * rel_tol * whole.value.abs()
    };
    let left = adaptive(
        f,
        a,
        mid,
        offset_left,
        offset_right + half_len,
        min_dist,
        rel_tol,
        abs_tol,
        depth + 1,
    );
    let right = adaptive(
        f,
        mid,
        b,
        offset_left + half_len,
        offset_right,
        min_dist,
        rel_tol,
        abs_tol,
        depth + 1,
    );
    let value = left.value + right.value;
    let abs_error_estimate = left.abs_error_estimate + right.abs_error_estimate;
    QuadratureResult {
        value,
        abs_error_estimate,
        converged: left.converged && right.converged,
        evaluations: whole.evaluations + left.evaluations + right.evaluations,
    }
}

/// Integrates `f(x, dist_to_a, dist_to_b)` over the finite interval `[a, b]`.
///
/// The distances are exact even next to the endpoints; use them to
/// evaluate factors like `(b - x)^p` without cancellation.
pub fn integrate_finite_with_distances<F>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> QuadratureResult
where
    F: FnMut(f64, f64, f64) -> f64,
{
    let scale = (b - a).abs().max(f64::MIN_POSITIVE);
    let mut r = adaptive(&mut f, a, b, 0.0, 0.0, 1e-300 * scale, rel_tol, 0.0, 0);
    r.abs_error_estimate = r.abs_error_estimate.max(0.0);
    r
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate_finite<F>(mut f: F, a: f64, b: f64, rel_tol: f64) -> QuadratureResult
where
    F: FnMut(f64) -> f64,
{
    integrate_finite_with_distances(|x, _, _| f(x), a, b, rel_tol)
}

/// Integrates `f` over `(0, ∞)` through the map `s = t/(1-t)`.
///
/// Handles integrable endpoint singularities at `s = 0` and polynomially
/// decaying tails. Non-convergence is reported in the result, never hidden.
pub fn integrate_semiline<F>(mut f: F, rel_tol: f64) -> QuadratureResult
where
    F: FnMut(f64) -> f64,
{
    let mut g = |_t: f64, dl: f64, dr: f64| {
        let s = dl / dr;
        let v = f(s) * (1.0 + s);
        v * (1.0 + s)
    };
    adaptive(&mut g, 0.0, 1.0, 0.0, 0.0, 1e-150, rel_tol, 0.0, 0)
}

/// Integrates `f` over the whole real line.
pub fn integrate_line<F>(mut f: F, rel_tol: f64) -> QuadratureResult
where
    F: FnMut(f64) -> f64,
{
    let right = integrate_semiline(&mut f, rel_tol);
    let left = integrate_semiline(|s| f(-s), rel_tol);
    QuadratureResult {
        value: left.value + right.value,
        abs_error_estimate: left.abs_error_estimate + right.abs_error_estimate,
        converged: left.converged && right.converged,
        evaluations: left.evaluations + right.evaluations,
    }
}

/// Integrates `exp(ln_f(s))` over `(0, ∞)` and returns the log of the result.
///
/// The integrand is rescaled by its maximum over a log-spaced probe grid, so
/// integrands whose magnitude is far outside the double range still work.
pub fn integrate_semiline_log<F>(mut ln_f: F, rel_tol: f64) -> LogQuadrature
where
    F: FnMut(f64) -> f64,
{
    let mut shift = f64::NEG_INFINITY;
    for i in 0..=64 {
        let s = 10f64.powf(-8.0 + 16.0 * i as f64 / 64.0);
        let v = ln_f(s);
        if v.is_finite() && v > shift {
            shift = v;
        }
    }
    if !shift.is_finite() {
        return LogQuadrature {
            ln_value: f64::NAN,
            rel_error_estimate: f64::INFINITY,
            converged: false,
            evaluations: 65,
        };
    }
    let r = integrate_semiline(
        |s| {
            let v = ln_f(s);
            if v == f64::NEG_INFINITY {
                0.0
            } else {
                (v - shift).exp()
            }
        },
        rel_tol,
    );
    let ok = r.converged && r.value > 0.0;
    LogQuadrature {
        ln_value: if r.value > 0.0 {
            shift + r.value.ln()
        } else {
            f64::NAN
        },
        rel_error_estimate: if r.value > 0.0 {
            r.abs_error_estimate / r.value
        } else {
            f64::INFINITY
        },
        converged: ok,
        evaluations: r.evaluations + 65,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximizerResult {
    pub argmax: f64,
    pub max_value: f64,
    /// Final golden-section bracket around `argmax`.
    pub bracket: (f64, f64),
    pub converged: bool,
    pub evaluations: usize,
    /// Number of bracket expansions performed before the interior maximum was found.
    pub expansions: usize,
    /// Strict local maxima seen on the coarse pre-scan; more than one means
    /// the objective may not be unimodal on the bracket.
    pub local_maxima: usize,
}

impl MaximizerResult {
    pub fn is_multimodal(&self) -> bool {
        self.local_maxima > 1
    }
}

const SCAN_POINTS: usize = 25;
const MAX_EXPANSIONS: usize = 40;

/// Maximizes a fallible objective on `(0, ∞)` starting from `initial_bracket`.
///
/// A coarse log-spaced scan locates the best grid point; while it sits on an
/// edge the bracket is widened (`hi` doubled or `lo` halved). Golden-section
/// search then refines between the grid neighbours of the best point until
/// the bracket width is below `rel_tol · argmax`.
pub fn try_maximize_scalar<F>(
    f: F,
    initial_bracket: (f64, f64),
    rel_tol: f64,
    exec: Execution,
) -> Result<MaximizerResult>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    let (mut lo, mut hi) = initial_bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::domain(
            "maximize_scalar",
            format!("bracket must satisfy 0 < lo < hi, got ({lo}, {hi})"),
        ));
    }
    let mut evaluations = 0usize;
    let mut expansions = 0usize;
    let (xs, vals, best) = loop {
        let ratio = (hi / lo).ln();
        let xs: Vec<f64> = (0..SCAN_POINTS)
            .map(|i| lo * (ratio * i as f64 / (SCAN_POINTS - 1) as f64).exp())
            .collect();
        let vals = exec.map(&xs, |&x| f(x));
        evaluations += SCAN_POINTS;
        let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
        let mut best = 0;
        for (i, v) in vals.iter().enumerate() {
            if v.is_nan() {
                return Err(Error::non_convergence(
                    "maximize_scalar",
                    format!("objective is NaN at {}", xs[i]),
                ));
            }
            if *v > vals[best] {
                best = i;
            }
        }
        if best != 0 && best != SCAN_POINTS - 1 {
            break (xs, vals, best);
        }
        if expansions >= MAX_EXPANSIONS {
            return Err(Error::Bracket { expansions, lo, hi });
        }
        expansions += 1;
        if best == 0 {
            lo *= 0.5;
        } else {
            hi *= 2.0;
        }
    };

    let local_maxima = (1..SCAN_POINTS - 1)
        .filter(|&i| vals[i] > vals[i - 1] && vals[i] > vals[i + 1])
        .count();

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (xs[best - 1], xs[best + 1]);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    evaluations += 2;
    let mut converged = false;
    for _ in 0..300 {
        if (b - a) <= rel_tol * 0.5 * (a + b) {
            converged = true;
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
    }
    let mut argmax = 0.5 * (a + b);
    let mut max_value = f(argmax)?;
    evaluations += 1;
    // keep the best point seen if the midpoint is numerically worse
    for (x, v) in [(c, fc), (d, fd), (xs[best], vals[best])] {
        if v > max_value && x >= a && x <= b {
            argmax = x;
            max_value = v;
        }
    }
    Ok(MaximizerResult {
        argmax,
        max_value,
        bracket: (a, b),
        converged,
        evaluations,
        expansions,
        local_maxima: local_maxima.max(1),
    })
}

/// Infallible convenience wrapper around [`try_maximize_scalar`].
pub fn maximize_scalar<F>(
    f: F,
    initial_bracket: (f64, f64),
    rel_tol: f64,
) -> Result<MaximizerResult>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    try_maximize_scalar(
        |x| Ok(f(x)),
        initial_bracket,
        rel_tol,
        Execution::Sequential,
    )
}

/// Which evaluation route a norm computation takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormPath {
    /// Closed form when the order is an integer, quadrature otherwise.
    #[default]
    Auto,
    Quadrature,
    /// Finite sum (Beta functions or Gaussian moments); integer orders only.
    BetaSum,
}

/// True for integers in `[0, 1e15)`, which index finite closed-form sums.
pub(crate) fn is_small_integer(x: f64) -> bool {
    x.fract() == 0.0 && (0.0..1e15).contains(&x)
}

/// `ln(1 + x^2)` without overflow for huge `x`.
pub(crate) fn ln1p_sq(x: f64) -> f64 {
    let ax = x.abs();
    if ax > 1e150 {
        2.0 * ax.ln()
    } else {
        (ax * ax).ln_1p()
    }
}
