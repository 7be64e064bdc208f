//! Lower bounds from Gaussian-regularized characters
//! `f_{p,σ,d}(x) = e^{i p x₁} e^{-σ|x|²/2}`.
//!
//! Since `f_{p,σ}² = f_{2p,2σ}`, bracketing the Gaussian norms from above
//! and below turns the product inequality into an explicit `(p, σ)` bound.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bounds::{classify_regime, Regime};
use crate::error::{Error, Result};
use crate::numerics::{
    integrate_line, integrate_semiline, is_small_integer, NormPath, DEFAULT_QUAD_TOL,
};
use crate::par::Execution;
use crate::specfun::{ln_binomial, ln_e_power, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTrial {
    p: f64,
    sigma: f64,
    d: u32,
}

impl GaussianTrial {
    pub fn new(p: f64, sigma: f64, d: u32) -> Result<Self> {
        if !(p > 0.0 && p.is_finite() && sigma > 0.0 && sigma.is_finite()) || d == 0 {
            return Err(Error::domain(
                "GaussianTrial",
                format!("need p, sigma > 0 and d >= 1, got p={p}, sigma={sigma}, d={d}"),
            ));
        }
        Ok(GaussianTrial { p, sigma, d })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// The trial whose samples are the pointwise square of this one.
    pub fn squared(&self) -> GaussianTrial {
        GaussianTrial {
            p: 2.0 * self.p,
            sigma: 2.0 * self.sigma,
            d: self.d,
        }
    }
}

/// `R_{a,d} = e^{-a/2} (2π)^{-d/4} √(E(d/2) E(a-d/2))`.
pub fn r_const(a: f64, d: u32) -> Result<f64> {
    Ok(ln_r_const(a, d)?.exp())
}

fn ln_r_const(a: f64, d: u32) -> Result<f64> {
    let hd = d as f64 / 2.0;
    if d == 0 || !(a > hd) || !a.is_finite() {
        return Err(Error::domain(
            "r_const",
            format!("need a > d/2, got a={a}, d={d}"),
        ));
    }
    Ok(-a / 2.0 - (d as f64 / 4.0) * (2.0 * PI).ln()
        + 0.5 * (ln_e_power(hd)? + ln_e_power(a - hd)?))
}

/// True when the Gaussian bound applies: high regime, or low regime with `n ≥ 1/2`.
pub fn fourier_applicable(n: f64, a: f64, d: u32) -> bool {
    match classify_regime(n, a, d) {
        Ok(Regime::High) => true,
        Ok(Regime::Low) => n >= 0.5,
        Err(_) => false,
    }
}

fn check_applicable(func: &'static str, n: f64, a: f64, d: u32) -> Result<()> {
    if classify_regime(n, a, d)? == Regime::Low && n < 0.5 {
        return Err(Error::domain(
            func,
            format!("not applicable for n = {n} < 1/2 in the low regime"),
        ));
    }
    Ok(())
}

fn ln_v_coeff_mu(mu: f64, n: f64, a: f64, d: u32) -> f64 {
    let s = n + a;
    let s2 = s * s;
    let base = 1.0 - mu / s + mu * mu * a * n / (s2 * s2);
    let expo = ((2.0 * a - mu) * mu * n + mu * a * a) / (2.0 * s2 - 2.0 * mu * n)
        - mu * a * a / (2.0 * s2 - 2.0 * mu * a);
    (d as f64 / 4.0) * base.ln() + expo
}

/// `v_{n,a,d}` written out for `μ = d/2`.
pub fn v_coeff(n: f64, a: f64, d: u32) -> Result<f64> {
    check_applicable("v_coeff", n, a, d)?;
    let df = d as f64;
    let s = n + a;
    let s2 = s * s;
    let base = 1.0 - df / (2.0 * s) + df * df * a * n / (4.0 * s2 * s2);
    let expo = ((4.0 * a - df) * df * n + 2.0 * df * a * a) / (8.0 * s2 - 4.0 * df * n)
        - df * a * a / (4.0 * s2 - 2.0 * df * a);
    Ok(base.powf(df / 4.0) * expo.exp())
}

/// `v_{μ,n,a,d}` for a general `0 < μ < a`.
pub fn v_coeff_mu(mu: f64, n: f64, a: f64, d: u32) -> Result<f64> {
    check_applicable("v_coeff_mu", n, a, d)?;
    if !(mu > 0.0 && mu < a) {
        return Err(Error::domain(
            "v_coeff_mu",
            format!("need 0 < mu < a, got mu={mu}, a={a}"),
        ));
    }
    Ok(ln_v_coeff_mu(mu, n, a, d).exp())
}

/// `ln` of [`fourier_lower`].
pub fn ln_fourier_lower(n: f64, a: f64, d: u32) -> Result<f64> {
    check_applicable("fourier_lower", n, a, d)?;
    let ln_v = v_coeff(n, a, d)?.ln();
    Ok(ln_r_const(a, d)? + ln_v + n * 2f64.ln() - (a / 2.0 + d as f64 / 4.0) * (n + a).ln())
}

/// `R_{a,d} v_{n,a,d} 2ⁿ / (n+a)^{a/2+d/4}`.
pub fn fourier_lower(n: f64, a: f64, d: u32) -> Result<f64> {
    Ok(ln_fourier_lower(n, a, d)?.exp())
}

/// The weaker form with `v_{n,a,d}` replaced by `(1 - d/(2a))^{d/4}` (high regime).
pub fn fourier_lower_weak(n: f64, a: f64, d: u32) -> Result<f64> {
    if classify_regime(n, a, d)? != Regime::High {
        return Err(Error::domain(
            "fourier_lower_weak",
            format!("(n={n}, a={a}, d={d}) is not in the high regime"),
        ));
    }
    let df = d as f64;
    let ln_v = (df / 4.0) * (1.0 - df / (2.0 * a)).ln();
    Ok((ln_r_const(a, d)? + ln_v + n * 2f64.ln() - (a / 2.0 + df / 4.0) * (n + a).ln()).exp())
}

/// `(p, σ)` for scale parameters `(λ, μ)`: `p = √((n+a)/λ)`, `σ = (μ/λ)/(n+a)`.
pub fn parameters_for(lambda: f64, mu: f64, n: f64, a: f64) -> (f64, f64) {
    (((n + a) / lambda).sqrt(), (mu / lambda) / (n + a))
}

/// `(p, σ)` at `λ = a - d/2`, `μ = d/2`.
pub fn closed_form_parameters(n: f64, a: f64, d: u32) -> (f64, f64) {
    let hd = d as f64 / 2.0;
    parameters_for(a - hd, hd, n, a)
}

/// `ln` of [`fourier_bound_at`].
pub fn ln_fourier_bound_at(p: f64, sigma: f64, n: f64, a: f64, d: u32) -> Result<f64> {
    check_applicable("fourier_bound_at", n, a, d)?;
    GaussianTrial::new(p, sigma, d)?;
    let r = sigma / (p * p);
    if !(n.max(a) * r < 1.0) {
        return Err(Error::domain(
            "fourier_bound_at",
            format!("need max(n, a)·sigma/p² < 1, got {}", n.max(a) * r),
        ));
    }
    let q = d as f64 / 4.0;
    let (un, ua) = (1.0 - n * r, 1.0 - a * r);
    let expo = n * n * r / (2.0 * un) + a * a * r / (2.0 * ua) + (n + a) / (2.0 * p * p);
    Ok(
        -q * (2.0 * PI).ln() + q * (un.ln() + ua.ln()) - expo + q * sigma.ln() - a * p.ln()
            + n * 2f64.ln(),
    )
}

/// Lower bound on `K_{n,a,d}` from the trial `f_{p,σ,d}`, valid for any
/// `p, σ > 0` with `max(n, a) σ/p² < 1`.
pub fn fourier_bound_at(p: f64, sigma: f64, n: f64, a: f64, d: u32) -> Result<f64> {
    Ok(ln_fourier_bound_at(p, sigma, n, a, d)?.exp())
}

/// Grid of multiplicative factors applied to `λ = a - d/2` and `μ = d/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub lambda_factors: Vec<f64>,
    pub mu_factors: Vec<f64>,
}

impl ScanGrid {
    /// `points` log-spaced factors on `[1/span, span]` along each axis.
    pub fn log_spaced(points: usize, span: f64) -> Self {
        let f: Vec<f64> = if points <= 1 {
            vec![1.0]
        } else {
            (0..points)
                .map(|i| span.powf(2.0 * i as f64 / (points - 1) as f64 - 1.0))
                .collect()
        };
        ScanGrid {
            lambda_factors: f.clone(),
            mu_factors: f,
        }
    }

    /// Only the closed-form point.
    pub fn single() -> Self {
        Self::log_spaced(1, 1.0)
    }
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self::log_spaced(21, 4.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierScan {
    pub ln_best: f64,
    pub best: f64,
    pub p: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// Maximizes [`fourier_bound_at`] over the `(λ, μ)` grid.
///
/// `μ` is clamped below `a(1 - 1e-6)`. Ties are broken toward the
/// lexicographically smallest `(p, σ)`, so the result does not depend on
/// evaluation order.
pub fn fourier_lower_scan(
    n: f64,
    a: f64,
    d: u32,
    grid: &ScanGrid,
    exec: Execution,
) -> Result<FourierScan> {
    check_applicable("fourier_lower_scan", n, a, d)?;
    let hd = d as f64 / 2.0;
    let mut points = Vec::with_capacity(grid.lambda_factors.len() * grid.mu_factors.len());
    for &fl in &grid.lambda_factors {
        for &fm in &grid.mu_factors {
            let lambda = (a - hd) * fl;
            let mu = (hd * fm).min(a * (1.0 - 1e-6));
            points.push((lambda, mu));
        }
    }
    if points.is_empty() {
        return Err(Error::domain("fourier_lower_scan", "empty scan grid"));
    }
    let vals = exec.map(&points, |&(lambda, mu)| {
        let (p, sigma) = parameters_for(lambda, mu, n, a);
        ln_fourier_bound_at(p, sigma, n, a, d).map(|v| FourierScan {
            ln_best: v,
            best: v.exp(),
            p,
            sigma,
            lambda,
            mu,
        })
    });
    let mut best: Option<FourierScan> = None;
    for v in vals {
        let v = v?;
        best = Some(match best {
            None => v,
            Some(b) => {
                let better = v.ln_best > b.ln_best
                    || (v.ln_best == b.ln_best
                        && (v.p, v.sigma).partial_cmp(&(b.p, b.sigma))
                            == Some(std::cmp::Ordering::Less));
                if better {
                    v
                } else {
                    b
                }
            }
        });
    }
    Ok(best.expect("non-empty grid"))
}

/// `‖f_{p,σ,d}‖ₙ²` with the default route.
pub fn gaussian_norm_sq(trial: &GaussianTrial, n: f64) -> Result<f64> {
    gaussian_norm_sq_with(trial, n, NormPath::Auto, DEFAULT_QUAD_TOL)
}

/// `‖f_{p,σ,d}‖ₙ² = σ^{-d} ∫ (1 + (k₁+p)² + |k_⊥|²)ⁿ e^{-|k|²/σ} dk`.
///
/// Integer `n` has a finite closed form from expanding the weight and
/// integrating Gaussian moments term by term; every term is positive.
/// Other `n` integrate over `k₁` on the line, with an inner radial integral
/// over `k_⊥` for `d ≥ 2`.
pub fn gaussian_norm_sq_with(
    trial: &GaussianTrial,
    n: f64,
    path: NormPath,
    rel_tol: f64,
) -> Result<f64> {
    let GaussianTrial { p, sigma, d } = *trial;
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::domain(
            "gaussian_norm_sq",
            format!("n = {n} must be non-negative"),
        ));
    }
    let hd = d as f64 / 2.0;
    if n == 0.0 {
        return Ok((PI / sigma).powf(hd));
    }
    let closed = match path {
        NormPath::Auto => is_small_integer(n),
        NormPath::BetaSum => {
            if !is_small_integer(n) {
                return Err(Error::domain(
                    "gaussian_norm_sq",
                    format!("moment sum needs integer n, got {n}"),
                ));
            }
            true
        }
        NormPath::Quadrature => false,
    };
    if closed {
        return Ok(ln_gaussian_moment_sum(p, sigma, d, n as u64)?.exp());
    }
    gaussian_norm_quadrature(p, sigma, d, n, rel_tol)
}

fn ln_gaussian_moment_sum(p: f64, sigma: f64, d: u32, n: u64) -> Result<f64> {
    let m = (d as f64 - 1.0) / 2.0;
    let jmax = if d == 1 { 0 } else { n };
    let mut terms = Vec::new();
    // ∫ (k₁+p)^{2i} e^{-k₁²/σ} dk₁ = Σ_q C(2i,2q) p^{2i-2q} σ^{q+1/2} Γ(q+1/2)
    let ln_line_moment = |i: u64| -> Result<f64> {
        let mut t = Vec::with_capacity(i as usize + 1);
        for q in 0..=i {
            let qf = q as f64;
            t.push(
                ln_binomial(2 * i, 2 * q)
                    + 2.0 * (i - q) as f64 * p.ln()
                    + (qf + 0.5) * sigma.ln()
                    + ln_gamma(qf + 0.5)?,
            );
        }
        Ok(log_sum_exp(&t))
    };
    let line: Vec<f64> = (0..=n).map(ln_line_moment).collect::<Result<_>>()?;
    for j in 0..=jmax {
        // ∫_{R^{d-1}} |k⊥|^{2j} e^{-|k⊥|²/σ} = (πσ)^m σ^j Γ(j+m)/Γ(m)
        let ln_perp = if d == 1 {
            0.0
        } else {
            m * (PI * sigma).ln() + j as f64 * sigma.ln() + ln_gamma(j as f64 + m)? - ln_gamma(m)?
        };
        for i in 0..=(n - j) {
            terms.push(ln_binomial(n, j) + ln_perp + ln_binomial(n - j, i) + line[i as usize]);
        }
    }
    Ok(log_sum_exp(&terms) - d as f64 * sigma.ln())
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn gaussian_norm_quadrature(p: f64, sigma: f64, d: u32, n: f64, rel_tol: f64) -> Result<f64> {
    // k = √σ t:  σ^{-d/2} ∫ (1 + (√σ t₁ + p)² + σ|t⊥|²)ⁿ e^{-|t|²} dt
    let rs = sigma.sqrt();
    let mut failure = None;
    let outer = integrate_line(
        |t1| {
            let c = 1.0 + (rs * t1 + p).powi(2);
            if t1.abs() > 40.0 {
                return 0.0;
            }
            let g = -t1 * t1;
            if d == 1 {
                return (n * c.ln() + g).exp();
            }
            // ∫_{R^{d-1}} (c + σρ²)ⁿ e^{-ρ²} = ω_{d-1} ∫₀^∞ ρ^{d-2} (c + σρ²)ⁿ e^{-ρ²} dρ
            let dm2 = d as f64 - 2.0;
            let inner = integrate_semiline(
                |rho| {
                    if rho > 40.0 || rho == 0.0 && d > 2 {
                        return 0.0;
                    }
                    let lw = if d == 2 { 0.0 } else { dm2 * rho.ln() };
                    (lw + n * (c + sigma * rho * rho).ln() - rho * rho).exp()
                },
                rel_tol,
            );
            if !inner.converged && failure.is_none() {
                failure = Some(Error::non_convergence(
                    "gaussian_norm_sq inner integral",
                    format!("at t1 = {t1}"),
                ));
            }
            let m = (d - 1) as f64;
            let ln_omega = 2f64.ln() + (m / 2.0) * PI.ln() - libm::lgamma(m / 2.0);
            inner.value * (ln_omega + g).exp()
        },
        rel_tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(outer.require("gaussian_norm_sq")? * sigma.powf(-(d as f64) / 2.0))
}

/// `π^{d/2} p^{2n} σ^{-d/2}`, a lower bound on `‖f_{p,σ,d}‖ₙ²` for `n ≥ 1/2`.
pub fn gaussian_norm_lower(trial: &GaussianTrial, n: f64) -> f64 {
    let GaussianTrial { p, sigma, d } = *trial;
    let hd = d as f64 / 2.0;
    (hd * PI.ln() + 2.0 * n * p.ln() - hd * sigma.ln()).exp()
}

/// Upper bound on `‖f_{p,σ,d}‖ₙ²`, valid when `nσ/p² < 1`.
pub fn gaussian_norm_upper(trial: &GaussianTrial, n: f64) -> Result<f64> {
    let GaussianTrial { p, sigma, d } = *trial;
    let r = sigma / (p * p);
    if !(n * r < 1.0) {
        return Err(Error::domain(
            "gaussian_norm_upper",
            format!("need n·sigma/p² < 1, got {}", n * r),
        ));
    }
    let hd = d as f64 / 2.0;
    let u = 1.0 - n * r;
    let expo = n * n * r / u + n / (p * p);
    Ok((hd * PI.ln() + expo - hd * u.ln() + 2.0 * n * p.ln() - hd * sigma.ln()).exp())
}
