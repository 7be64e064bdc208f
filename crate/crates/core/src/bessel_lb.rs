//! Lower bounds from rescaled Bessel-potential kernels.
//!
//! The trial function is `f_{λ,n,d}(x) = f_{n,d}(λx)` with
//! `f_{n,d}(x) = |x|^{n-d/2} K_{n-d/2}(|x|) / (2^{n-1} Γ(n))`, whose Fourier
//! transform is `(2π)^{-d/2} (1+|k|²)^{-n}`. Taking `f = g` in the
//! product inequality gives `K ≥ ‖f²‖ₙ / (‖f‖ₐ ‖f‖ₙ)` for every `λ > 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bounds::{classify_regime, Regime};
use crate::error::{Error, Result};
pub use crate::numerics::NormPath;
use crate::numerics::{
    integrate_semiline, integrate_semiline_log, is_small_integer, ln1p_sq, try_maximize_scalar,
    DEFAULT_MAX_TOL, DEFAULT_QUAD_TOL,
};
use crate::par::Execution;
use crate::specfun::{bessel_k, hyp2f1_parts, ln_beta, ln_binomial, ln_gamma};

/// Initial λ bracket for the maximizer.
pub const LAMBDA_BRACKET: (f64, f64) = (0.2, 5.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselTrial {
    lambda: f64,
    n: f64,
    d: u32,
}

impl BesselTrial {
    pub fn new(lambda: f64, n: f64, d: u32) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(
                "BesselTrial",
                format!("lambda = {lambda} must be positive"),
            ));
        }
        if d == 0 || !(n > d as f64 / 2.0) || !n.is_finite() {
            return Err(Error::domain(
                "BesselTrial",
                format!("need n > d/2, got n={n}, d={d}"),
            ));
        }
        Ok(BesselTrial { lambda, n, d })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// `f_{λ,n,d}` at radius `r ≥ 0`.
    pub fn value_at(&self, r: f64) -> Result<f64> {
        let nu = self.n - self.d as f64 / 2.0;
        let x = self.lambda * r.abs();
        let ln_norm = (self.n - 1.0) * 2f64.ln() + ln_gamma(self.n)?;
        if x == 0.0 {
            return Ok(
                (ln_gamma(nu)? - (self.d as f64 / 2.0) * 2f64.ln() - ln_gamma(self.n)?).exp(),
            );
        }
        if x > 700.0 {
            return Ok(0.0);
        }
        Ok(x.powf(nu) * bessel_k(nu, x)? / ln_norm.exp())
    }
}

/// `ln(2π^{d/2} / (Γ(d/2) λ^d))`, the radial prefactor.
fn ln_radial_prefactor(lambda: f64, d: u32) -> Result<f64> {
    let hd = d as f64 / 2.0;
    Ok(2f64.ln() + hd * PI.ln() - ln_gamma(hd)? - d as f64 * lambda.ln())
}

/// `ln ‖f_{λ,n,d}‖_e²` for `d/2 < e ≤ n`.
pub fn ln_bessel_norm_sq(
    trial: &BesselTrial,
    order: f64,
    path: NormPath,
    rel_tol: f64,
) -> Result<f64> {
    let BesselTrial { lambda, n, d } = *trial;
    let hd = d as f64 / 2.0;
    if !(order > hd && order <= n) {
        return Err(Error::domain(
            "bessel_norm",
            format!("need d/2 < order <= n, got order={order}, n={n}, d={d}"),
        ));
    }
    let use_sum = match path {
        NormPath::Auto => is_small_integer(order),
        NormPath::BetaSum => {
            if !is_small_integer(order) {
                return Err(Error::domain(
                    "bessel_norm",
                    format!("Beta sum needs an integer order, got {order}"),
                ));
            }
            true
        }
        NormPath::Quadrature => false,
    };
    let ln_pre = ln_radial_prefactor(lambda, d)?;
    if use_sum {
        // ∫ s^{d-1+2ℓ}/(1+s²)^{2n} ds = B(ℓ+d/2, 2n-d/2-ℓ)/2
        let e = order as u64;
        let terms = (0..=e)
            .map(|l| {
                let lf = l as f64;
                Ok(ln_binomial(e, l)
                    + ln_beta(lf + hd, 2.0 * n - hd - lf)?
                    + 2.0 * lf * lambda.ln())
            })
            .collect::<Result<Vec<_>>>()?;
        let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = terms.iter().map(|t| (t - m).exp()).sum();
        return Ok(ln_pre - 2f64.ln() + m + sum.ln());
    }
    let dm1 = d as f64 - 1.0;
    let ln_int = integrate_semiline_log(
        |s| {
            if s == 0.0 {
                return if d == 1 { 0.0 } else { f64::NEG_INFINITY };
            }
            dm1 * s.ln() + order * ln1p_sq(lambda * s) - 2.0 * n * ln1p_sq(s)
        },
        rel_tol,
    )
    .require("Bessel trial norm")?;
    Ok(ln_pre + ln_int)
}

/// `‖f_{λ,n,d}‖ₙ²`.
pub fn bessel_norm_n_sq(trial: &BesselTrial) -> Result<f64> {
    Ok(ln_bessel_norm_sq(trial, trial.n, NormPath::Auto, DEFAULT_QUAD_TOL)?.exp())
}

/// `‖f_{λ,n,d}‖ₐ²` for `n ≥ a > d/2`.
pub fn bessel_norm_a_sq(trial: &BesselTrial, a: f64) -> Result<f64> {
    Ok(ln_bessel_norm_sq(trial, a, NormPath::Auto, DEFAULT_QUAD_TOL)?.exp())
}

/// `ln ₂F₁(2n-d/2, n; n+1/2; -s²)`.
fn ln_square_kernel(n: f64, d: u32, s: f64) -> Result<f64> {
    let (inner, ln_pre) = hyp2f1_parts(2.0 * n - d as f64 / 2.0, n, n + 0.5, -(s * s))?;
    if !(inner > 0.0) {
        return Err(Error::non_convergence(
            "Bessel square kernel",
            format!("non-positive 2F1 at s={s}"),
        ));
    }
    Ok(inner.ln() + ln_pre)
}

/// `ln ‖f²_{λ,n,d}‖ₙ²`.
///
/// The Fourier transform of `f²` is a Gauss hypergeometric function in
/// `-|k|²/(4λ²)`; after rescaling the norm is a one-dimensional radial
/// integral over `s` with integrand `s^{d-1}(1+4λ²s²)ⁿ F(2n-d/2, n; n+1/2; -s²)²`.
pub fn ln_bessel_square_norm_sq(trial: &BesselTrial, rel_tol: f64) -> Result<f64> {
    let BesselTrial { lambda, n, d } = *trial;
    let hd = d as f64 / 2.0;
    if s_overflows(n) {
        return Err(Error::Unsupported(format!("square norm for n = {n}")));
    }
    let ln_pre =
        ln_radial_prefactor(lambda, d)? + 2.0 * (ln_gamma(2.0 * n - hd)? - ln_gamma(2.0 * n)?);
    let dm1 = d as f64 - 1.0;
    let failure = std::cell::RefCell::new(None);
    let r = integrate_semiline_log(
        |s| {
            if s == 0.0 {
                return if d == 1 { 0.0 } else { f64::NEG_INFINITY };
            }
            if s > 1e150 {
                return f64::NEG_INFINITY;
            }
            match ln_square_kernel(n, d, s) {
                Ok(lf) => dm1 * s.ln() + n * ln1p_sq(2.0 * lambda * s) + 2.0 * lf,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        },
        rel_tol,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(ln_pre + r.require("Bessel square norm")?)
}

fn s_overflows(n: f64) -> bool {
    // Γ(2n) stays finite well past any order the bounds are used for
    !(n < 1e6)
}

/// `‖f²_{λ,n,d}‖ₙ²`.
pub fn bessel_square_norm_sq(trial: &BesselTrial) -> Result<f64> {
    Ok(ln_bessel_square_norm_sq(trial, DEFAULT_QUAD_TOL)?.exp())
}

/// `‖f²‖ₙ²` from the elementary closed forms available for the worked cases
/// `(n, d) ∈ {(1, 1), (2, 2), (2, 3)}`.
///
/// `(1, 1)` and `(2, 3)` are rational in `λ`. For `(2, 2)` the kernel
/// `F(3, 2; 5/2; -s²)` is written with `arcsinh` and the radial integral is
/// done by quadrature. Other cases return `None`.
pub fn square_norm_closed_form(trial: &BesselTrial) -> Option<f64> {
    let l = trial.lambda;
    match (trial.n, trial.d) {
        (n, 1) if n == 1.0 => Some(PI * PI / 4.0 * (2.0 * l + 1.0 / (2.0 * l))),
        (n, 3) if n == 2.0 => {
            Some(PI.powi(3) / 64.0 * (10.0 * l + 1.0 / l + 1.0 / (8.0 * l.powi(3))))
        }
        (n, 2) if n == 2.0 => {
            // (2π/λ²) Γ(3)²/Γ(4)² ∫ s (1+4λ²s²)² F² ds with Γ(3)/Γ(4) = 1/3
            let r = integrate_semiline(
                |s| {
                    // the integrand decays like s^{-3} ln²s; past 1e30 it is negligible
                    if s == 0.0 || s > 1e30 {
                        return 0.0;
                    }
                    let f = arcsinh_kernel(s);
                    s * (1.0 + 4.0 * l * l * s * s).powi(2) * f * f
                },
                1e-12,
            );
            r.converged.then(|| 2.0 * PI / (l * l) / 9.0 * r.value)
        }
        _ => None,
    }
}

/// `F(3, 2; 5/2; -s²)` in closed form.
fn arcsinh_kernel(s: f64) -> f64 {
    let s2 = s * s;
    if s < 0.5 {
        // the closed form cancels badly for small s; sum the series instead
        let (mut term, mut sum) = (1.0, 1.0);
        for k in 0..60 {
            let kf = k as f64;
            term *= -(3.0 + kf) * (2.0 + kf) / ((2.5 + kf) * (kf + 1.0)) * s2;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    let q = 1.0 + s2;
    3.0 * (2.0 * s2 - 1.0) / (16.0 * s2 * q * q)
        + 3.0 * (1.0 + 4.0 * s2) / (16.0 * s2 * s * q.powf(2.5)) * s.asinh()
}

/// `ln` of the ratio `‖f²‖ₙ / (‖f‖ₐ ‖f‖ₙ)` at rescaling `λ`.
pub fn ln_bessel_ratio(lambda: f64, n: f64, a: f64, d: u32, rel_tol: f64) -> Result<f64> {
    check_high("bessel_ratio", n, a, d)?;
    let t = BesselTrial::new(lambda, n, d)?;
    let sq = ln_bessel_square_norm_sq(&t, rel_tol)?;
    let nn = ln_bessel_norm_sq(&t, n, NormPath::Auto, rel_tol)?;
    let na = if a == n {
        nn
    } else {
        ln_bessel_norm_sq(&t, a, NormPath::Auto, rel_tol)?
    };
    Ok(0.5 * (sq - nn - na))
}

/// `‖f²_{λ,n,d}‖ₙ / (‖f_{λ,n,d}‖ₐ ‖f_{λ,n,d}‖ₙ)`.
pub fn bessel_ratio(lambda: f64, n: f64, a: f64, d: u32) -> Result<f64> {
    Ok(ln_bessel_ratio(lambda, n, a, d, DEFAULT_QUAD_TOL)?.exp())
}

fn check_high(func: &'static str, n: f64, a: f64, d: u32) -> Result<()> {
    match classify_regime(n, a, d)? {
        Regime::High => Ok(()),
        Regime::Low => Err(Error::domain(
            func,
            format!("(n={n}, a={a}, d={d}) is not in the high regime"),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselLower {
    pub bound: f64,
    pub lambda_star: f64,
    /// The coarse λ scan found more than one local maximum.
    pub multimodal: bool,
    /// Number of times the initial λ bracket had to be widened.
    pub expansions: usize,
    pub evaluations: usize,
}

/// `sup_λ ‖f²‖ₙ / (‖f‖ₐ ‖f‖ₙ)`, a lower bound on `K_{n,a,d}` in the high regime.
pub fn bessel_lower(n: f64, a: f64, d: u32) -> Result<BesselLower> {
    bessel_lower_with(
        n,
        a,
        d,
        DEFAULT_QUAD_TOL,
        DEFAULT_MAX_TOL,
        Execution::default(),
    )
}

pub fn bessel_lower_with(
    n: f64,
    a: f64,
    d: u32,
    quad_tol: f64,
    max_tol: f64,
    exec: Execution,
) -> Result<BesselLower> {
    check_high("bessel_lower", n, a, d)?;
    let m = try_maximize_scalar(
        |l| ln_bessel_ratio(l, n, a, d, quad_tol),
        LAMBDA_BRACKET,
        max_tol,
        exec,
    )?;
    Ok(BesselLower {
        bound: m.max_value.exp(),
        lambda_star: m.argmax,
        multimodal: m.is_multimodal(),
        expansions: m.expansions,
        evaluations: m.evaluations,
    })
}
