//! Regimes, lattice coefficients, upper bounds and the certified interval.
//!
//! The upper bound is `S_{a,d} Σ_{ℓ∈Λ(n)} binom₊(n,ℓ) E_{n,ℓ,a,d}`; the
//! ground lower bound is `S_{a,d}` itself. [`best_bounds`] combines them
//! with the Bessel and Fourier lower bounds into a [`BoundReport`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bessel_lb;
use crate::error::{Error, Result};
use crate::fourier_lb::{self, ScanGrid};
use crate::numerics::{DEFAULT_MAX_TOL, DEFAULT_QUAD_TOL};
use crate::par::Execution;
use crate::specfun::{ln_binomial, ln_e_power, ln_gamma};

/// Ratio `16/27` raised to `d/4` is the minimum of the E-coefficients.
const SIXTEEN_27: f64 = 16.0 / 27.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `0 ≤ n ≤ d/2 < a`
    Low,
    /// `n ≥ a > d/2`
    High,
}

/// Classifies `(n, a, d)`; the two regimes never overlap.
pub fn classify_regime(n: f64, a: f64, d: u32) -> Result<Regime> {
    let half_d = d as f64 / 2.0;
    let finite = n.is_finite() && a.is_finite();
    if d >= 1 && finite && n >= 0.0 && n <= half_d && half_d < a {
        Ok(Regime::Low)
    } else if d >= 1 && finite && n >= a && a > half_d {
        Ok(Regime::High)
    } else {
        Err(Error::Regime { n, a, d })
    }
}

/// A validated `(n, a, d)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    n: f64,
    a: f64,
    d: u32,
    regime: Regime,
}

impl BoundQuery {
    pub fn new(n: f64, a: f64, d: u32) -> Result<Self> {
        let regime = classify_regime(n, a, d)?;
        Ok(BoundQuery { n, a, d, regime })
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }
}

/// `n₊`, the least integer `≥ n`.
pub fn n_plus(n: f64) -> u64 {
    n.ceil().max(0.0) as u64
}

fn check_a(func: &'static str, a: f64, d: u32) -> Result<()> {
    if d == 0 || !(a > d as f64 / 2.0) || !a.is_finite() {
        return Err(Error::domain(
            func,
            format!("need a > d/2, got a={a}, d={d}"),
        ));
    }
    Ok(())
}

pub(crate) fn ln_s_const(a: f64, d: u32) -> Result<f64> {
    check_a("s_const", a, d)?;
    let df = d as f64;
    Ok(-(df / 4.0) * (4.0 * PI).ln() + 0.5 * (ln_gamma(a - df / 2.0)? - ln_gamma(a)?))
}

/// `S_{a,d} = (4π)^{-d/4} √(Γ(a-d/2)/Γ(a))`.
pub fn s_const(a: f64, d: u32) -> Result<f64> {
    Ok(ln_s_const(a, d)?.exp())
}

fn ln_e_const(ell: f64, a: f64, d: u32) -> Result<f64> {
    check_a("e_const", a, d)?;
    if !(ell >= 0.0 && ell <= a) {
        return Err(Error::domain(
            "e_const",
            format!("need 0 <= ell <= a, got ell={ell}, a={a}"),
        ));
    }
    if ell == 0.0 || ell == a {
        return Ok(0.0);
    }
    let t = ell / (2.0 * a);
    let num = ln_e_power(t)? + ln_e_power(0.5 - t)?;
    let den = ln_e_power(0.5 + t)? + ln_e_power(1.0 - t)?;
    Ok((d as f64 / 2.0) * (num - den))
}

/// `E_{ℓ,a,d}`; equals 1 at both endpoints and `(16/27)^{d/4}` at `ℓ = a/2`.
pub fn e_const(ell: f64, a: f64, d: u32) -> Result<f64> {
    Ok(ln_e_const(ell, a, d)?.exp())
}

/// A point of the lattice `Λ(n)` with its generalized binomial coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeCoefficient {
    /// Position `j·n/n₊`.
    pub ell: f64,
    /// Index `j`.
    pub j: u64,
    /// `C(n₊, j)`; `None` when it exceeds the `u128` range.
    pub coeff: Option<u128>,
    /// `ln C(n₊, j)`, always available.
    pub ln_coeff: f64,
}

fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// The lattice `Λ(n) = { j n/n₊ : j = 0..n₊ }` with `binom₊(n, ℓ) = C(n₊, j)`.
pub fn lattice_coeffs(n: f64) -> Result<Vec<LatticeCoefficient>> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::domain(
            "lattice_coeffs",
            format!("n = {n} must be non-negative"),
        ));
    }
    let np = n_plus(n);
    let step = if np == 0 { 1.0 } else { n / np as f64 };
    Ok((0..=np)
        .map(|j| LatticeCoefficient {
            ell: if j == np { n } else { j as f64 * step },
            j,
            coeff: binomial_u128(np, j),
            ln_coeff: ln_binomial(np, j),
        })
        .collect())
}

fn ln_e_product_coeff(regime: Regime, n: f64, ell: f64, a: f64, d: u32) -> Result<f64> {
    if !(ell >= 0.0 && ell <= n) {
        return Err(Error::domain(
            "e_product_coeff",
            format!("need 0 <= ell <= n, got ell={ell}, n={n}"),
        ));
    }
    match regime {
        Regime::Low => ln_e_const(ell, a, d),
        Regime::High => {
            if ell < a / 2.0 {
                ln_e_const(ell, a, d)
            } else if ell <= n - a / 2.0 {
                Ok((d as f64 / 4.0) * SIXTEEN_27.ln())
            } else {
                ln_e_const(n - ell, a, d)
            }
        }
    }
}

/// `E_{n,ℓ,a,d}`: the E-coefficient attached to lattice point `ℓ`.
pub fn e_product_coeff(n: f64, ell: f64, a: f64, d: u32) -> Result<f64> {
    let regime = classify_regime(n, a, d)?;
    Ok(ln_e_product_coeff(regime, n, ell, a, d)?.exp())
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Natural log of [`upper_bound`], usable for any `n`.
pub fn ln_upper_bound(n: f64, a: f64, d: u32) -> Result<f64> {
    let regime = classify_regime(n, a, d)?;
    let lattice = lattice_coeffs(n)?;
    let ln_s = ln_s_const(a, d)?;
    if lattice.len() > 51 {
        let terms = lattice
            .iter()
            .map(|p| Ok(p.ln_coeff + ln_e_product_coeff(regime, n, p.ell, a, d)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(ln_s + log_sum_exp(&terms))
    } else {
        let mut sum = 0.0;
        for p in &lattice {
            let c = p.coeff.expect("binomials up to C(50, k) fit in u128") as f64;
            sum += c * ln_e_product_coeff(regime, n, p.ell, a, d)?.exp();
        }
        Ok(ln_s + sum.ln())
    }
}

/// Upper bound `S_{a,d} Σ binom₊(n,ℓ) E_{n,ℓ,a,d}` on `K_{n,a,d}`.
pub fn upper_bound(n: f64, a: f64, d: u32) -> Result<f64> {
    Ok(ln_upper_bound(n, a, d)?.exp())
}

/// `S_{a,d} 2^{n₊}`, valid in both regimes.
pub fn upper_bound_weak(n: f64, a: f64, d: u32) -> Result<f64> {
    classify_regime(n, a, d)?;
    Ok((ln_s_const(a, d)? + n_plus(n) as f64 * 2f64.ln()).exp())
}

/// `a_n = ((n₊/n)(a/2))₊`.
pub fn a_n(n: f64, a: f64) -> u64 {
    let np = n_plus(n);
    let ratio = if n == 0.0 { 1.0 } else { np as f64 / n };
    n_plus(ratio * a / 2.0)
}

/// `u_{n,a,d}`; `None` when `C(n₊, n₊ - a_n + 1)` is undefined.
pub fn u_coeff(n: f64, a: f64, d: u32) -> Option<f64> {
    let np = n_plus(n) as i64;
    let an = a_n(n, a) as i64;
    let k = np - an + 1;
    if k < 0 || k > np {
        return None;
    }
    let ln_term = ln_binomial(np as u64, k as u64) - (np - an) as f64 * 2f64.ln();
    Some(1.0 + ((1.0 / SIXTEEN_27).powf(d as f64 / 4.0) - 1.0) * ln_term.exp())
}

/// `(16/27)^{d/4} S_{a,d} u_{n,a,d} 2^{n₊}` (high regime only).
///
/// Returns `Ok(None)` when `a_n` falls outside the range where the
/// binomial in `u_{n,a,d}` is defined.
pub fn upper_bound_weak2(n: f64, a: f64, d: u32) -> Result<Option<f64>> {
    if classify_regime(n, a, d)? != Regime::High {
        return Err(Error::domain(
            "upper_bound_weak2",
            format!("(n={n}, a={a}, d={d}) is not in the high regime"),
        ));
    }
    Ok(u_coeff(n, a, d).map(|u| {
        ((d as f64 / 4.0) * SIXTEEN_27.ln()
            + ln_s_const(a, d).unwrap()
            + u.ln()
            + n_plus(n) as f64 * 2f64.ln())
        .exp()
    }))
}

/// Ground lower bound `S_{a,d}`.
pub fn ground_lower(a: f64, d: u32) -> Result<f64> {
    s_const(a, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LowerMethod {
    /// `n = 0`: upper and lower bounds coincide.
    Exact,
    Ground,
    Bessel,
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    pub bessel: bool,
    pub fourier: bool,
    /// Also scan the Gaussian parameters around the closed-form choice.
    pub fourier_scan: bool,
    pub quad_tol: f64,
    pub max_tol: f64,
    pub exec: Execution,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            bessel: true,
            fourier: true,
            fourier_scan: false,
            quad_tol: DEFAULT_QUAD_TOL,
            max_tol: DEFAULT_MAX_TOL,
            exec: Execution::default(),
        }
    }
}

/// Certified enclosure `lower ≤ K_{n,a,d} ≤ upper` with per-method detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub query: BoundQuery,
    pub upper: f64,
    pub upper_weak: f64,
    pub upper_weak2: Option<f64>,
    pub lower_ground: f64,
    pub lower_bessel: Option<f64>,
    pub lower_fourier: Option<f64>,
    pub lower: f64,
    pub method_of_best_lower: LowerMethod,
    /// `n = 0`: the constant is known exactly and equals `upper`.
    pub exact: bool,
    pub log2_upper_over_n: Option<f64>,
    pub log2_lower_over_n: Option<f64>,
    /// Maximizing rescaling of the Bessel trial.
    pub lambda_star: Option<f64>,
    /// Gaussian parameters behind `lower_fourier`.
    pub p_star: Option<f64>,
    pub sigma_star: Option<f64>,
    pub warnings: Vec<String>,
}

/// Upper bound and every enabled lower bound for `query`.
///
/// A failure in an optional method leaves its field empty and records a
/// warning; only upper/ground failures abort the report.
pub fn best_bounds(query: &BoundQuery, options: &BoundOptions) -> Result<BoundReport> {
    let (n, a, d) = (query.n, query.a, query.d);
    let ln_upper = ln_upper_bound(n, a, d)?;
    let upper = ln_upper.exp();
    let upper_weak = upper_weak_or_inf(n, a, d)?;
    let upper_weak2 = match query.regime {
        Regime::High => upper_bound_weak2(n, a, d)?,
        Regime::Low => None,
    };
    let ln_ground = ln_s_const(a, d)?;
    let lower_ground = ln_ground.exp();
    let mut warnings = Vec::new();

    let log2_over_n = |ln: f64| {
        if n > 0.0 {
            Some(ln / 2f64.ln() / n)
        } else {
            None
        }
    };

    if n == 0.0 {
        return Ok(BoundReport {
            query: *query,
            upper,
            upper_weak,
            upper_weak2,
            lower_ground,
            lower_bessel: None,
            lower_fourier: None,
            lower: upper,
            method_of_best_lower: LowerMethod::Exact,
            exact: true,
            log2_upper_over_n: None,
            log2_lower_over_n: None,
            lambda_star: None,
            p_star: None,
            sigma_star: None,
            warnings,
        });
    }

    let run_bessel = options.bessel && query.regime == Regime::High;
    let run_fourier = options.fourier && fourier_lb::fourier_applicable(n, a, d);
    let (bessel, fourier) = options.exec.join(
        || {
            run_bessel.then(|| {
                bessel_lb::bessel_lower_with(
                    n,
                    a,
                    d,
                    options.quad_tol,
                    options.max_tol,
                    options.exec,
                )
            })
        },
        || {
            run_fourier.then(|| -> Result<(f64, Option<(f64, f64)>)> {
                let ln_closed = fourier_lb::ln_fourier_lower(n, a, d)?;
                if options.fourier_scan {
                    let scan = fourier_lb::fourier_lower_scan(
                        n,
                        a,
                        d,
                        &ScanGrid::default(),
                        options.exec,
                    )?;
                    if scan.ln_best > ln_closed {
                        return Ok((scan.ln_best, Some((scan.p, scan.sigma))));
                    }
                }
                let (p, s) = fourier_lb::closed_form_parameters(n, a, d);
                Ok((ln_closed, Some((p, s))))
            })
        },
    );

    let mut lower_bessel = None;
    let mut lambda_star = None;
    match bessel {
        Some(Ok(b)) => {
            if b.multimodal {
                warnings.push(format!(
                    "Bessel ratio shows several local maxima; kept the best at lambda={:.6}",
                    b.lambda_star
                ));
            }
            lower_bessel = Some(b.bound);
            lambda_star = Some(b.lambda_star);
        }
        Some(Err(e)) => warnings.push(format!("Bessel lower bound unavailable: {e}")),
        None => {}
    }
    let mut ln_fourier = None;
    let (mut p_star, mut sigma_star) = (None, None);
    match fourier {
        Some(Ok((ln_f, ps))) => {
            ln_fourier = Some(ln_f);
            if let Some((p, s)) = ps {
                p_star = Some(p);
                sigma_star = Some(s);
            }
        }
        Some(Err(e)) => warnings.push(format!("Fourier lower bound unavailable: {e}")),
        None => {}
    }

    let mut ln_lower = ln_ground;
    let mut method = LowerMethod::Ground;
    if let Some(b) = lower_bessel {
        if b.ln() > ln_lower {
            ln_lower = b.ln();
            method = LowerMethod::Bessel;
        }
    }
    if let Some(f) = ln_fourier {
        if f > ln_lower {
            ln_lower = f;
            method = LowerMethod::Fourier;
        }
    }
    if ln_lower > ln_upper {
        warnings.push(format!(
            "lower bound {:e} exceeds upper bound {:e}; numeric inconsistency",
            ln_lower.exp(),
            upper
        ));
    }

    Ok(BoundReport {
        query: *query,
        upper,
        upper_weak,
        upper_weak2,
        lower_ground,
        lower_bessel,
        lower_fourier: ln_fourier.map(f64::exp),
        lower: ln_lower.exp(),
        method_of_best_lower: method,
        exact: false,
        log2_upper_over_n: log2_over_n(ln_upper),
        log2_lower_over_n: log2_over_n(ln_lower),
        lambda_star,
        p_star,
        sigma_star,
        warnings,
    })
}

fn upper_weak_or_inf(n: f64, a: f64, d: u32) -> Result<f64> {
    upper_bound_weak(n, a, d)
}
