//! Machine-readable records emitted by every command.

use serde::{Deserialize, Serialize};
use sobolev_core::bounds::{BoundReport, LowerMethod, Regime};
use sobolev_core::oracle::{Check, SearchResult};
use sobolev_core::{Error, Execution};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REGIME: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Exit code for a core error: inadmissible input vs numeric failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Regime { .. } | Error::Domain { .. } | Error::Unsupported(_) => EXIT_REGIME,
        _ => EXIT_NUMERIC,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Regime { .. } => "regime",
        Error::Domain { .. } => "domain",
        Error::Unsupported(_) => "unsupported",
        Error::Overflow { .. } => "overflow",
        Error::NonConvergence { .. } => "non_convergence",
        Error::Bracket { .. } => "bracket",
        Error::Resolution { .. } => "resolution",
        Error::Decay { .. } => "decay",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        ErrorInfo {
            kind: error_kind(e).to_string(),
            message: e.to_string(),
            exit_code: exit_code(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub quad_tol: f64,
    pub max_tol: f64,
    pub execution: Execution,
    pub fourier_scan: bool,
}

/// One bound computation (`bound`, `table`, `sweep`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub command: String,
    pub n: f64,
    pub a: f64,
    pub d: u32,
    pub regime: Option<Regime>,
    pub upper: Option<f64>,
    pub upper_weak: Option<f64>,
    pub upper_weak2: Option<f64>,
    pub lower_ground: Option<f64>,
    pub lower_bessel: Option<f64>,
    pub lower_fourier: Option<f64>,
    pub lower: Option<f64>,
    pub method_of_best_lower: Option<LowerMethod>,
    pub exact: Option<bool>,
    pub log2_upper_over_n: Option<f64>,
    pub log2_lower_over_n: Option<f64>,
    pub lambda_star: Option<f64>,
    pub p_star: Option<f64>,
    pub sigma_star: Option<f64>,
    /// Two-decimal bracket (lower rounded down, upper rounded up); `table` only.
    pub lower_2dp: Option<f64>,
    pub upper_2dp: Option<f64>,
    pub settings: Settings,
    pub warnings: Vec<String>,
    pub error: Option<ErrorInfo>,
    /// Only with `--timing`, so default output stays reproducible.
    pub wall_time_s: Option<f64>,
}

impl OutputRecord {
    pub fn from_report(command: &str, r: &BoundReport, settings: Settings) -> Self {
        let q = r.query;
        OutputRecord {
            command: command.to_string(),
            n: q.n(),
            a: q.a(),
            d: q.d(),
            regime: Some(q.regime()),
            upper: Some(r.upper),
            upper_weak: Some(r.upper_weak),
            upper_weak2: r.upper_weak2,
            lower_ground: Some(r.lower_ground),
            lower_bessel: r.lower_bessel,
            lower_fourier: r.lower_fourier,
            lower: Some(r.lower),
            method_of_best_lower: Some(r.method_of_best_lower),
            exact: Some(r.exact),
            log2_upper_over_n: r.log2_upper_over_n,
            log2_lower_over_n: r.log2_lower_over_n,
            lambda_star: r.lambda_star,
            p_star: r.p_star,
            sigma_star: r.sigma_star,
            lower_2dp: None,
            upper_2dp: None,
            settings,
            warnings: r.warnings.clone(),
            error: None,
            wall_time_s: None,
        }
    }

    pub fn from_error(
        command: &str,
        n: f64,
        a: f64,
        d: u32,
        e: &Error,
        settings: Settings,
    ) -> Self {
        OutputRecord {
            command: command.to_string(),
            n,
            a,
            d,
            regime: None,
            upper: None,
            upper_weak: None,
            upper_weak2: None,
            lower_ground: None,
            lower_bessel: None,
            lower_fourier: None,
            lower: None,
            method_of_best_lower: None,
            exact: None,
            log2_upper_over_n: None,
            log2_lower_over_n: None,
            lambda_star: None,
            p_star: None,
            sigma_star: None,
            lower_2dp: None,
            upper_2dp: None,
            settings,
            warnings: Vec::new(),
            error: Some(e.into()),
            wall_time_s: None,
        }
    }

    /// Fills the two-decimal bracket columns.
    pub fn with_rounding(mut self) -> Self {
        self.lower_2dp = self.lower.map(floor_2dp);
        self.upper_2dp = self.upper.map(ceil_2dp);
        self
    }
}

/// Rounds down to two decimals, so a rounded lower bound stays valid.
pub fn floor_2dp(x: f64) -> f64 {
    let v = (x * 100.0).floor();
    // guard against 0.29 * 100 = 28.999999999999996
    let v = if ((v + 1.0) / 100.0) <= x { v + 1.0 } else { v };
    v / 100.0
}

/// Rounds up to two decimals, so a rounded upper bound stays valid.
pub fn ceil_2dp(x: f64) -> f64 {
    let v = (x * 100.0).ceil();
    let v = if ((v - 1.0) / 100.0) >= x { v - 1.0 } else { v };
    v / 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub d: u32,
    pub half_width: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Validate,
    Search,
}

/// Output of the `oracle` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub command: String,
    pub mode: OracleMode,
    pub n: f64,
    pub a: f64,
    pub d: u32,
    pub grid: Option<GridInfo>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub checks: Vec<Check>,
    pub search: Option<SearchResult>,
    pub upper: Option<f64>,
    pub passed: bool,
    pub warnings: Vec<String>,
    pub error: Option<ErrorInfo>,
    pub wall_time_s: Option<f64>,
}
