use thiserror::Error;

/// Errors raised by the bound pipeline.
///
/// Regime and domain errors describe inadmissible inputs; the remaining
/// variants describe numeric failures. Callers (the CLI in particular) map
/// these two families to different exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no regime applies to (n={n}, a={a}, d={d}): need 0 <= n <= d/2 < a or n >= a > d/2")]
    Regime { n: f64, a: f64, d: u32 },

    #[error("{func}: argument out of domain ({detail})")]
    Domain { func: &'static str, detail: String },

    #[error("{func}: result overflows double precision ({detail})")]
    Overflow { func: &'static str, detail: String },

    #[error("{what} did not converge ({detail})")]
    NonConvergence { what: &'static str, detail: String },

    #[error("maximizer could not bracket an interior maximum after {expansions} expansions (last bracket [{lo}, {hi}])")]
    Bracket { expansions: usize, lo: f64, hi: f64 },

    #[error("grid cannot resolve the trial function: {detail}; increase the points per axis or the half-width")]
    Resolution { detail: String },

    #[error("grid function does not decay at the box boundary (boundary/max = {ratio:.3e}); increase the half-width")]
    Decay { ratio: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn non_convergence(what: &'static str, detail: impl Into<String>) -> Self {
        Error::NonConvergence {
            what,
            detail: detail.into(),
        }
    }

    /// True for errors caused by inadmissible parameters rather than numerics.
    pub fn is_regime_error(&self) -> bool {
        matches!(self, Error::Regime { .. } | Error::Domain { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
