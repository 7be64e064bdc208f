//! Rigorous upper bounds and three families of lower bounds for the sharp
//! constants `K_{n,a,d}` of the Sobolev pointwise-product inequalities
//!
//! ```text
//! ‖fg‖ₙ ≤ K ‖f‖ₐ ‖g‖ₙ                              (0 ≤ n ≤ d/2 < a)
//! ‖fg‖ₙ ≤ K max(‖f‖ₐ‖g‖ₙ, ‖f‖ₙ‖g‖ₐ)                (n ≥ a > d/2)
//! ```
//!
//! plus an independent grid/DFT oracle that evaluates the same norms and
//! product ratios numerically.
//!
//! - [`specfun`]: Γ, B, erf, ₂F₁, `K_ν` and the embedding constants.
//! - [`numerics`]: semi-infinite quadrature and scalar maximization.
//! - [`bounds`]: regimes, the lattice coefficients, upper bounds, the ground
//!   lower bound and the aggregated [`bounds::BoundReport`].
//! - [`bessel_lb`]: lower bounds from rescaled Bessel-potential kernels.
//! - [`fourier_lb`]: lower bounds from Gaussian-regularized characters.
//! - [`oracle`]: grid sampling, spectral norms and empirical searches.

pub mod bessel_lb;
pub mod bounds;
pub mod error;
pub mod fourier_lb;
pub mod numerics;
pub mod oracle;
pub mod par;
pub mod specfun;

pub use error::{Error, Result};
pub use par::Execution;
