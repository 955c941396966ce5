//! Spatial random fields with arbitrary marginal distributions whose
//! dependence comes from a Clayton-like spatial copula.
//!
//! The crate covers the full workflow:
//!
//! * [`specfun`] — the hypergeometric machinery (₂F₁, Appell F₄,
//!   Kampé de Fériet, Bessel I, incomplete beta and its inverse);
//! * [`correlation`] — Generalized Wendland and exponential underlying
//!   correlation models, nugget, correlation matrices, Cholesky;
//! * [`fields`] — exact seeded simulation of the Gaussian → Gamma → beta →
//!   Clayton hierarchy and quantile transformation to target marginals;
//! * [`copula`] — closed-form bivariate densities, cdf, correlation
//!   functions and rank-based dependence measures;
//! * [`inference`] — nearest-neighbor weighted pairwise composite
//!   likelihood, bootstrap Godambe standard errors and PLIC model selection;
//! * [`diagnostics`] — NDVI, normal scores, empirical and theoretical
//!   semivariograms.

pub mod copula;
pub mod correlation;
pub mod diagnostics;
pub mod fields;
pub mod inference;
pub mod optim;
pub mod quad;
pub mod specfun;
