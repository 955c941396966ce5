//! Parametric underlying-correlation models, the nugget extension, pairwise
//! correlation matrices and their Cholesky factorization for exact
//! simulation.

use crate::specfun::{gauss_2f1, ln_gamma_sign, SeriesControl};
use ndarray::Array2;
use statrs::function::gamma::ln_gamma;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationError {
    /// Parameter combination violates a model invariant.
    InvalidModel(String),
    /// Matrix is not numerically positive definite even after jitter;
    /// carries the 1-based index of the failing leading minor.
    NotPositiveDefinite { leading_minor: usize },
    /// Site configuration problem (dimension mismatch, empty, ...).
    InvalidConfig(String),
}

impl fmt::Display for CorrelationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrelationError::InvalidModel(msg) => write!(f, "invalid correlation model: {msg}"),
            CorrelationError::NotPositiveDefinite { leading_minor } => write!(
                f,
                "matrix not positive definite: leading minor of order {leading_minor} failed even with maximum jitter"
            ),
            CorrelationError::InvalidConfig(msg) => write!(f, "invalid spatial configuration: {msg}"),
        }
    }
}

impl std::error::Error for CorrelationError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationFamily {
    GeneralizedWendland,
    Exponential,
}

/// An isotropic correlation model ρ(h) with compact-support or exponential
/// decay, plus a nugget proportion τ².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationModel {
    pub family: CorrelationFamily,
    /// Generalized Wendland smoothness δ ≥ 0.
    pub delta: f64,
    /// Generalized Wendland shape μ.
    pub mu_gw: f64,
    /// Compact support / range b > 0, in coordinate units.
    pub b: f64,
    /// Nugget τ² in [0, 1].
    pub tau2: f64,
}

impl CorrelationModel {
    /// Generalized Wendland model GW_{δ,μ,b}; `dim` is the spatial dimension,
    /// entering the positive-definiteness condition μ ≥ (d+1)/2 + δ.
    pub fn generalized_wendland(
        delta: f64,
        mu: f64,
        b: f64,
        tau2: f64,
        dim: usize,
    ) -> Result<Self, CorrelationError> {
        if delta < 0.0 {
            return Err(CorrelationError::InvalidModel(format!("delta = {delta} < 0")));
        }
        let mu_min = 0.5 * (dim as f64 + 1.0) + delta;
        if mu < mu_min {
            return Err(CorrelationError::InvalidModel(format!(
                "mu = {mu} violates mu >= (d+1)/2 + delta = {mu_min} for d = {dim}"
            )));
        }
        Self::check_common(b, tau2)?;
        Ok(CorrelationModel {
            family: CorrelationFamily::GeneralizedWendland,
            delta,
            mu_gw: mu,
            b,
            tau2,
        })
    }

    /// Exponential model exp(-h/b), kept around for tests and benchmarks.
    pub fn exponential(b: f64, tau2: f64) -> Result<Self, CorrelationError> {
        Self::check_common(b, tau2)?;
        Ok(CorrelationModel {
            family: CorrelationFamily::Exponential,
            delta: 0.0,
            mu_gw: 0.0,
            b,
            tau2,
        })
    }

    fn check_common(b: f64, tau2: f64) -> Result<(), CorrelationError> {
        if !(b > 0.0) {
            return Err(CorrelationError::InvalidModel(format!("b = {b} must be positive")));
        }
        if !(0.0..=1.0).contains(&tau2) {
            return Err(CorrelationError::InvalidModel(format!(
                "tau2 = {tau2} outside [0, 1]"
            )));
        }
        Ok(())
    }

    /// Underlying correlation ρ(h) at distance `dist`, without the nugget.
    pub fn corr(&self, dist: f64) -> f64 {
        match self.family {
            CorrelationFamily::GeneralizedWendland => gw_corr(dist, self),
            CorrelationFamily::Exponential => (-dist / self.b).exp(),
        }
    }

    /// ρ*(h) including the nugget.
    pub fn corr_nugget(&self, dist: f64, is_zero_lag: bool) -> f64 {
        corr_with_nugget(self.corr(dist), self.tau2, is_zero_lag)
    }

    /// A copy with a different range, the shape left alone. Used by the
    /// optimizer, which profiles over b.
    pub fn with_range(&self, b: f64) -> Self {
        CorrelationModel { b, ..*self }
    }

    /// A copy with a different nugget.
    pub fn with_tau2(&self, tau2: f64) -> Self {
        CorrelationModel { tau2, ..*self }
    }
}

/// Generalized Wendland correlation at distance `dist`.
///
/// The δ = 0 branch is the closed form (1 − h/b)^μ (the Askey model),
/// avoiding the δ → 0 singularity of the normalizing constant. For δ > 0 the
/// hypergeometric form K (1−t²)^{δ+μ} ₂F₁(μ/2, (μ+1)/2; δ+μ+1; 1−t²) is
/// used; near zero lag, where the ₂F₁ argument approaches one, the series is
/// routed through the 1−x connection formula.
pub fn gw_corr(dist: f64, model: &CorrelationModel) -> f64 {
    debug_assert!(dist >= 0.0);
    let t = dist / model.b;
    if t >= 1.0 {
        return 0.0;
    }
    if dist == 0.0 {
        return 1.0;
    }
    if model.delta == 0.0 {
        return (1.0 - t).powf(model.mu_gw);
    }
    let delta = model.delta;
    let mu = model.mu_gw;
    let x = 1.0 - t * t;
    let ln_k = ln_gamma(delta) + ln_gamma(2.0 * delta + mu + 1.0)
        - ln_gamma(2.0 * delta)
        - ln_gamma(delta + mu + 1.0)
        - (mu + 1.0) * std::f64::consts::LN_2;
    let a = mu / 2.0;
    let bb = (mu + 1.0) / 2.0;
    let c = delta + mu + 1.0;
    let f = hyp2f1_near_unit(a, bb, c, x);
    (ln_k.exp() * x.powf(delta + mu) * f).clamp(0.0, 1.0)
}

/// ₂F₁(a, b; c; x) for x possibly close to 1, with c − a − b > 0.
fn hyp2f1_near_unit(a: f64, b: f64, c: f64, x: f64) -> f64 {
    let ctrl = SeriesControl::default();
    if x <= 0.75 {
        return gauss_2f1(a, b, c, x, &ctrl).expect("2F1 converges for x <= 0.75");
    }
    let mut s = c - a - b;
    // the connection formula degenerates when c - a - b is an integer;
    // a tiny nudge stands in for the logarithmic limiting case
    if (s - s.round()).abs() < 1e-9 {
        s += 1e-9;
    }
    let y = 1.0 - x;
    let (ln_g_s, sg_s) = ln_gamma_sign(s);
    let (ln_g_ms, sg_ms) = ln_gamma_sign(-s);
    let ln_gc = ln_gamma(c);
    let term1_ln = ln_gc + ln_g_s - ln_gamma(c - a) - ln_gamma(c - b);
    let term2_ln = ln_gc + ln_g_ms - ln_gamma(a) - ln_gamma(b) + s * y.ln();
    let f1 = gauss_2f1(a, b, 1.0 - s, y, &ctrl).expect("2F1 converges at 1-x");
    let f2 = gauss_2f1(c - a, c - b, 1.0 + s, y, &ctrl).expect("2F1 converges at 1-x");
    sg_s as f64 * term1_ln.exp() * f1 + sg_ms as f64 * term2_ln.exp() * f2
}

/// ρ*(h) = ρ(h)(1 − τ²) + τ² 1₀(h).
pub fn corr_with_nugget(rho: f64, tau2: f64, is_zero_lag: bool) -> f64 {
    if is_zero_lag {
        1.0
    } else {
        rho * (1.0 - tau2)
    }
}

/// Coordinates of the n sites plus an optional n × k design matrix of
/// per-site covariates.
#[derive(Debug, Clone)]
pub struct SpatialConfig {
    pub coords: Array2<f64>,
    pub covariates: Option<Array2<f64>>,
}

impl SpatialConfig {
    pub fn new(coords: Array2<f64>) -> Result<Self, CorrelationError> {
        if coords.nrows() == 0 {
            return Err(CorrelationError::InvalidConfig("no sites".into()));
        }
        Ok(SpatialConfig {
            coords,
            covariates: None,
        })
    }

    pub fn with_covariates(
        coords: Array2<f64>,
        covariates: Array2<f64>,
    ) -> Result<Self, CorrelationError> {
        if covariates.nrows() != coords.nrows() {
            return Err(CorrelationError::InvalidConfig(format!(
                "covariate rows ({}) do not match site count ({})",
                covariates.nrows(),
                coords.nrows()
            )));
        }
        let mut cfg = Self::new(coords)?;
        cfg.covariates = Some(covariates);
        Ok(cfg)
    }

    pub fn n_sites(&self) -> usize {
        self.coords.nrows()
    }

    /// Euclidean distance between sites i and j.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        let a = self.coords.row(i);
        let b = self.coords.row(j);
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// Pairwise correlation matrix ρ*(s_i − s_j); exactly symmetric with exact
/// unit diagonal.
pub fn corr_matrix(cfg: &SpatialConfig, model: &CorrelationModel) -> Array2<f64> {
    let n = cfg.n_sites();
    let mut m = Array2::<f64>::eye(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let r = model.corr_nugget(cfg.dist(i, j), false);
            m[[i, j]] = r;
            m[[j, i]] = r;
        }
    }
    m
}

/// Lower-triangular Cholesky factor L with L Lᵀ reproducing the input.
///
/// On a failed pivot the factorization is retried with diagonal jitter
/// starting at 1e-10 and escalating tenfold up to 1e-6.
pub fn chol_factor(matrix: &Array2<f64>) -> Result<Array2<f64>, CorrelationError> {
    let jitters = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];
    let mut failed_minor = 1;
    for &eps in &jitters {
        match try_cholesky(matrix, eps) {
            Ok(l) => return Ok(l),
            Err(minor) => failed_minor = minor,
        }
    }
    Err(CorrelationError::NotPositiveDefinite {
        leading_minor: failed_minor,
    })
}

fn try_cholesky(matrix: &Array2<f64>, jitter: f64) -> Result<Array2<f64>, usize> {
    let n = matrix.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = matrix[[j, j]] + jitter;
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d <= 0.0 {
            return Err(j + 1);
        }
        let dj = d.sqrt();
        l[[j, j]] = dj;
        for i in (j + 1)..n {
            let mut s = matrix[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / dj;
        }
    }
    Ok(l)
}
