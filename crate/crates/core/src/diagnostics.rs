//! Data-facing utilities: NDVI from raw bands, the normal-score transform
//! used by the reflection-asymmetry scatter diagnostic, and empirical /
//! theoretical semivariograms.

use crate::copula::{marginal_corr, std_normal_quantile, CopulaError};
use crate::correlation::SpatialConfig;
use crate::fields::{DependenceParams, MarginalSpec};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticsError {
    /// NIR + RED = 0 leaves the index undefined.
    UndefinedIndex,
    InvalidArgument(String),
    Copula(CopulaError),
}

impl fmt::Display for DiagnosticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticsError::UndefinedIndex => {
                write!(f, "NDVI undefined: NIR + RED must be positive")
            }
            DiagnosticsError::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            DiagnosticsError::Copula(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for DiagnosticsError {}

impl From<CopulaError> for DiagnosticsError {
    fn from(e: CopulaError) -> Self {
        DiagnosticsError::Copula(e)
    }
}

/// Normalized difference vegetation index (NIR − RED)/(NIR + RED).
pub fn ndvi(nir: f64, red: f64) -> Result<f64, DiagnosticsError> {
    if !(nir + red > 0.0) {
        return Err(DiagnosticsError::UndefinedIndex);
    }
    Ok((nir - red) / (nir + red))
}

/// Normal-score transform: rank r (average ranks on ties) maps to
/// Φ⁻¹(r/(n+1)).
pub fn normal_score(values: &[f64]) -> Result<Vec<f64>, DiagnosticsError> {
    let n = values.len();
    if n < 2 {
        return Err(DiagnosticsError::InvalidArgument(
            "normal scores need at least two values".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    // 1-based ranks, ties get the average rank of their block
    let mut rank = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &order[i..=j] {
            rank[k] = avg;
        }
        i = j + 1;
    }
    Ok(rank
        .into_iter()
        .map(|r| std_normal_quantile(r / (n as f64 + 1.0)))
        .collect())
}

/// One bin of an empirical semivariogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariogramBin {
    pub center: f64,
    pub semivariance: f64,
    pub pairs: usize,
}

/// Classical Matheron estimator: for each distance bin, half the mean
/// squared difference of the value pairs whose separation falls inside.
/// Empty bins are omitted.
pub fn empirical_semivariogram(
    cfg: &SpatialConfig,
    values: &[f64],
    n_bins: usize,
    max_dist: f64,
) -> Result<Vec<VariogramBin>, DiagnosticsError> {
    if n_bins == 0 {
        return Err(DiagnosticsError::InvalidArgument("n_bins must be positive".into()));
    }
    if !(max_dist > 0.0) {
        return Err(DiagnosticsError::InvalidArgument("max_dist must be positive".into()));
    }
    if values.len() != cfg.n_sites() {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "{} values for {} sites",
            values.len(),
            cfg.n_sites()
        )));
    }
    let width = max_dist / n_bins as f64;
    let mut acc = vec![0.0f64; n_bins];
    let mut counts = vec![0usize; n_bins];
    let n = cfg.n_sites();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = cfg.dist(i, j);
            if d >= max_dist {
                continue;
            }
            let bin = ((d / width) as usize).min(n_bins - 1);
            let diff = values[i] - values[j];
            acc[bin] += diff * diff;
            counts[bin] += 1;
        }
    }
    Ok((0..n_bins)
        .filter(|&b| counts[b] > 0)
        .map(|b| VariogramBin {
            center: (b as f64 + 0.5) * width,
            semivariance: acc[b] / (2.0 * counts[b] as f64),
            pairs: counts[b],
        })
        .collect())
}

/// Theoretical semivariogram σ²(1 − ρ_S(h)) of the transformed field on a
/// distance grid. σ² is the marginal variance; ρ_S comes from the
/// product-moment quadrature.
pub fn theoretical_semivariogram(
    spec: &MarginalSpec,
    params: &DependenceParams,
    dist_grid: &[f64],
    quad_nodes: usize,
) -> Result<Vec<(f64, f64)>, DiagnosticsError> {
    let var = match spec {
        MarginalSpec::Uniform => 1.0 / 12.0,
        MarginalSpec::Beta { xi, delta } => {
            let s = xi + delta;
            xi * delta / (s * s * (s + 1.0))
        }
        MarginalSpec::BetaRegression { .. } => {
            return Err(DiagnosticsError::InvalidArgument(
                "theoretical semivariogram needs a site-constant marginal".into(),
            ))
        }
    };
    let mut out = Vec::with_capacity(dist_grid.len());
    for &d in dist_grid {
        let rho = params.corr.corr_nugget(d, d == 0.0);
        let rho_s = if d == 0.0 {
            1.0
        } else {
            marginal_corr(spec, params.nu as f64, rho, quad_nodes)?
        };
        out.push((d, var * (1.0 - rho_s)));
    }
    Ok(out)
}
