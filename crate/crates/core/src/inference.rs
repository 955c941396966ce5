//! Weighted pairwise composite-likelihood estimation of marginal and
//! dependence parameters, parametric-bootstrap Godambe uncertainty and the
//! PLIC model-selection criterion.
//!
//! Pairs are selected by the asymmetric nearest-neighbor rule: (i, j) enters
//! the objective iff site i is among the m nearest neighbors of site j. With
//! a compactly supported underlying correlation the pair density factorizes
//! whenever ρ(h) = 0, which keeps evaluations cheap.

use crate::copula::{clamp_rho, copula_bipdf, CopulaError, CopulaFamily};
use crate::correlation::{chol_factor, corr_matrix, CorrelationError, CorrelationModel, SpatialConfig};
use crate::fields::{
    derive_seed, sim_clayton_with_factor, sim_gauss_copula_with_factor, transform_marginal,
    DependenceParams, FieldError, FieldRealization, MarginalSpec,
};
use crate::optim::{nelder_mead, OptimError, OptimResult, SimplexOptions};
use crate::specfun::{ln_beta, reg_inc_beta, SpecFunError};
use ndarray::{Array1, Array2};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum FitError {
    InvalidArgument(String),
    /// Two sites share the same coordinates; the nearest-neighbor rule
    /// needs distinct points.
    DuplicateSites { i: usize, j: usize },
    /// A pair contribution was non-finite; names the pair and parameters.
    PairFailure { i: usize, j: usize, detail: String },
    Optim(OptimError),
    Field(FieldError),
    Copula(CopulaError),
    Correlation(CorrelationError),
    SpecFun(SpecFunError),
    /// More than the accepted share of bootstrap refits failed.
    TooManyBootstrapFailures { failed: usize, total: usize, log: Vec<String> },
    SingularMatrix(String),
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            FitError::DuplicateSites { i, j } => {
                write!(f, "sites {i} and {j} have identical coordinates")
            }
            FitError::PairFailure { i, j, detail } => {
                write!(f, "pair ({i}, {j}) produced a non-finite contribution: {detail}")
            }
            FitError::Optim(e) => write!(f, "{e}"),
            FitError::Field(e) => write!(f, "{e}"),
            FitError::Copula(e) => write!(f, "{e}"),
            FitError::Correlation(e) => write!(f, "{e}"),
            FitError::SpecFun(e) => write!(f, "{e}"),
            FitError::TooManyBootstrapFailures { failed, total, .. } => {
                write!(f, "{failed} of {total} bootstrap refits failed")
            }
            FitError::SingularMatrix(msg) => write!(f, "singular matrix: {msg}"),
        }
    }
}

impl std::error::Error for FitError {}

impl From<OptimError> for FitError {
    fn from(e: OptimError) -> Self {
        FitError::Optim(e)
    }
}
impl From<FieldError> for FitError {
    fn from(e: FieldError) -> Self {
        FitError::Field(e)
    }
}
impl From<CopulaError> for FitError {
    fn from(e: CopulaError) -> Self {
        FitError::Copula(e)
    }
}
impl From<CorrelationError> for FitError {
    fn from(e: CorrelationError) -> Self {
        FitError::Correlation(e)
    }
}
impl From<SpecFunError> for FitError {
    fn from(e: SpecFunError) -> Self {
        FitError::SpecFun(e)
    }
}

/// Ordered nearest-neighbor pairs: (i, j) is included iff s_i is among the m
/// nearest neighbors of s_j. Distances are cached alongside.
#[derive(Debug, Clone)]
pub struct PairSet {
    pub pairs: Vec<(usize, usize)>,
    pub dists: Vec<f64>,
    pub m: usize,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Exact Euclidean m-nearest-neighbor pairs with deterministic tie-break by
/// ascending site index.
pub fn nn_pairs(cfg: &SpatialConfig, m: usize) -> Result<PairSet, FitError> {
    let n = cfg.n_sites();
    if m == 0 || m >= n {
        return Err(FitError::InvalidArgument(format!(
            "neighbor order m = {m} must satisfy 1 <= m < n = {n}"
        )));
    }
    let mut pairs = Vec::with_capacity(n * m);
    let mut dists = Vec::with_capacity(n * m);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for j in 0..n {
        cand.clear();
        for i in 0..n {
            if i == j {
                continue;
            }
            let d = cfg.dist(i, j);
            if d == 0.0 {
                return Err(FitError::DuplicateSites { i: i.min(j), j: i.max(j) });
            }
            cand.push((d, i));
        }
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(d, i) in cand.iter().take(m) {
            pairs.push((i, j));
            dists.push(d);
        }
    }
    Ok(PairSet { pairs, dists, m })
}

/// The full pairwise model: marginal family, copula family with its
/// asymmetry, and the underlying correlation.
#[derive(Debug, Clone)]
pub struct PairwiseModel {
    pub marginal: MarginalSpec,
    pub copula: CopulaFamily,
    pub corr: CorrelationModel,
}

/// Per-site marginal quantities entering every pair: cdf value and log
/// density at the observation.
fn site_marginals(
    values: &[f64],
    cfg: &SpatialConfig,
    marginal: &MarginalSpec,
) -> Result<(Vec<f64>, Vec<f64>), FitError> {
    let n = values.len();
    let mut cdf = Vec::with_capacity(n);
    let mut ln_pdf = Vec::with_capacity(n);
    match marginal {
        MarginalSpec::Uniform => {
            for (idx, &v) in values.iter().enumerate() {
                if !(v > 0.0 && v < 1.0) {
                    return Err(FitError::InvalidArgument(format!(
                        "uniform-marginal value {v} at site {idx} outside (0, 1)"
                    )));
                }
                cdf.push(v);
                ln_pdf.push(0.0);
            }
        }
        MarginalSpec::Beta { xi, delta } => {
            let lb = ln_beta(*xi, *delta);
            for (idx, &v) in values.iter().enumerate() {
                if !(v > 0.0 && v < 1.0) {
                    return Err(FitError::InvalidArgument(format!(
                        "beta-marginal value {v} at site {idx} outside (0, 1)"
                    )));
                }
                cdf.push(reg_inc_beta(v, *xi, *delta)?);
                ln_pdf.push((xi - 1.0) * v.ln() + (delta - 1.0) * (1.0 - v).ln() - lb);
            }
        }
        MarginalSpec::BetaRegression { precision, .. } => {
            for (idx, &v) in values.iter().enumerate() {
                if !(v > 0.0 && v < 1.0) {
                    return Err(FitError::InvalidArgument(format!(
                        "beta-marginal value {v} at site {idx} outside (0, 1)"
                    )));
                }
                let mu = marginal.site_mean(cfg, idx).expect("regression marginal");
                let xi = mu * precision;
                let delta = (1.0 - mu) * precision;
                cdf.push(reg_inc_beta(v, xi, delta)?);
                ln_pdf.push((xi - 1.0) * v.ln() + (delta - 1.0) * (1.0 - v).ln() - ln_beta(xi, delta));
            }
        }
    }
    Ok((cdf, ln_pdf))
}

/// Weighted pairwise composite log-likelihood: the sum over nearest-neighbor
/// pairs of the log bivariate density. When the underlying correlation
/// vanishes at a pair's lag the contribution collapses to the sum of the two
/// log marginal densities.
pub fn wpl(
    values: &[f64],
    cfg: &SpatialConfig,
    model: &PairwiseModel,
    pairs: &PairSet,
) -> Result<f64, FitError> {
    if pairs.is_empty() {
        return Err(FitError::InvalidArgument("empty pair set".into()));
    }
    if values.len() != cfg.n_sites() {
        return Err(FitError::InvalidArgument(format!(
            "{} values for {} sites",
            values.len(),
            cfg.n_sites()
        )));
    }
    model.marginal.validate(cfg).map_err(FitError::Field)?;
    let (cdf, ln_pdf) = site_marginals(values, cfg, &model.marginal)?;
    let mut total = 0.0;
    for (idx, &(i, j)) in pairs.pairs.iter().enumerate() {
        let rho = clamp_rho(model.corr.corr_nugget(pairs.dists[idx], false));
        let contrib = if rho == 0.0 {
            ln_pdf[i] + ln_pdf[j]
        } else {
            let u_i = cdf[i].clamp(1e-13, 1.0 - 1e-13);
            let u_j = cdf[j].clamp(1e-13, 1.0 - 1e-13);
            let c = copula_bipdf(&model.copula, u_i, u_j, rho).map_err(|e| FitError::PairFailure {
                i,
                j,
                detail: format!("{e}; model: {model:?}"),
            })?;
            c.ln() + ln_pdf[i] + ln_pdf[j]
        };
        if !contrib.is_finite() {
            return Err(FitError::PairFailure {
                i,
                j,
                detail: format!("log density {contrib}; model: {model:?}"),
            });
        }
        total += contrib;
    }
    Ok(total)
}

/// Copula family fitted by [`fit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CopulaChoice {
    Clayton,
    Gaussian,
}

/// Per-parameter transform to the unconstrained optimization scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    Log,
    Logit,
}

impl Transform {
    pub fn to_unconstrained(self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Log => v.ln(),
            Transform::Logit => (v / (1.0 - v)).ln(),
        }
    }

    pub fn to_natural(self, t: f64) -> f64 {
        match self {
            Transform::Identity => t,
            Transform::Log => t.exp(),
            Transform::Logit => 1.0 / (1.0 + (-t).exp()),
        }
    }
}

/// One free parameter: display name plus its transform.
#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: String,
    pub transform: Transform,
}

/// Fit configuration: the ν grid to profile over, starting marginal and
/// correlation (their values seed the optimizer), copula family, neighbor
/// order and optimizer tolerances.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub nu_grid: Vec<u32>,
    pub marginal_start: MarginalSpec,
    pub corr_start: CorrelationModel,
    pub fit_nugget: bool,
    pub copula: CopulaChoice,
    pub neighbor_order: usize,
    pub optimizer: SimplexOptions,
}

impl FitConfig {
    pub fn new(
        nu_grid: Vec<u32>,
        marginal_start: MarginalSpec,
        corr_start: CorrelationModel,
        copula: CopulaChoice,
    ) -> Result<Self, FitError> {
        if copula == CopulaChoice::Clayton && nu_grid.is_empty() {
            return Err(FitError::InvalidArgument("nu grid must be nonempty".into()));
        }
        if nu_grid.iter().any(|&nu| nu == 0) {
            return Err(FitError::InvalidArgument("nu must be a positive integer".into()));
        }
        Ok(FitConfig {
            nu_grid,
            marginal_start,
            corr_start,
            fit_nugget: false,
            copula,
            neighbor_order: 2,
            optimizer: SimplexOptions::default(),
        })
    }

    /// Free-parameter layout implied by the marginal family and nugget flag.
    pub fn param_specs(&self) -> Vec<ParamSpec> {
        let mut specs = Vec::new();
        match &self.marginal_start {
            MarginalSpec::Uniform => {}
            MarginalSpec::Beta { .. } => {
                specs.push(ParamSpec { name: "xi".into(), transform: Transform::Log });
                specs.push(ParamSpec { name: "delta_shape".into(), transform: Transform::Log });
            }
            MarginalSpec::BetaRegression { beta_coeffs, .. } => {
                for i in 0..beta_coeffs.len() {
                    specs.push(ParamSpec {
                        name: format!("beta{i}"),
                        transform: Transform::Identity,
                    });
                }
                specs.push(ParamSpec { name: "precision".into(), transform: Transform::Log });
            }
        }
        specs.push(ParamSpec { name: "range_b".into(), transform: Transform::Log });
        if self.fit_nugget {
            specs.push(ParamSpec { name: "nugget_tau2".into(), transform: Transform::Logit });
        }
        specs
    }

    fn start_natural(&self) -> Vec<f64> {
        let mut theta = Vec::new();
        match &self.marginal_start {
            MarginalSpec::Uniform => {}
            MarginalSpec::Beta { xi, delta } => {
                theta.push(*xi);
                theta.push(*delta);
            }
            MarginalSpec::BetaRegression { beta_coeffs, precision } => {
                theta.extend_from_slice(beta_coeffs);
                theta.push(*precision);
            }
        }
        theta.push(self.corr_start.b);
        if self.fit_nugget {
            theta.push(self.corr_start.tau2.clamp(1e-6, 1.0 - 1e-6));
        }
        theta
    }

    /// Natural-scale parameter vector back into a model, for a given ν.
    fn model_from_natural(&self, theta: &[f64], nu: f64) -> PairwiseModel {
        let mut k = 0;
        let marginal = match &self.marginal_start {
            MarginalSpec::Uniform => MarginalSpec::Uniform,
            MarginalSpec::Beta { .. } => {
                let m = MarginalSpec::Beta { xi: theta[0], delta: theta[1] };
                k = 2;
                m
            }
            MarginalSpec::BetaRegression { beta_coeffs, .. } => {
                let p = beta_coeffs.len();
                let m = MarginalSpec::BetaRegression {
                    beta_coeffs: theta[..p].to_vec(),
                    precision: theta[p],
                };
                k = p + 1;
                m
            }
        };
        let mut corr = self.corr_start.with_range(theta[k]);
        k += 1;
        if self.fit_nugget {
            corr = corr.with_tau2(theta[k]);
        }
        let copula = match self.copula {
            CopulaChoice::Clayton => CopulaFamily::Clayton { nu },
            CopulaChoice::Gaussian => CopulaFamily::Gaussian,
        };
        PairwiseModel { marginal, copula, corr }
    }
}

fn to_transformed(specs: &[ParamSpec], natural: &[f64]) -> Vec<f64> {
    specs
        .iter()
        .zip(natural)
        .map(|(s, &v)| s.transform.to_unconstrained(v))
        .collect()
}

fn to_natural(specs: &[ParamSpec], transformed: &[f64]) -> Vec<f64> {
    specs
        .iter()
        .zip(transformed)
        .map(|(s, &t)| s.transform.to_natural(t))
        .collect()
}

/// Result of a composite-likelihood fit. Uncertainty fields are filled by
/// [`bootstrap_godambe`]; `plic` by [`plic`].
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub param_names: Vec<String>,
    /// Estimates on the natural scale, in `param_names` order.
    pub theta_hat: Vec<f64>,
    /// The same estimates on the optimizer's transformed scale.
    pub theta_transformed: Vec<f64>,
    pub wpl_max: f64,
    /// Selected asymmetry for the Clayton family; `None` for the Gaussian
    /// benchmark.
    pub nu_selected: Option<u32>,
    pub copula: CopulaChoice,
    /// wpl value per ν on the grid, for profile inspection.
    pub nu_profile: Vec<(u32, f64)>,
    /// Parameters pinned at extreme transformed values, by name.
    pub boundary_flags: Vec<String>,
    pub pair_count: usize,
    pub evaluations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub godambe_inv: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plic: Option<f64>,
}

impl FitResult {
    /// Rebuild the fitted pairwise model.
    pub fn model(&self, cfg: &FitConfig) -> PairwiseModel {
        let nu = self.nu_selected.map_or(f64::NAN, f64::from);
        cfg.model_from_natural(&self.theta_hat, nu)
    }
}

fn optimize_at_nu(
    values: &[f64],
    cfg: &SpatialConfig,
    fit_cfg: &FitConfig,
    pairs: &PairSet,
    specs: &[ParamSpec],
    start_t: &[f64],
    nu: f64,
) -> Result<OptimResult, FitError> {
    let objective = |t: &[f64]| -> f64 {
        let natural = to_natural(specs, t);
        let model = fit_cfg.model_from_natural(&natural, nu);
        match wpl(values, cfg, &model, pairs) {
            Ok(v) => -v,
            Err(_) => f64::NAN,
        }
    };
    nelder_mead(objective, start_t, &fit_cfg.optimizer).map_err(FitError::Optim)
}

/// Maximize the weighted pairwise likelihood. For the Clayton family the
/// integer ν grid is profiled and the ν with the highest wpl wins; the
/// Gaussian benchmark ignores the grid.
pub fn fit(values: &[f64], cfg: &SpatialConfig, fit_cfg: &FitConfig) -> Result<FitResult, FitError> {
    let pairs = nn_pairs(cfg, fit_cfg.neighbor_order)?;
    fit_with_pairs(values, cfg, fit_cfg, &pairs)
}

pub fn fit_with_pairs(
    values: &[f64],
    cfg: &SpatialConfig,
    fit_cfg: &FitConfig,
    pairs: &PairSet,
) -> Result<FitResult, FitError> {
    let specs = fit_cfg.param_specs();
    if specs.is_empty() {
        return Err(FitError::InvalidArgument(
            "model has no free parameters to fit".into(),
        ));
    }
    let start_t = to_transformed(&specs, &fit_cfg.start_natural());

    let mut best: Option<(Option<u32>, OptimResult)> = None;
    let mut profile = Vec::new();
    let mut evaluations = 0usize;
    match fit_cfg.copula {
        CopulaChoice::Gaussian => {
            let res = optimize_at_nu(values, cfg, fit_cfg, pairs, &specs, &start_t, f64::NAN)?;
            evaluations += res.evaluations;
            best = Some((None, res));
        }
        CopulaChoice::Clayton => {
            for &nu in &fit_cfg.nu_grid {
                let res =
                    optimize_at_nu(values, cfg, fit_cfg, pairs, &specs, &start_t, f64::from(nu))?;
                evaluations += res.evaluations;
                profile.push((nu, -res.value));
                let better = match &best {
                    None => true,
                    Some((_, incumbent)) => res.value < incumbent.value,
                };
                if better {
                    best = Some((Some(nu), res));
                }
            }
        }
    }
    let (nu_selected, res) = best.expect("at least one optimization ran");
    let theta_hat = to_natural(&specs, &res.x);
    let boundary_flags = specs
        .iter()
        .zip(&res.x)
        .filter(|(_, &t)| t.abs() > 15.0)
        .map(|(s, _)| s.name.clone())
        .collect();
    Ok(FitResult {
        param_names: specs.iter().map(|s| s.name.clone()).collect(),
        theta_hat,
        theta_transformed: res.x.clone(),
        wpl_max: -res.value,
        nu_selected,
        copula: fit_cfg.copula,
        nu_profile: profile,
        boundary_flags,
        pair_count: pairs.len(),
        evaluations,
        godambe_inv: None,
        std_errors: None,
        plic: None,
    })
}

/// Two-step ν estimation: first treat ν as a free positive real, then fix it
/// at the rounded value and refit the remaining parameters.
pub fn fit_two_step(
    values: &[f64],
    cfg: &SpatialConfig,
    fit_cfg: &FitConfig,
) -> Result<FitResult, FitError> {
    if fit_cfg.copula != CopulaChoice::Clayton {
        return Err(FitError::InvalidArgument(
            "two-step nu estimation only applies to the Clayton family".into(),
        ));
    }
    let pairs = nn_pairs(cfg, fit_cfg.neighbor_order)?;
    let specs = fit_cfg.param_specs();
    let mut start_t = to_transformed(&specs, &fit_cfg.start_natural());
    // free continuous nu appended with a log transform
    let nu_start = f64::from(*fit_cfg.nu_grid.first().unwrap_or(&2));
    start_t.push(nu_start.ln());
    let objective = |t: &[f64]| -> f64 {
        let (theta_t, nu_t) = t.split_at(t.len() - 1);
        let natural = to_natural(&specs, theta_t);
        let model = fit_cfg.model_from_natural(&natural, nu_t[0].exp());
        match wpl(values, cfg, &model, &pairs) {
            Ok(v) => -v,
            Err(_) => f64::NAN,
        }
    };
    let first = nelder_mead(objective, &start_t, &fit_cfg.optimizer)?;
    let nu_cont = first.x.last().unwrap().exp();
    let nu_fixed = nu_cont.round().max(1.0) as u32;
    let mut second_cfg = fit_cfg.clone();
    second_cfg.nu_grid = vec![nu_fixed];
    fit_with_pairs(values, cfg, &second_cfg, &pairs)
}

/// Output of the parametric bootstrap: the Godambe-inverse estimate on the
/// natural scale with its standard errors, plus the transformed-scale
/// covariance used by PLIC.
#[derive(Debug, Clone)]
pub struct BootstrapGodambe {
    pub godambe_inv: Array2<f64>,
    pub std_errors: Vec<f64>,
    pub godambe_inv_transformed: Array2<f64>,
    pub failures: usize,
    pub replicates: usize,
}

fn empirical_cov(samples: &[Vec<f64>]) -> Array2<f64> {
    let b = samples.len();
    let p = samples[0].len();
    let mut mean = vec![0.0; p];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v / b as f64;
        }
    }
    let mut cov = Array2::<f64>::zeros((p, p));
    for s in samples {
        for i in 0..p {
            for j in 0..p {
                cov[[i, j]] += (s[i] - mean[i]) * (s[j] - mean[j]) / (b as f64 - 1.0);
            }
        }
    }
    cov
}

/// Parametric bootstrap estimate of the inverse Godambe information:
/// simulate B datasets at the fitted parameters, refit each, and take the
/// empirical covariance of the estimates. Standard errors are the square
/// root of the diagonal. Fails if more than 10% of replicate fits fail.
pub fn bootstrap_godambe(
    fit_res: &FitResult,
    cfg: &SpatialConfig,
    fit_cfg: &FitConfig,
    b_reps: usize,
    seed: u64,
) -> Result<BootstrapGodambe, FitError> {
    if b_reps < 30 {
        return Err(FitError::InvalidArgument(format!(
            "bootstrap needs B >= 30 replicates, got {b_reps}"
        )));
    }
    let fitted = fit_res.model(fit_cfg);
    let l = chol_factor(&corr_matrix(cfg, &fitted.corr))?;
    // refit at the selected nu only, starting from the incumbent
    let mut refit_cfg = fit_cfg.clone();
    refit_cfg.marginal_start = fitted.marginal.clone();
    refit_cfg.corr_start = fitted.corr;
    if let Some(nu) = fit_res.nu_selected {
        refit_cfg.nu_grid = vec![nu];
    }
    let pairs = nn_pairs(cfg, fit_cfg.neighbor_order)?;

    let mut natural_estimates = Vec::with_capacity(b_reps);
    let mut transformed_estimates = Vec::with_capacity(b_reps);
    let mut failures = Vec::new();
    for r in 0..b_reps {
        let rep_seed = derive_seed(seed, r as u64);
        let result = simulate_and_refit(&fitted, fit_res, &l, cfg, &refit_cfg, &pairs, rep_seed);
        match result {
            Ok((nat, trans)) => {
                natural_estimates.push(nat);
                transformed_estimates.push(trans);
            }
            Err(e) => failures.push(format!("replicate {r}: {e}")),
        }
    }
    let failed = failures.len();
    if failed * 10 > b_reps {
        return Err(FitError::TooManyBootstrapFailures {
            failed,
            total: b_reps,
            log: failures,
        });
    }
    let godambe_inv = empirical_cov(&natural_estimates);
    let std_errors = (0..godambe_inv.nrows())
        .map(|i| godambe_inv[[i, i]].max(0.0).sqrt())
        .collect();
    Ok(BootstrapGodambe {
        godambe_inv,
        std_errors,
        godambe_inv_transformed: empirical_cov(&transformed_estimates),
        failures: failed,
        replicates: b_reps - failed,
    })
}

fn simulate_and_refit(
    fitted: &PairwiseModel,
    fit_res: &FitResult,
    l: &Array2<f64>,
    cfg: &SpatialConfig,
    refit_cfg: &FitConfig,
    pairs: &PairSet,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), FitError> {
    let uniforms = match fitted.copula {
        CopulaFamily::Clayton { nu } => sim_clayton_with_factor(l, nu as u32, seed)?,
        CopulaFamily::Gaussian => sim_gauss_copula_with_factor(l, seed),
    };
    let realization = FieldRealization {
        values: uniforms,
        marginal: MarginalSpec::Uniform,
        params: DependenceParams {
            nu: fit_res.nu_selected.unwrap_or(2),
            corr: fitted.corr,
        },
        seed,
    };
    let data = transform_marginal(&realization, &fitted.marginal, cfg)?;
    let refit = fit_with_pairs(&data.values, cfg, refit_cfg, pairs)?;
    Ok((refit.theta_hat, refit.theta_transformed))
}

/// Negative numerical Hessian of wpl at the fitted point, on the transformed
/// scale (central differences, step 1e-5).
pub fn neg_hessian_wpl(
    values: &[f64],
    cfg: &SpatialConfig,
    fit_cfg: &FitConfig,
    fit_res: &FitResult,
    pairs: &PairSet,
) -> Result<Array2<f64>, FitError> {
    let specs = fit_cfg.param_specs();
    let nu = fit_res.nu_selected.map_or(f64::NAN, f64::from);
    let f = |t: &[f64]| -> Result<f64, FitError> {
        let natural = to_natural(&specs, t);
        let model = fit_cfg.model_from_natural(&natural, nu);
        wpl(values, cfg, &model, pairs)
    };
    let at = &fit_res.theta_transformed;
    let p = at.len();
    let h = 1e-5;
    let f0 = f(at)?;
    let mut hess = Array2::<f64>::zeros((p, p));
    let shift = |base: &[f64], i: usize, si: f64, j: usize, sj: f64| {
        let mut x = base.to_vec();
        x[i] += si * h;
        x[j] += sj * h;
        x
    };
    for i in 0..p {
        let fpp = f(&shift(at, i, 1.0, i, 0.0))?;
        let fmm = f(&shift(at, i, -1.0, i, 0.0))?;
        hess[[i, i]] = -(fpp + fmm - 2.0 * f0) / (h * h);
        for j in (i + 1)..p {
            let a = f(&shift(at, i, 1.0, j, 1.0))?;
            let b = f(&shift(at, i, 1.0, j, -1.0))?;
            let c = f(&shift(at, i, -1.0, j, 1.0))?;
            let d = f(&shift(at, i, -1.0, j, -1.0))?;
            let v = -(a - b - c + d) / (4.0 * h * h);
            hess[[i, j]] = v;
            hess[[j, i]] = v;
        }
    }
    Ok(hess)
}

/// Composite-likelihood information criterion
/// PLIC = −2 wpl(θ̂) + 2 tr(Ĥ Ĝ⁻¹); lower is better. Ĥ and Ĝ⁻¹ must live on
/// the same parameter scale.
pub fn plic(wpl_max: f64, h_hat: &Array2<f64>, ginv_hat: &Array2<f64>) -> Result<f64, FitError> {
    let p = h_hat.nrows();
    if h_hat.ncols() != p || ginv_hat.nrows() != p || ginv_hat.ncols() != p {
        return Err(FitError::InvalidArgument(format!(
            "dimension mismatch: H is {}x{}, Ginv is {}x{}",
            h_hat.nrows(),
            h_hat.ncols(),
            ginv_hat.nrows(),
            ginv_hat.ncols()
        )));
    }
    let mut trace = 0.0;
    for i in 0..p {
        for j in 0..p {
            trace += h_hat[[i, j]] * ginv_hat[[j, i]];
        }
    }
    if !trace.is_finite() {
        return Err(FitError::SingularMatrix(format!("tr(H Ginv) = {trace}")));
    }
    Ok(-2.0 * wpl_max + 2.0 * trace)
}

/// Full uncertainty pipeline: bootstrap Godambe, numerical Hessian, PLIC.
/// Returns the updated result with `godambe_inv`, `std_errors` and `plic`
/// populated.
pub fn with_uncertainty(
    mut fit_res: FitResult,
    values: &[f64],
    cfg: &SpatialConfig,
    fit_cfg: &FitConfig,
    b_reps: usize,
    seed: u64,
) -> Result<(FitResult, BootstrapGodambe), FitError> {
    let boot = bootstrap_godambe(&fit_res, cfg, fit_cfg, b_reps, seed)?;
    let pairs = nn_pairs(cfg, fit_cfg.neighbor_order)?;
    let h = neg_hessian_wpl(values, cfg, fit_cfg, &fit_res, &pairs)?;
    let value = plic(fit_res.wpl_max, &h, &boot.godambe_inv_transformed)?;
    fit_res.plic = Some(value);
    fit_res.std_errors = Some(boot.std_errors.clone());
    fit_res.godambe_inv = Some(
        boot.godambe_inv
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect(),
    );
    Ok((fit_res, boot))
}

/// Gradient norm of wpl at the fitted point on the transformed scale
/// (central differences); a stationarity diagnostic.
pub fn wpl_gradient_norm(
    values: &[f64],
    cfg: &SpatialConfig,
    fit_cfg: &FitConfig,
    fit_res: &FitResult,
    pairs: &PairSet,
) -> Result<f64, FitError> {
    let specs = fit_cfg.param_specs();
    let nu = fit_res.nu_selected.map_or(f64::NAN, f64::from);
    let f = |t: &[f64]| -> Result<f64, FitError> {
        let natural = to_natural(&specs, t);
        let model = fit_cfg.model_from_natural(&natural, nu);
        wpl(values, cfg, &model, pairs)
    };
    let at = &fit_res.theta_transformed;
    let h = 1e-5;
    let mut norm2 = 0.0;
    for i in 0..at.len() {
        let mut xp = at.clone();
        xp[i] += h;
        let mut xm = at.clone();
        xm[i] -= h;
        let g = (f(&xp)? - f(&xm)?) / (2.0 * h);
        norm2 += g * g;
    }
    Ok(norm2.sqrt())
}

/// n uniform pseudo-random sites in the unit square from a seeded
/// generator; the default simulation design.
pub fn random_sites(n: usize, seed: u64) -> Array2<f64> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let mut coords = Array2::<f64>::zeros((n, 2));
    for i in 0..n {
        coords[[i, 0]] = rng.random::<f64>();
        coords[[i, 1]] = rng.random::<f64>();
    }
    coords
}

/// side² sites on a jittered unit-square grid. The jitter fraction (of one
/// cell, below 0.5) keeps a hard lower bound on pairwise distances, so no
/// pair drives the underlying correlation arbitrarily close to one; used by
/// replication-heavy studies.
pub fn jittered_grid_sites(side: usize, jitter: f64, seed: u64) -> Array2<f64> {
    use rand::Rng;
    use rand::SeedableRng;
    assert!(side >= 2 && (0.0..0.5).contains(&jitter));
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let cell = 1.0 / side as f64;
    let mut coords = Array2::<f64>::zeros((side * side, 2));
    for gx in 0..side {
        for gy in 0..side {
            let i = gx * side + gy;
            coords[[i, 0]] = (gx as f64 + 0.5 + jitter * (2.0 * rng.random::<f64>() - 1.0)) * cell;
            coords[[i, 1]] = (gy as f64 + 0.5 + jitter * (2.0 * rng.random::<f64>() - 1.0)) * cell;
        }
    }
    coords
}

/// Column means helper for bootstrap sanity checks.
pub fn column_means(m: &Array2<f64>) -> Array1<f64> {
    let mut out = Array1::zeros(m.ncols());
    for j in 0..m.ncols() {
        out[j] = m.column(j).sum() / m.nrows() as f64;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn gw(b: f64) -> CorrelationModel {
        CorrelationModel::generalized_wendland(0.0, 4.0, b, 0.0, 2).unwrap()
    }

    #[test]
    fn nn_pairs_two_sites() {
        let cfg = SpatialConfig::new(array![[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let p = nn_pairs(&cfg, 1).unwrap();
        assert_eq!(p.pairs, vec![(1, 0), (0, 1)]);
        assert_eq!(p.dists, vec![1.0, 1.0]);
    }

    #[test]
    fn nn_pairs_collinear_geometry() {
        // sites at 0, 1, 3: the middle site neighbors both ends, the far
        // site only pairs with the middle
        let cfg = SpatialConfig::new(array![[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]).unwrap();
        let p = nn_pairs(&cfg, 1).unwrap();
        assert_eq!(p.pairs, vec![(1, 0), (0, 1), (1, 2)]);
    }

    #[test]
    fn nn_pairs_count_is_n_times_m() {
        let cfg = SpatialConfig::new(random_sites(100, 5)).unwrap();
        let p = nn_pairs(&cfg, 2).unwrap();
        assert_eq!(p.len(), 200);
    }

    #[test]
    fn nn_pairs_rejects_duplicates_and_large_m() {
        let cfg = SpatialConfig::new(array![[0.1, 0.2], [0.1, 0.2], [0.5, 0.5]]).unwrap();
        assert!(matches!(
            nn_pairs(&cfg, 1),
            Err(FitError::DuplicateSites { .. })
        ));
        let cfg = SpatialConfig::new(array![[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(nn_pairs(&cfg, 2).is_err());
    }

    #[test]
    fn wpl_factorizes_at_zero_correlation() {
        // sites farther apart than the support: every pair contribution is
        // the sum of marginal log densities; uniform marginals give zero
        let cfg = SpatialConfig::new(array![[0.0, 0.0], [1.0, 0.0], [2.5, 0.0]]).unwrap();
        let pairs = nn_pairs(&cfg, 1).unwrap();
        let model = PairwiseModel {
            marginal: MarginalSpec::Uniform,
            copula: CopulaFamily::Clayton { nu: 2.0 },
            corr: gw(0.3),
        };
        let v = wpl(&[0.3, 0.8, 0.5], &cfg, &model, &pairs).unwrap();
        assert_eq!(v, 0.0);

        let model = PairwiseModel {
            marginal: MarginalSpec::Beta { xi: 2.0, delta: 3.0 },
            copula: CopulaFamily::Clayton { nu: 2.0 },
            corr: gw(0.3),
        };
        let values = [0.3, 0.8, 0.5];
        let v = wpl(&values, &cfg, &model, &pairs).unwrap();
        let lb = ln_beta(2.0, 3.0);
        let lf = |y: f64| (2.0 - 1.0) * y.ln() + (3.0 - 1.0) * (1.0 - y).ln() - lb;
        // pairs (1,0), (0,1), (1,2): sums over both endpoints of each pair
        let expect = lf(values[1]) + lf(values[0]) + lf(values[0]) + lf(values[1])
            + lf(values[1]) + lf(values[2]);
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn wpl_relabeling_invariance() {
        let coords = random_sites(40, 9);
        let cfg = SpatialConfig::new(coords.clone()).unwrap();
        let values: Vec<f64> = (0..40).map(|i| 0.02 + 0.96 * (i as f64 + 0.5) / 40.0).collect();
        let model = PairwiseModel {
            marginal: MarginalSpec::Uniform,
            copula: CopulaFamily::Clayton { nu: 2.0 },
            corr: gw(0.4),
        };
        let pairs = nn_pairs(&cfg, 2).unwrap();
        let base = wpl(&values, &cfg, &model, &pairs).unwrap();

        // reverse site order
        let n = 40;
        let mut coords_r = Array2::<f64>::zeros((n, 2));
        let mut values_r = vec![0.0; n];
        for i in 0..n {
            coords_r[[i, 0]] = coords[[n - 1 - i, 0]];
            coords_r[[i, 1]] = coords[[n - 1 - i, 1]];
            values_r[i] = values[n - 1 - i];
        }
        let cfg_r = SpatialConfig::new(coords_r).unwrap();
        let pairs_r = nn_pairs(&cfg_r, 2).unwrap();
        let permuted = wpl(&values_r, &cfg_r, &model, &pairs_r).unwrap();
        assert!((base - permuted).abs() < 1e-9, "{base} vs {permuted}");
    }

    #[test]
    fn plic_closed_forms() {
        // H = G means the penalty is the parameter count
        let h = array![[2.0, 0.3], [0.3, 1.0]];
        let hinv_is_g = h.clone();
        // build Ginv = H^{-1}: for 2x2 analytic inverse
        let det = h[[0, 0]] * h[[1, 1]] - h[[0, 1]] * h[[1, 0]];
        let ginv = array![
            [h[[1, 1]] / det, -h[[0, 1]] / det],
            [-h[[1, 0]] / det, h[[0, 0]] / det]
        ];
        let v = plic(-10.0, &hinv_is_g, &ginv).unwrap();
        assert!((v - (20.0 + 4.0)).abs() < 1e-12);

        // scalar case
        let v = plic(3.0, &array![[2.5]], &array![[0.4]]).unwrap();
        assert!((v - (-6.0 + 2.0)).abs() < 1e-12);

        assert!(plic(0.0, &array![[1.0]], &Array2::zeros((2, 2))).is_err());
    }

    #[test]
    fn transforms_roundtrip() {
        for (tr, v) in [
            (Transform::Log, 0.37),
            (Transform::Identity, -1.4),
            (Transform::Logit, 0.73),
        ] {
            let t = tr.to_unconstrained(v);
            assert!((tr.to_natural(t) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_config_layouts() {
        let corr = gw(0.2);
        let cfg = FitConfig::new(vec![2], MarginalSpec::Uniform, corr, CopulaChoice::Clayton).unwrap();
        let names: Vec<_> = cfg.param_specs().iter().map(|s| s.name.clone()).collect();
        assert_eq!(names, vec!["range_b"]);

        let cfg = FitConfig::new(
            vec![2],
            MarginalSpec::BetaRegression { beta_coeffs: vec![0.2, -0.2], precision: 1.5 },
            corr,
            CopulaChoice::Clayton,
        )
        .unwrap();
        let names: Vec<_> = cfg.param_specs().iter().map(|s| s.name.clone()).collect();
        assert_eq!(names, vec!["beta0", "beta1", "precision", "range_b"]);

        assert!(FitConfig::new(vec![], MarginalSpec::Uniform, corr, CopulaChoice::Clayton).is_err());
        assert!(FitConfig::new(vec![0], MarginalSpec::Uniform, corr, CopulaChoice::Clayton).is_err());
    }

    #[test]
    fn hessian_of_known_quadratic() {
        // uniform marginal, single range parameter: compare the numerical
        // Hessian against a coarse finite-difference on a wider step
        let coords = random_sites(30, 13);
        let cfg = SpatialConfig::new(coords).unwrap();
        let pairs = nn_pairs(&cfg, 2).unwrap();
        let corr = gw(0.25);
        let fit_cfg =
            FitConfig::new(vec![2], MarginalSpec::Uniform, corr, CopulaChoice::Clayton).unwrap();
        let values: Vec<f64> = (0..30).map(|i| 0.03 + 0.94 * (i as f64 + 0.5) / 30.0).collect();
        let fake_fit = FitResult {
            param_names: vec!["range_b".into()],
            theta_hat: vec![0.25],
            theta_transformed: vec![0.25f64.ln()],
            wpl_max: 0.0,
            nu_selected: Some(2),
            copula: CopulaChoice::Clayton,
            nu_profile: vec![],
            boundary_flags: vec![],
            pair_count: pairs.len(),
            evaluations: 0,
            godambe_inv: None,
            std_errors: None,
            plic: None,
        };
        let h = neg_hessian_wpl(&values, &cfg, &fit_cfg, &fake_fit, &pairs).unwrap();
        assert_eq!(h.nrows(), 1);
        assert!(h[[0, 0]].is_finite());
    }
}
