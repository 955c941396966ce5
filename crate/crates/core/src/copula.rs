//! Closed-form bivariate densities, distribution functions, correlation
//! functions and dependence measures of the uniform-marginal Clayton field,
//! its auxiliary beta parent and the Gaussian-copula benchmark.
//!
//! All formulas are driven by the squared underlying correlation ρ²(h); ν
//! controls reflection (a)symmetry (symmetric exactly at ν = 2). Densities
//! accept any real ν > 0 even though simulation requires integer ν.

use crate::fields::MarginalSpec;
use crate::quad::gauss_legendre_on;
use crate::specfun::{
    appell_f4, bessel_i_ln, beta_pdf, kampe_de_feriet, reg_inc_beta,
    KdFSpec, SeriesControl, SpecFunError,
};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum CopulaError {
    Domain(String),
    Series(SpecFunError),
    /// Doubling the quadrature nodes moved the result by more than the
    /// accepted drift.
    QuadratureNotConverged { delta: f64 },
}

impl fmt::Display for CopulaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CopulaError::Domain(msg) => write!(f, "domain violation: {msg}"),
            CopulaError::Series(e) => write!(f, "{e}"),
            CopulaError::QuadratureNotConverged { delta } => {
                write!(f, "quadrature drifted by {delta} under node doubling")
            }
        }
    }
}

impl std::error::Error for CopulaError {}

impl From<SpecFunError> for CopulaError {
    fn from(e: SpecFunError) -> Self {
        CopulaError::Series(e)
    }
}

/// Inputs of a bivariate evaluation at one lag: the underlying correlation
/// ρ(h) there, the asymmetry ν and, for the auxiliary beta field, α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateEval {
    pub rho: f64,
    pub nu: f64,
    pub alpha: Option<f64>,
}

impl BivariateEval {
    pub fn new(rho: f64, nu: f64) -> Result<Self, CopulaError> {
        if !(0.0..1.0).contains(&rho) {
            return Err(CopulaError::Domain(format!("rho = {rho} outside [0, 1)")));
        }
        if !(nu > 0.0) {
            return Err(CopulaError::Domain(format!("nu = {nu} must be positive")));
        }
        Ok(BivariateEval { rho, nu, alpha: None })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self, CopulaError> {
        if !(alpha > 0.0) {
            return Err(CopulaError::Domain(format!("alpha = {alpha} must be positive")));
        }
        self.alpha = Some(alpha);
        Ok(self)
    }

    fn alpha_or_err(&self) -> Result<f64, CopulaError> {
        self.alpha
            .ok_or_else(|| CopulaError::Domain("alpha required but not set".into()))
    }
}

/// Optimizers probe the correlation boundary; inputs are pulled back to
/// ρ ≤ 1 − 1e-10 instead of erroring.
pub fn clamp_rho(rho: f64) -> f64 {
    const MAX: f64 = 1.0 - 1e-10;
    if rho > MAX {
        log::warn!("underlying correlation {rho} clamped to {MAX}");
        MAX
    } else {
        rho
    }
}

fn default_ctrl() -> SeriesControl {
    SeriesControl::default()
}

/// Kibble bivariate gamma density of (G_ψ(s_i), G_ψ(s_j)) with Gamma(ψ/2, 1)
/// marginals and cross-correlation ρ². At ρ = 0 it factorizes exactly into
/// the product of the two marginal densities.
pub fn bigamma_pdf(g_i: f64, g_j: f64, psi: f64, rho: f64) -> Result<f64, CopulaError> {
    if !(g_i > 0.0 && g_j > 0.0) {
        return Err(CopulaError::Domain(format!(
            "bigamma_pdf requires positive arguments, got ({g_i}, {g_j})"
        )));
    }
    if !(psi > 0.0) {
        return Err(CopulaError::Domain(format!("psi = {psi} must be positive")));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(CopulaError::Domain(format!("rho = {rho} outside [0, 1)")));
    }
    // exact exchange symmetry via canonical argument order
    let (g_i, g_j) = if g_i <= g_j { (g_i, g_j) } else { (g_j, g_i) };
    let half = psi / 2.0;
    if rho == 0.0 {
        let ln_f = (half - 1.0) * (g_i * g_j).ln() - g_i - g_j - 2.0 * ln_gamma(half);
        return Ok(ln_f.exp());
    }
    let r2 = rho * rho;
    let omr = 1.0 - r2;
    let s = (r2 * g_i * g_j).sqrt() / omr;
    let bessel = bessel_i_ln(half - 1.0, 2.0 * s)?;
    let ln_f = (half - 1.0) * (g_i * g_j).ln() - (g_i + g_j) / omr
        - ln_gamma(half)
        - half * omr.ln()
        + (1.0 - half) * s.ln()
        + bessel.ln_abs;
    Ok(bessel.sign as f64 * ln_f.exp())
}

/// Bivariate density of the auxiliary beta field Y_{ν,α}, via the Appell F₄
/// representation; shapes are Beta(ν/2, α/2).
pub fn auxbeta_bipdf(y_i: f64, y_j: f64, eval: &BivariateEval) -> Result<f64, CopulaError> {
    let alpha = eval.alpha_or_err()?;
    if !(y_i > 0.0 && y_i < 1.0 && y_j > 0.0 && y_j < 1.0) {
        return Err(CopulaError::Domain(format!(
            "auxbeta_bipdf arguments must lie in (0, 1), got ({y_i}, {y_j})"
        )));
    }
    let (y_i, y_j) = if y_i <= y_j { (y_i, y_j) } else { (y_j, y_i) };
    let (nu, rho) = (eval.nu, eval.rho);
    let c = (nu + alpha) / 2.0;
    let r2 = rho * rho;
    let ln_pref = (nu / 2.0 - 1.0) * (y_i * y_j).ln()
        + (alpha / 2.0 - 1.0) * ((1.0 - y_i) * (1.0 - y_j)).ln()
        + 2.0 * (ln_gamma(c) - ln_gamma(nu / 2.0) - ln_gamma(alpha / 2.0))
        + c * (1.0 - r2).ln();
    let f4 = appell_f4(
        c,
        c,
        nu / 2.0,
        alpha / 2.0,
        r2 * y_i * y_j,
        r2 * (1.0 - y_i) * (1.0 - y_j),
        &default_ctrl(),
    )?;
    Ok(ln_pref.exp() * f4)
}

fn auxbeta_kdf_spec(nu: f64, alpha: f64) -> KdFSpec {
    let c = (nu + alpha) / 2.0;
    KdFSpec {
        a_list: vec![c, c],
        b_list: vec![alpha / 2.0],
        c_list: vec![nu / 2.0 + 1.0, nu / 2.0 + 1.0],
        e_list: vec![c + 1.0, c + 1.0],
        g_list: vec![],
        h_list: vec![nu / 2.0],
    }
}

/// Correlation of the auxiliary beta field:
/// ρ_Y = ν(c+1)/α · [(1−ρ²)^c A − 1] with A a Kampé de Fériet value.
pub fn auxbeta_corr(eval: &BivariateEval) -> Result<f64, CopulaError> {
    let alpha = eval.alpha_or_err()?;
    let (nu, rho) = (eval.nu, eval.rho);
    if rho == 0.0 {
        return Ok(0.0);
    }
    let c = (nu + alpha) / 2.0;
    let r2 = rho * rho;
    let a = kampe_de_feriet(&auxbeta_kdf_spec(nu, alpha), r2, r2, &default_ctrl())?;
    Ok(nu * (c + 1.0) / alpha * ((1.0 - r2).powf(c) * a - 1.0))
}

/// (a, a)-th product moment E{Y^a(s_i) Y^a(s_j)} of the auxiliary beta
/// field.
pub fn product_moment(a: f64, eval: &BivariateEval) -> Result<f64, CopulaError> {
    let alpha = eval.alpha_or_err()?;
    if !(a > 0.0) {
        return Err(CopulaError::Domain(format!("moment order a = {a} must be positive")));
    }
    let (nu, rho) = (eval.nu, eval.rho);
    let c = (nu + alpha) / 2.0;
    let r2 = rho * rho;
    let ln_pref = 2.0 * (ln_gamma(c) + ln_gamma(nu / 2.0 + a) - ln_gamma(nu / 2.0) - ln_gamma(c + a))
        + c * (1.0 - r2).ln();
    let spec = KdFSpec {
        a_list: vec![c, c],
        b_list: vec![nu / 2.0 + a, nu / 2.0 + a],
        c_list: vec![alpha / 2.0],
        e_list: vec![c + a, c + a],
        g_list: vec![nu / 2.0],
        h_list: vec![],
    };
    let f = kampe_de_feriet(&spec, r2, r2, &default_ctrl())?;
    Ok(ln_pref.exp() * f)
}

/// Bivariate copula density of the Clayton field U_ν at uniform-scale
/// arguments. The F₄ convergence condition |√w| + |√z| < 1 holds on all of
/// (0, 1)² whenever ρ < 1, which is asserted defensively.
pub fn clayton_bipdf(u_i: f64, u_j: f64, nu: f64, rho: f64) -> Result<f64, CopulaError> {
    if !(u_i > 0.0 && u_i < 1.0 && u_j > 0.0 && u_j < 1.0) {
        return Err(CopulaError::Domain(format!(
            "clayton_bipdf arguments must lie in (0, 1), got ({u_i}, {u_j})"
        )));
    }
    if !(nu > 0.0) {
        return Err(CopulaError::Domain(format!("nu = {nu} must be positive")));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(CopulaError::Domain(format!("rho = {rho} outside [0, 1)")));
    }
    if rho == 0.0 {
        return Ok(1.0);
    }
    let (u_i, u_j) = if u_i <= u_j { (u_i, u_j) } else { (u_j, u_i) };
    let r2 = rho * rho;
    let a = u_i.powf(2.0 / nu);
    let b = u_j.powf(2.0 / nu);
    let w = r2 * a * b;
    let z = r2 * (1.0 - a) * (1.0 - b);
    debug_assert!(w.sqrt() + z.sqrt() < 1.0);
    let f4 = appell_f4(nu / 2.0 + 1.0, nu / 2.0 + 1.0, nu / 2.0, 1.0, w, z, &default_ctrl())?;
    Ok((1.0 - r2).powf(nu / 2.0 + 1.0) * f4)
}

/// Terminating hypergeometric polynomial ₂F₁(a, −m; a + 1; x) for x ∈ [0, 1].
///
/// The naive alternating sum cancels catastrophically for large m, so the
/// series is rewritten through the Pfaff transformation into
/// (1−x)^m Σⱼ m!/(m−j)! q^j/(a+1)ⱼ with q = x/(1−x): all terms positive.
/// Large positive q can push partial sums out of f64 range; those switch to
/// a log-space accumulation.
fn hyp2f1_poly(a: f64, m: usize, c: f64, x: f64) -> f64 {
    debug_assert!((c - (a + 1.0)).abs() < 1e-12);
    debug_assert!((0.0..=1.0).contains(&x));
    if m == 0 || x == 0.0 {
        return 1.0;
    }
    if x == 1.0 {
        // Chu–Vandermonde: (1)_m / (a+1)_m
        let mut v = 1.0;
        for j in 0..m {
            let jf = j as f64;
            v *= (jf + 1.0) / (c + jf);
        }
        return v;
    }
    let q = x / (1.0 - x);
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for j in 0..m {
        let jf = j as f64;
        term *= (m as f64 - jf) * q / (c + jf);
        sum += term;
        if sum > 1e290 {
            return hyp2f1_poly_ln(m, c, x, q);
        }
    }
    (1.0 - x).powi(m as i32) * sum
}

/// Log-space fallback for the positive Pfaff series.
fn hyp2f1_poly_ln(m: usize, c: f64, x: f64, q: f64) -> f64 {
    let ln_q = q.ln();
    let mut ln_term = 0.0f64;
    let mut ln_sum = 0.0f64;
    for j in 0..m {
        let jf = j as f64;
        ln_term += (m as f64 - jf).ln() + ln_q - (c + jf).ln();
        let (hi, lo) = if ln_sum >= ln_term {
            (ln_sum, ln_term)
        } else {
            (ln_term, ln_sum)
        };
        ln_sum = hi + (lo - hi).exp().ln_1p();
    }
    (m as f64 * (-x).ln_1p() + ln_sum).exp()
}

/// Bivariate copula function (cdf) of the Clayton field: the double series
/// with terminating ₂F₁ factors. Boundary values F(t, 0) = 0 and
/// F(t, 1) = t hold to series tolerance.
pub fn clayton_bicdf(t_i: f64, t_j: f64, nu: f64, rho: f64) -> Result<f64, CopulaError> {
    if !(0.0..=1.0).contains(&t_i) || !(0.0..=1.0).contains(&t_j) {
        return Err(CopulaError::Domain(format!(
            "clayton_bicdf arguments must lie in [0, 1], got ({t_i}, {t_j})"
        )));
    }
    if !(nu > 0.0) {
        return Err(CopulaError::Domain(format!("nu = {nu} must be positive")));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(CopulaError::Domain(format!("rho = {rho} outside [0, 1)")));
    }
    if t_i == 0.0 || t_j == 0.0 {
        return Ok(0.0);
    }
    if rho == 0.0 {
        return Ok(t_i * t_j);
    }
    let (t_i, t_j) = if t_i <= t_j { (t_i, t_j) } else { (t_j, t_i) };
    let ctrl = default_ctrl();
    let r2 = rho * rho;
    let a_i = t_i.powf(2.0 / nu);
    let a_j = t_j.powf(2.0 / nu);
    let half = nu / 2.0;
    let tt_pow = (t_i * t_j).powf(2.0 / nu);

    let mut total = 0.0f64;
    // k-coefficient (nu/2)_k (t_i t_j)^{2k/nu} rho^{2k} / (k! (2k+nu)^2),
    // with the (2k+nu)^2 factor applied per term below
    let mut k_coef = 1.0f64;
    let mut prev_row = f64::INFINITY;
    let mut rows_below = 0usize;
    for k in 0..ctrl.max_terms {
        let kf = k as f64;
        let ck = kf + half; // first beta argument at this k
        let denom_k = (2.0 * kf + nu) * (2.0 * kf + nu);
        // 1/B(ck, m+1)^2 by recursion; B(ck, 1) = 1/ck
        let mut inv_b2 = ck * ck;
        let mut rho_pow = 1.0f64;
        let mut row = 0.0f64;
        let mut prev_term = f64::INFINITY;
        let mut below = 0usize;
        let mut converged = false;
        for m in 0..ctrl.max_terms {
            let mf = m as f64;
            let term = k_coef / denom_k * inv_b2 * rho_pow
                * hyp2f1_poly(ck, m, ck + 1.0, a_i)
                * hyp2f1_poly(ck, m, ck + 1.0, a_j);
            row += term;
            let against = (total + row).abs().max(1e-300);
            // terms may grow before the rho^{2m} decay wins; only a
            // non-growing tail counts
            if term.abs() <= ctrl.rel_tol * against && term.abs() <= prev_term {
                below += 1;
                if below >= 3 {
                    converged = true;
                    break;
                }
            } else {
                below = 0;
            }
            prev_term = term.abs();
            // B(ck, m+2) = B(ck, m+1) (m+1)/(ck+m+1)
            let bf = (ck + mf + 1.0) / (mf + 1.0);
            inv_b2 *= bf * bf;
            rho_pow *= r2;
        }
        if !converged {
            return Err(CopulaError::Series(SpecFunError::NoConvergence {
                what: format!("clayton_bicdf inner sum at k = {k}, nu = {nu}, rho = {rho}"),
                terms: ctrl.max_terms,
            }));
        }
        total += row;
        if row.abs() <= ctrl.rel_tol * total.abs().max(1e-300) && row.abs() <= prev_row {
            rows_below += 1;
            if rows_below >= 3 {
                let v = 4.0 * t_i * t_j * (1.0 - r2).powf(half + 1.0) * total;
                return Ok(v.clamp(0.0, 1.0));
            }
        } else {
            rows_below = 0;
        }
        prev_row = row.abs();
        k_coef *= (half + kf) * tt_pow * r2 / (kf + 1.0);
    }
    Err(CopulaError::Series(SpecFunError::NoConvergence {
        what: format!("clayton_bicdf outer sum at nu = {nu}, rho = {rho}"),
        terms: ctrl.max_terms,
    }))
}

fn clayton_kdf_spec(nu: f64) -> KdFSpec {
    KdFSpec {
        a_list: vec![nu / 2.0 + 1.0, nu / 2.0 + 1.0],
        b_list: vec![nu, nu],
        c_list: vec![1.0],
        e_list: vec![nu + 1.0, nu + 1.0],
        g_list: vec![nu / 2.0],
        h_list: vec![],
    }
}

/// Correlation function of the Clayton field,
/// ρ_U = 3[(1−ρ²)^{ν/2+1} F(ρ², ρ²) − 1] with F a Kampé de Fériet value.
pub fn clayton_corr(nu: f64, rho: f64) -> Result<f64, CopulaError> {
    if !(nu > 0.0) {
        return Err(CopulaError::Domain(format!("nu = {nu} must be positive")));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(CopulaError::Domain(format!("rho = {rho} outside [0, 1)")));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let r2 = rho * rho;
    let f = kampe_de_feriet(&clayton_kdf_spec(nu), r2, r2, &default_ctrl())?;
    Ok(3.0 * ((1.0 - r2).powf(nu / 2.0 + 1.0) * f - 1.0))
}

/// Closed-form correlation of the reflection-symmetric (ν = 2) Clayton
/// field. The removable singularity at ρ = 0 is handled by the Taylor
/// expansion 2x/3 + x²/6 + x³/15 in x = ρ².
pub fn clayton_corr_sym(rho: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&rho));
    let x = rho * rho;
    if x < 1e-4 {
        return x * (2.0 / 3.0 + x * (1.0 / 6.0 + x / 15.0));
    }
    2.0 * (x * (3.0 * x - 1.0) - (x - 1.0) * (x - 1.0) * (-x).ln_1p()) / (x * x) - 3.0
}

/// Copula family used by a bivariate evaluation or a pairwise fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CopulaFamily {
    Clayton { nu: f64 },
    Gaussian,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn std_normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-(x * x) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gaussian copula density at uniform-scale arguments: the bivariate
/// standard normal density at the probit points over the product of the two
/// univariate densities. Reflection symmetric for every ρ.
pub fn gauss_copula_bipdf(u_i: f64, u_j: f64, rho: f64) -> Result<f64, CopulaError> {
    if !(u_i > 0.0 && u_i < 1.0 && u_j > 0.0 && u_j < 1.0) {
        return Err(CopulaError::Domain(format!(
            "gauss_copula_bipdf arguments must lie in (0, 1), got ({u_i}, {u_j})"
        )));
    }
    if !(rho.abs() < 1.0) {
        return Err(CopulaError::Domain(format!("|rho| = {} must be < 1", rho.abs())));
    }
    if rho == 0.0 {
        return Ok(1.0);
    }
    let (u_i, u_j) = if u_i <= u_j { (u_i, u_j) } else { (u_j, u_i) };
    let q_i = std_normal_quantile(u_i);
    let q_j = std_normal_quantile(u_j);
    let omr = 1.0 - rho * rho;
    let expo = -(rho * rho * (q_i * q_i + q_j * q_j) - 2.0 * rho * q_i * q_j) / (2.0 * omr);
    Ok(expo.exp() / omr.sqrt())
}

/// Copula density of the selected family at uniform-scale arguments.
pub fn copula_bipdf(family: &CopulaFamily, u_i: f64, u_j: f64, rho: f64) -> Result<f64, CopulaError> {
    match family {
        CopulaFamily::Clayton { nu } => clayton_bipdf(u_i, u_j, *nu, rho),
        CopulaFamily::Gaussian => gauss_copula_bipdf(u_i, u_j, rho),
    }
}

/// Bivariate density of the transformed field S = F⁻¹(U): copula density at
/// the marginal cdf values times the marginal densities. Site-specific beta
/// shapes cover the regression marginal.
pub fn beta_pair_bipdf(
    s_i: f64,
    s_j: f64,
    shapes_i: (f64, f64),
    shapes_j: (f64, f64),
    family: &CopulaFamily,
    rho: f64,
) -> Result<f64, CopulaError> {
    let f_i = reg_inc_beta(s_i, shapes_i.0, shapes_i.1)?;
    let f_j = reg_inc_beta(s_j, shapes_j.0, shapes_j.1)?;
    let c = copula_bipdf(
        family,
        f_i.clamp(1e-13, 1.0 - 1e-13),
        f_j.clamp(1e-13, 1.0 - 1e-13),
        rho,
    )?;
    Ok(c * beta_pdf(s_i, shapes_i.0, shapes_i.1) * beta_pdf(s_j, shapes_j.0, shapes_j.1))
}

/// Bivariate density under a shared marginal specification. The regression
/// marginal is site-dependent and goes through [`beta_pair_bipdf`] instead.
pub fn marginal_bipdf(
    s_i: f64,
    s_j: f64,
    spec: &MarginalSpec,
    family: &CopulaFamily,
    rho: f64,
) -> Result<f64, CopulaError> {
    match spec {
        MarginalSpec::Uniform => copula_bipdf(family, s_i, s_j, rho),
        MarginalSpec::Beta { xi, delta } => {
            beta_pair_bipdf(s_i, s_j, (*xi, *delta), (*xi, *delta), family, rho)
        }
        MarginalSpec::BetaRegression { .. } => Err(CopulaError::Domain(
            "regression marginal is site-dependent; evaluate through beta_pair_bipdf".into(),
        )),
    }
}

fn marginal_mean_var(spec: &MarginalSpec) -> Result<(f64, f64), CopulaError> {
    match spec {
        MarginalSpec::Uniform => Ok((0.5, 1.0 / 12.0)),
        MarginalSpec::Beta { xi, delta } => {
            let s = xi + delta;
            Ok((xi / s, xi * delta / (s * s * (s + 1.0))))
        }
        MarginalSpec::BetaRegression { .. } => Err(CopulaError::Domain(
            "regression marginal has site-dependent moments".into(),
        )),
    }
}

/// Correlation of the transformed field S = F⁻¹(U_ν) by tensor
/// Gauss–Legendre quadrature of the product-moment integral, standardized by
/// the marginal moments. Node doubling must move the value by less than
/// 1e-7, otherwise the call fails.
///
/// The integral is evaluated on the data scale, E{S_i S_j} =
/// ∫∫ t_i t_j f_S(t_i, t_j) dt, where the integrand stays smooth; the
/// uniform-scale form would drag the quantile's endpoint derivative into the
/// quadrature.
pub fn marginal_corr(
    spec: &MarginalSpec,
    nu: f64,
    rho: f64,
    quad_nodes: usize,
) -> Result<f64, CopulaError> {
    if rho == 0.0 {
        return Ok(0.0);
    }
    let (mean, var) = marginal_mean_var(spec)?;
    let moment = |nodes: usize| -> Result<f64, CopulaError> {
        let (x, w) = gauss_legendre_on(nodes, 0.0, 1.0);
        // marginal cdf and density at the nodes
        let (cdf, pdf): (Vec<f64>, Vec<f64>) = match spec {
            MarginalSpec::Uniform => (x.clone(), vec![1.0; nodes]),
            MarginalSpec::Beta { xi, delta } => (
                x.iter()
                    .map(|&t| reg_inc_beta(t, *xi, *delta))
                    .collect::<Result<_, _>>()?,
                x.iter().map(|&t| beta_pdf(t, *xi, *delta)).collect(),
            ),
            MarginalSpec::BetaRegression { .. } => {
                return Err(CopulaError::Domain(
                    "regression marginal has site-dependent moments".into(),
                ))
            }
        };
        let mut total = 0.0;
        for i in 0..nodes {
            let u_i = cdf[i].clamp(1e-13, 1.0 - 1e-13);
            let mut row = 0.0;
            for j in 0..nodes {
                let u_j = cdf[j].clamp(1e-13, 1.0 - 1e-13);
                row += w[j] * x[j] * pdf[j] * clayton_bipdf(u_i, u_j, nu, rho)?;
            }
            total += w[i] * x[i] * pdf[i] * row;
        }
        Ok(total)
    };
    let coarse = moment(quad_nodes)?;
    let fine = moment(2 * quad_nodes)?;
    let delta = (fine - coarse).abs();
    if delta >= 1e-7 {
        return Err(CopulaError::QuadratureNotConverged { delta });
    }
    Ok((fine - mean * mean) / var)
}

/// Blomqvist medial correlation β = 4 F(½, ½) − 1.
pub fn blomqvist_beta(nu: f64, rho: f64) -> Result<f64, CopulaError> {
    Ok(4.0 * clayton_bicdf(0.5, 0.5, nu, rho)? - 1.0)
}

/// Kendall rank correlation τ = 4 ∫ F dF − 1 by tensor quadrature of the
/// copula cdf against the copula density.
pub fn kendall_tau(nu: f64, rho: f64, quad_nodes: usize) -> Result<f64, CopulaError> {
    if rho == 0.0 {
        return Ok(0.0);
    }
    let (x, w) = gauss_legendre_on(quad_nodes, 0.0, 1.0);
    let mut total = 0.0;
    for i in 0..quad_nodes {
        let mut row = 0.0;
        for j in 0..quad_nodes {
            row += w[j]
                * clayton_bicdf(x[i], x[j], nu, rho)?
                * clayton_bipdf(x[i], x[j], nu, rho)?;
        }
        total += w[i] * row;
    }
    Ok(4.0 * total - 1.0)
}

/// Numerical probe of the lower tail-dependence ratio F(t, t)/t on a
/// caller-supplied grid of shrinking thresholds. No limit is asserted; the
/// tail behavior is only conjectured.
pub fn tail_probe_lower(nu: f64, rho: f64, ts: &[f64]) -> Result<Vec<(f64, f64)>, CopulaError> {
    ts.iter()
        .map(|&t| Ok((t, clayton_bicdf(t, t, nu, rho)? / t)))
        .collect()
}

/// Numerical probe of the upper tail-dependence ratio
/// (1 − 2t + F(t, t))/(1 − t) on a grid of thresholds approaching one.
pub fn tail_probe_upper(nu: f64, rho: f64, ts: &[f64]) -> Result<Vec<(f64, f64)>, CopulaError> {
    ts.iter()
        .map(|&t| Ok((t, (1.0 - 2.0 * t + clayton_bicdf(t, t, nu, rho)?) / (1.0 - t))))
        .collect()
}
