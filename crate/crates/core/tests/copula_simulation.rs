//! Cross-checks of the closed-form bivariate quantities against Monte Carlo
//! simulation of the corresponding fields.

mod common;

use common::*;
use copulafield::copula::{
    auxbeta_corr, bigamma_pdf, blomqvist_beta, clayton_corr, kendall_tau, marginal_corr,
    BivariateEval,
};
use copulafield::fields::{derive_seed, sim_gamma_with_factor, transform_marginal};
use copulafield::fields::{FieldRealization, MarginalSpec};
use copulafield::specfun::beta_quantile;

#[test]
fn auxbeta_corr_matches_simulation() {
    let (nu, alpha, rho) = (2u32, 2u32, 0.8);
    let reps = 200_000;
    let (a, b) = aux_beta_pairs(nu, alpha, rho, reps, 71);
    let (r, se) = corr_with_batch_se(&a, &b, 50);
    let eval = BivariateEval::new(rho, nu as f64)
        .unwrap()
        .with_alpha(alpha as f64)
        .unwrap();
    let theory = auxbeta_corr(&eval).unwrap();
    assert!(
        (r - theory).abs() < 3.0 * se,
        "MC {r} vs theory {theory} (3se = {})",
        3.0 * se
    );
}

#[test]
fn clayton_corr_matches_simulation_smoke() {
    // the full (nu, rho) grid runs in the acceptance suite
    let (nu, rho) = (1u32, 0.6);
    let (a, b) = clayton_pairs(nu, rho, 150_000, 73);
    let (r, se) = corr_with_batch_se(&a, &b, 50);
    let theory = clayton_corr(nu as f64, rho).unwrap();
    assert!((r - theory).abs() < 3.0 * se, "MC {r} vs theory {theory}");
}

#[test]
fn blomqvist_matches_sign_concordance() {
    let (nu, rho) = (2u32, 0.8);
    let reps = 200_000;
    let (a, b) = clayton_pairs(nu, rho, reps, 79);
    let conc: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(&u, &v)| if (u - 0.5) * (v - 0.5) > 0.0 { 1.0 } else { -1.0 })
        .collect();
    let est = mean(&conc);
    let se = (variance(&conc) / reps as f64).sqrt();
    let theory = blomqvist_beta(nu as f64, rho).unwrap();
    assert!(
        (est - theory).abs() < 3.0 * se,
        "MC {est} vs theory {theory} (3se = {})",
        3.0 * se
    );
}

#[test]
fn kendall_matches_concordance_estimator() {
    let (nu, rho) = (2u32, 0.6);
    let reps = 60_000;
    let (a, b) = clayton_pairs(nu, rho, reps, 83);
    // concordance over disjoint consecutive pairs keeps draws independent
    let mut conc = Vec::with_capacity(reps / 2);
    for k in (0..reps - 1).step_by(2) {
        let s = (a[k] - a[k + 1]) * (b[k] - b[k + 1]);
        conc.push(if s > 0.0 { 1.0 } else { -1.0 });
    }
    let est = mean(&conc);
    let se = (variance(&conc) / conc.len() as f64).sqrt();
    let theory = kendall_tau(nu as f64, rho, 48).unwrap();
    assert!(
        (est - theory).abs() < 3.0 * se,
        "MC {est} vs theory {theory} (3se = {})",
        3.0 * se
    );
}

#[test]
fn marginal_corr_matches_transformed_pairs() {
    let (nu, rho) = (2u32, 0.7);
    let (xi, delta) = (2.0, 2.0);
    let reps = 150_000;
    let (a, b) = clayton_pairs(nu, rho, reps, 89);
    let qa: Vec<f64> = a.iter().map(|&u| beta_quantile(u, xi, delta).unwrap()).collect();
    let qb: Vec<f64> = b.iter().map(|&u| beta_quantile(u, xi, delta).unwrap()).collect();
    let (r, se) = corr_with_batch_se(&qa, &qb, 50);
    let theory = marginal_corr(&MarginalSpec::Beta { xi, delta }, nu as f64, rho, 64).unwrap();
    assert!(
        (r - theory).abs() < 3.0 * se,
        "MC {r} vs theory {theory} (3se = {})",
        3.0 * se
    );
}

#[test]
fn bigamma_density_matches_histogram() {
    // chi-square goodness of fit of simulated Gamma pairs against the
    // density integrated over a coarse grid
    let (psi, rho) = (2u32, 0.7);
    let reps = 100_000;
    let l = two_site_factor(rho);
    let mut a = Vec::with_capacity(reps);
    let mut b = Vec::with_capacity(reps);
    for r in 0..reps {
        let g = sim_gamma_with_factor(&l, psi, derive_seed(97, r as u64)).unwrap();
        a.push(g[0]);
        b.push(g[1]);
    }
    // 6x6 grid over [0, 3]^2 with an overflow cell catching the rest
    let edges = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let cells = 6;
    let mut observed = vec![vec![0.0f64; cells + 1]; cells + 1];
    let locate = |v: f64| -> usize {
        for c in 0..cells {
            if v < edges[c + 1] {
                return c;
            }
        }
        cells
    };
    for (x, y) in a.iter().zip(&b) {
        observed[locate(*x)][locate(*y)] += 1.0;
    }
    // expected mass per cell by midpoint quadrature on a fine sub-grid
    let sub = 12;
    let mut chi2 = 0.0;
    let mut dof = 0usize;
    for ci in 0..cells {
        for cj in 0..cells {
            let (x0, x1) = (edges[ci], edges[ci + 1]);
            let (y0, y1) = (edges[cj], edges[cj + 1]);
            let hx = (x1 - x0) / sub as f64;
            let hy = (y1 - y0) / sub as f64;
            let mut p = 0.0;
            for i in 0..sub {
                for j in 0..sub {
                    let gx = x0 + (i as f64 + 0.5) * hx;
                    let gy = y0 + (j as f64 + 0.5) * hy;
                    p += bigamma_pdf(gx, gy, psi as f64, rho).unwrap() * hx * hy;
                }
            }
            let expected = p * reps as f64;
            if expected >= 10.0 {
                let d = observed[ci][cj] - expected;
                chi2 += d * d / expected;
                dof += 1;
            }
        }
    }
    // chi-square 99.9th percentile is roughly dof + 4 sqrt(2 dof) at these
    // sizes; quadrature bias is second-order with the fine sub-grid
    let bound = dof as f64 + 4.0 * (2.0 * dof as f64).sqrt();
    assert!(chi2 < bound, "chi2 = {chi2} with {dof} cells (bound {bound})");
}

#[test]
fn transformed_field_tracks_theoretical_semivariogram() {
    use copulafield::correlation::{chol_factor, corr_matrix, CorrelationModel, SpatialConfig};
    use copulafield::diagnostics::{empirical_semivariogram, theoretical_semivariogram};
    use copulafield::fields::{sim_clayton_with_factor, DependenceParams};
    use copulafield::inference::random_sites;

    let corr = CorrelationModel::generalized_wendland(0.0, 4.0, 0.35, 0.0, 2).unwrap();
    let cfg = SpatialConfig::new(random_sites(700, 101)).unwrap();
    let l = chol_factor(&corr_matrix(&cfg, &corr)).unwrap();
    let spec = MarginalSpec::Beta { xi: 2.0, delta: 3.0 };
    // average the empirical curve over replicates to tame noise
    let n_bins = 8;
    let max_dist = 0.4;
    let mut acc = vec![0.0f64; n_bins];
    let reps = 30;
    for rep in 0..reps {
        let u = sim_clayton_with_factor(&l, 2, derive_seed(617, rep)).unwrap();
        let realization = FieldRealization {
            values: u,
            marginal: MarginalSpec::Uniform,
            params: DependenceParams { nu: 2, corr },
            seed: rep,
        };
        let s = transform_marginal(&realization, &spec, &cfg).unwrap();
        let bins = empirical_semivariogram(&cfg, &s.values, n_bins, max_dist).unwrap();
        assert_eq!(bins.len(), n_bins);
        for (k, bin) in bins.iter().enumerate() {
            acc[k] += bin.semivariance / reps as f64;
        }
    }
    // pairs crowd towards the outer edge of a distance bin, so theory is
    // evaluated at each bin's mean pair distance rather than its center
    let width = max_dist / n_bins as f64;
    let mut dist_sum = vec![0.0f64; n_bins];
    let mut dist_count = vec![0usize; n_bins];
    let n = cfg.n_sites();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = cfg.dist(i, j);
            if d < max_dist {
                let bin = ((d / width) as usize).min(n_bins - 1);
                dist_sum[bin] += d;
                dist_count[bin] += 1;
            }
        }
    }
    let grid: Vec<f64> = (0..n_bins).map(|k| dist_sum[k] / dist_count[k] as f64).collect();
    let params = DependenceParams { nu: 2, corr };
    let theory = theoretical_semivariogram(&spec, &params, &grid, 48).unwrap();
    for k in 0..n_bins {
        let rel = (acc[k] - theory[k].1).abs() / theory[k].1;
        assert!(
            rel < 0.10,
            "bin {k}: empirical {} vs theory {} (rel {rel})",
            acc[k],
            theory[k].1
        );
    }
}
