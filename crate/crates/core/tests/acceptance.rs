//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured quantities (visible under --nocapture).
//! Tolerances and budgets are pinned in the asserts.

mod common;

use common::*;
use copulafield::copula::{
    auxbeta_bipdf, blomqvist_beta, clayton_bicdf, clayton_bipdf, clayton_corr, clayton_corr_sym,
    marginal_bipdf, BivariateEval, CopulaFamily,
};
use copulafield::correlation::{chol_factor, corr_matrix, gw_corr, CorrelationModel, SpatialConfig};
use copulafield::fields::{
    derive_seed, sim_clayton_with_factor, transform_marginal, DependenceParams, FieldRealization,
    MarginalSpec,
};
use copulafield::inference::{
    fit, jittered_grid_sites, random_sites, with_uncertainty, CopulaChoice, FitConfig,
};
use copulafield::quad::gauss_legendre_on;
use copulafield::specfun::{appell_f4, beta_pdf, beta_quantile, reg_inc_beta, SeriesControl};
use ndarray::Array2;
use statrs::function::gamma::ln_gamma;
use std::time::Instant;

/// Brute-force double sum of the F₄ definition; the independent oracle for
/// criterion 1.
fn f4_double_sum(a: f64, b: f64, c: f64, c2: f64, w: f64, z: f64, terms: usize) -> f64 {
    let mut total = 0.0;
    for k in 0..terms {
        let kf = k as f64;
        let ln_k = ln_gamma(a + kf) - ln_gamma(a) + kf * w.ln() - ln_gamma(kf + 1.0)
            - (ln_gamma(c + kf) - ln_gamma(c));
        for m in 0..terms {
            let mf = m as f64;
            // joint Pochhammers recombined per (k, m)
            let ln_t = ln_gamma(a + kf + mf) - ln_gamma(a + kf) + ln_gamma(b + kf + mf)
                - ln_gamma(b)
                + mf * z.ln()
                - ln_gamma(mf + 1.0)
                - (ln_gamma(c2 + mf) - ln_gamma(c2));
            total += (ln_k + ln_t).exp();
        }
    }
    total
}

#[test]
fn criterion_01_f4_single_sum_matches_double_sum() {
    let started = Instant::now();
    let ctrl = SeriesControl::default();
    let (a, b, c, c2) = (2.0, 2.0, 1.5, 1.5);
    let mut max_rel: f64 = 0.0;
    for i in 1..=5 {
        for j in 1..=5 {
            let sw = 0.45 * i as f64 / 5.0;
            let sz = 0.45 * j as f64 / 5.0;
            let (w, z) = (sw * sw, sz * sz);
            let fast = appell_f4(a, b, c, c2, w, z, &ctrl).unwrap();
            let oracle = f4_double_sum(a, b, c, c2, w, z, 250);
            max_rel = max_rel.max((fast - oracle).abs() / oracle.abs());
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(max_rel < 1e-10, "max relative deviation {max_rel}");
    assert!(elapsed < 1.0, "runtime {elapsed} s exceeds 1 s");
    println!("criterion 01 PASS: F4 vs double sum, max rel {max_rel:.2e}, {elapsed:.2} s");
}

#[test]
fn criterion_02_theorem_corr_matches_closed_form_at_nu_2() {
    let started = Instant::now();
    let mut max_abs: f64 = 0.0;
    for i in 0..10 {
        let rho = 0.05 + 0.1 * i as f64;
        let kdf = clayton_corr(2.0, rho).unwrap();
        let closed = clayton_corr_sym(rho);
        max_abs = max_abs.max((kdf - closed).abs());
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(max_abs < 1e-8, "max absolute deviation {max_abs}");
    assert!(elapsed < 10.0, "runtime {elapsed} s exceeds 10 s");
    println!("criterion 02 PASS: correlation vs closed form at nu=2, max abs {max_abs:.2e}, {elapsed:.2} s");
}

#[test]
fn criterion_03_bivariate_densities_normalize() {
    let started = Instant::now();
    let nodes = 96;
    let (x, w) = gauss_legendre_on(nodes, 0.0, 1.0);
    let mut worst: f64 = 0.0;
    for &nu in &[1.0, 2.0, 5.0] {
        for &rho in &[0.1, 0.5, 0.9] {
            // Clayton copula density over (0,1)^2
            let mut total = 0.0;
            for i in 0..nodes {
                for j in 0..nodes {
                    total += w[i] * w[j] * clayton_bipdf(x[i], x[j], nu, rho).unwrap();
                }
            }
            worst = worst.max((total - 1.0).abs());

            // auxiliary beta density, integrated through the marginal
            // quantile map to absorb the nu = 1 edge singularity
            let alpha = 3.0;
            let eval = BivariateEval::new(rho, nu).unwrap().with_alpha(alpha).unwrap();
            let (sa, sb) = (nu / 2.0, alpha / 2.0);
            let q: Vec<f64> = x
                .iter()
                .map(|&v| beta_quantile(v.clamp(1e-12, 1.0 - 1e-12), sa, sb).unwrap())
                .collect();
            let dens: Vec<f64> = q.iter().map(|&y| beta_pdf(y, sa, sb)).collect();
            let mut total = 0.0;
            for i in 0..nodes {
                for j in 0..nodes {
                    total += w[i] * w[j] * auxbeta_bipdf(q[i], q[j], &eval).unwrap()
                        / (dens[i] * dens[j]);
                }
            }
            worst = worst.max((total - 1.0).abs());

            // transformed bivariate density with Beta(2, 3) marginals
            let spec = MarginalSpec::Beta { xi: 2.0, delta: 3.0 };
            let clayton = CopulaFamily::Clayton { nu };
            let mut total = 0.0;
            for i in 0..nodes {
                for j in 0..nodes {
                    total +=
                        w[i] * w[j] * marginal_bipdf(x[i], x[j], &spec, &clayton, rho).unwrap();
                }
            }
            worst = worst.max((total - 1.0).abs());
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(worst < 1e-6, "worst |integral - 1| = {worst}");
    assert!(elapsed < 120.0, "runtime {elapsed} s exceeds 2 min");
    println!("criterion 03 PASS: normalization worst deviation {worst:.2e}, {elapsed:.1} s");
}

#[test]
fn criterion_04_independence_limits_at_zero_correlation() {
    let mut worst: f64 = 0.0;
    for &nu in &[1.0, 2.0, 5.0] {
        for &t in &[0.15, 0.4, 0.5, 0.8] {
            for &s in &[0.2, 0.5, 0.95] {
                worst = worst.max((clayton_bipdf(t, s, nu, 0.0).unwrap() - 1.0).abs());
                worst = worst.max((clayton_bicdf(t, s, nu, 0.0).unwrap() - t * s).abs());
            }
        }
        worst = worst.max(clayton_corr(nu, 0.0).unwrap().abs());
        worst = worst.max(blomqvist_beta(nu, 0.0).unwrap().abs());
    }
    assert!(worst < 1e-10, "worst independence deviation {worst}");
    println!("criterion 04 PASS: independence limits, worst deviation {worst:.2e}");
}

#[test]
fn criterion_05_reflection_symmetry_only_at_nu_2() {
    let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
    let max_gap = |nu: f64, rho: f64| -> f64 {
        let mut worst: f64 = 0.0;
        for &u in &grid {
            for &v in &grid {
                let a = clayton_bipdf(u, v, nu, rho).unwrap();
                let b = clayton_bipdf(1.0 - u, 1.0 - v, nu, rho).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
        worst
    };
    let sym_05 = max_gap(2.0, 0.5);
    let sym_09 = max_gap(2.0, 0.9);
    let asym_1 = max_gap(1.0, 0.5);
    let asym_5 = max_gap(5.0, 0.5);
    assert!(sym_05 < 1e-8 && sym_09 < 1e-8, "nu=2 gaps {sym_05}, {sym_09}");
    assert!(asym_1 >= 0.01, "nu=1 gap {asym_1}");
    assert!(asym_5 >= 0.01, "nu=5 gap {asym_5}");
    println!(
        "criterion 05 PASS: reflection gaps nu=2: {sym_05:.1e}/{sym_09:.1e}, nu=1: {asym_1:.3}, nu=5: {asym_5:.3}"
    );
}

#[test]
fn criterion_06_monte_carlo_correlation_matches_theory() {
    let started = Instant::now();
    let reps = 100_000;
    let mut report = String::new();
    for &nu in &[1u32, 2, 5] {
        for &rho in &[0.3, 0.7] {
            let (a, b) = clayton_pairs(nu, rho, reps, derive_seed(4600, nu as u64 * 10 + (rho * 10.0) as u64));
            let (r, se) = corr_with_batch_se(&a, &b, 50);
            let theory = clayton_corr(nu as f64, rho).unwrap();
            assert!(
                (r - theory).abs() < 3.0 * se,
                "nu={nu} rho={rho}: MC {r} vs theory {theory}, 3se={}",
                3.0 * se
            );
            report.push_str(&format!("(nu={nu},rho={rho}: |d|={:.1e}<3se={:.1e}) ", (r - theory).abs(), 3.0 * se));
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "runtime {elapsed} s exceeds 2 min");
    println!("criterion 06 PASS: simulation vs theory {report}, {elapsed:.1} s");
}

#[test]
fn criterion_07_marginal_laws_pass_ks() {
    let n = 100_000;
    let l = Array2::<f64>::eye(1);
    let uniforms: Vec<f64> = (0..n)
        .map(|r| sim_clayton_with_factor(&l, 1, derive_seed(4700, r as u64)).unwrap()[0])
        .collect();
    let d_u = ks_statistic(&uniforms, |x| x.clamp(0.0, 1.0));
    let p_u = ks_p_value(d_u, n);
    assert!(p_u > 0.01, "uniform KS p-value {p_u} (D = {d_u})");

    // transform a second independent batch to Beta(2, 3)
    let spec = MarginalSpec::Beta { xi: 2.0, delta: 3.0 };
    let corr = CorrelationModel::generalized_wendland(0.0, 4.0, 0.2, 0.0, 2).unwrap();
    let cfg = SpatialConfig::new(Array2::zeros((1, 2))).unwrap();
    let betas: Vec<f64> = (0..n)
        .map(|r| {
            let u = sim_clayton_with_factor(&l, 2, derive_seed(4701, r as u64)).unwrap();
            let realization = FieldRealization {
                values: u,
                marginal: MarginalSpec::Uniform,
                params: DependenceParams { nu: 2, corr },
                seed: r as u64,
            };
            transform_marginal(&realization, &spec, &cfg).unwrap().values[0]
        })
        .collect();
    let d_b = ks_statistic(&betas, |x| reg_inc_beta(x.clamp(0.0, 1.0), 2.0, 3.0).unwrap());
    let p_b = ks_p_value(d_b, n);
    assert!(p_b > 0.01, "beta KS p-value {p_b} (D = {d_b})");
    println!("criterion 07 PASS: KS p-values uniform {p_u:.3}, beta {p_b:.3}");
}

#[test]
fn criterion_08_desk_scale_simulation_study() {
    let started = Instant::now();
    let truth = [0.2, -0.2, 1.5, 0.2]; // beta0, beta1, precision, range
    let n = 400;
    let replicates = 200;

    // fixed design: sites and the uniform covariate drawn once
    let coords = random_sites(n, 4801);
    let cov_flat = random_sites(n, 4802);
    let mut covs = Array2::<f64>::zeros((n, 1));
    for i in 0..n {
        covs[[i, 0]] = cov_flat[[i, 0]];
    }
    let cfg = SpatialConfig::with_covariates(coords, covs).unwrap();
    let corr = CorrelationModel::generalized_wendland(0.0, 4.0, truth[3], 0.0, 2).unwrap();
    let l = chol_factor(&corr_matrix(&cfg, &corr)).unwrap();
    let spec = MarginalSpec::BetaRegression {
        beta_coeffs: vec![truth[0], truth[1]],
        precision: truth[2],
    };
    let fit_cfg = FitConfig::new(
        vec![2],
        MarginalSpec::BetaRegression {
            beta_coeffs: vec![0.0, 0.0],
            precision: 1.0,
        },
        CorrelationModel::generalized_wendland(0.0, 4.0, 0.15, 0.0, 2).unwrap(),
        CopulaChoice::Clayton,
    )
    .unwrap();

    let mut estimates: Vec<[f64; 4]> = Vec::with_capacity(replicates);
    for rep in 0..replicates {
        let u = sim_clayton_with_factor(&l, 2, derive_seed(4803, rep as u64)).unwrap();
        let realization = FieldRealization {
            values: u,
            marginal: MarginalSpec::Uniform,
            params: DependenceParams { nu: 2, corr },
            seed: rep as u64,
        };
        let data = transform_marginal(&realization, &spec, &cfg).unwrap();
        let res = fit(&data.values, &cfg, &fit_cfg).unwrap();
        estimates.push([
            res.theta_hat[0],
            res.theta_hat[1],
            res.theta_hat[2],
            res.theta_hat[3],
        ]);
    }

    // Reference mean squared errors of the full-scale study (n = 1000,
    // 1000 replicates) at nu = 2, delta = 1.5: beta0, beta1, b, delta.
    let reference_mse = [0.0104, 0.0223, 0.0007, 0.0070];
    let param_names = ["beta0", "beta1", "precision", "range"];
    let ref_for = [reference_mse[0], reference_mse[1], reference_mse[3], reference_mse[2]];
    let mut lines = String::new();
    for k in 0..4 {
        let errs: Vec<f64> = estimates.iter().map(|e| e[k] - truth[k]).collect();
        let bias = mean(&errs);
        let mse = errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64;
        assert!(
            bias.abs() < 0.03,
            "{}: |mean bias| = {} exceeds 0.03",
            param_names[k],
            bias.abs()
        );
        let factor = mse / ref_for[k];
        assert!(
            factor < 3.0,
            "{}: MSE {mse} is {factor:.2}x the full-scale reference {}",
            param_names[k],
            ref_for[k]
        );
        lines.push_str(&format!("{}: bias {bias:.4}, MSE {mse:.4} ({factor:.2}x ref); ", param_names[k]));
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 1800.0, "runtime {elapsed} s exceeds 30 min");
    println!("criterion 08 PASS: {lines}{elapsed:.0} s");
}

#[test]
fn criterion_09_plic_prefers_clayton_over_gaussian_benchmark() {
    let started = Instant::now();
    let datasets = 50;
    let truth_nu = 4u32;
    let (beta0, prec, b_sup) = (0.5, 4.0, 0.35);
    let corr = CorrelationModel::generalized_wendland(0.0, 4.0, b_sup, 0.0, 2).unwrap();
    let spec = MarginalSpec::BetaRegression {
        beta_coeffs: vec![beta0],
        precision: prec,
    };
    let start_marginal = MarginalSpec::BetaRegression {
        beta_coeffs: vec![0.0],
        precision: 1.0,
    };
    let corr_start = CorrelationModel::generalized_wendland(0.0, 4.0, 0.25, 0.0, 2).unwrap();
    let mut clayton_wins = 0usize;
    for rep in 0..datasets {
        let coords = jittered_grid_sites(11, 0.45, derive_seed(4900, rep));
        let cfg = SpatialConfig::new(coords).unwrap();
        let l = chol_factor(&corr_matrix(&cfg, &corr)).unwrap();
        let u = sim_clayton_with_factor(&l, truth_nu, derive_seed(4901, rep)).unwrap();
        let realization = FieldRealization {
            values: u,
            marginal: MarginalSpec::Uniform,
            params: DependenceParams { nu: truth_nu, corr },
            seed: rep,
        };
        let data = transform_marginal(&realization, &spec, &cfg).unwrap();

        let mut plics = Vec::new();
        for copula in [CopulaChoice::Clayton, CopulaChoice::Gaussian] {
            let fit_cfg = FitConfig::new(
                vec![truth_nu],
                start_marginal.clone(),
                corr_start,
                copula,
            )
            .unwrap();
            let res = fit(&data.values, &cfg, &fit_cfg).unwrap();
            let (res, _) =
                with_uncertainty(res, &data.values, &cfg, &fit_cfg, 30, derive_seed(4902, rep))
                    .unwrap();
            plics.push(res.plic.unwrap());
        }
        if plics[0] < plics[1] {
            clayton_wins += 1;
        }
    }
    let share = clayton_wins as f64 / datasets as f64;
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        share >= 0.6,
        "Clayton PLIC preferred in only {clayton_wins}/{datasets} datasets"
    );
    println!("criterion 09 PASS: Clayton PLIC lower in {clayton_wins}/{datasets} ({share:.2}), {elapsed:.0} s");
}

#[test]
fn criterion_10_boundary_limits() {
    let near_one = clayton_corr_sym(1.0 - 1e-8);
    assert!((near_one - 1.0).abs() < 1e-6, "corr at rho -> 1: {near_one}");

    let model = CorrelationModel::generalized_wendland(0.0, 4.0, 0.15, 0.0, 2).unwrap();
    let at_b = gw_corr(0.15, &model);
    let just_inside = gw_corr(0.15 * (1.0 - 1e-9), &model);
    assert!(at_b == 0.0 && just_inside < 1e-6, "support boundary: {at_b}, {just_inside}");

    let smooth = CorrelationModel::generalized_wendland(1.0, 4.0, 0.15, 0.0, 2).unwrap();
    let at_b_smooth = gw_corr(0.15, &smooth);
    let inside_smooth = gw_corr(0.15 * (1.0 - 1e-9), &smooth);
    assert!(at_b_smooth == 0.0 && inside_smooth < 1e-6);
    println!(
        "criterion 10 PASS: corr(rho->1) = {near_one:.8}, support boundary values {just_inside:.1e}/{inside_smooth:.1e}"
    );
}
