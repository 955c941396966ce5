//! Shared oracles for the integration suites: Kolmogorov–Smirnov helpers,
//! moment utilities, and Monte Carlo two-site pair generators that bypass
//! the n × n machinery.

#![allow(dead_code)]

use copulafield::correlation::chol_factor;
use copulafield::fields::{derive_seed, sim_aux_beta_with_factor, sim_clayton_with_factor};
use ndarray::{array, Array2};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    num / (da * db).sqrt()
}

/// Kolmogorov–Smirnov statistic of `values` against a cdf.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Asymptotic Kolmogorov p-value: P(sqrt(n) D > lambda).
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let lambda = (n as f64).sqrt() * d;
    let mut p = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        p += 2.0 * sign * (-2.0 * jf * jf * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

/// Monte Carlo pairs of a two-site Clayton field at underlying correlation
/// rho: returns the two marginal sample vectors.
pub fn clayton_pairs(nu: u32, rho: f64, reps: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let l = two_site_factor(rho);
    let mut a = Vec::with_capacity(reps);
    let mut b = Vec::with_capacity(reps);
    for r in 0..reps {
        let u = sim_clayton_with_factor(&l, nu, derive_seed(seed, r as u64)).unwrap();
        a.push(u[0]);
        b.push(u[1]);
    }
    (a, b)
}

pub fn aux_beta_pairs(nu: u32, alpha: u32, rho: f64, reps: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let l = two_site_factor(rho);
    let mut a = Vec::with_capacity(reps);
    let mut b = Vec::with_capacity(reps);
    for r in 0..reps {
        let y = sim_aux_beta_with_factor(&l, nu, alpha, derive_seed(seed, r as u64)).unwrap();
        a.push(y[0]);
        b.push(y[1]);
    }
    (a, b)
}

pub fn two_site_factor(rho: f64) -> Array2<f64> {
    chol_factor(&array![[1.0, rho], [rho, 1.0]]).unwrap()
}

/// Correlation of paired samples plus a batch-resampling standard error
/// (the samples are split into `batches` blocks and the spread of per-block
/// correlations estimates the Monte Carlo error of the pooled estimate).
pub fn corr_with_batch_se(a: &[f64], b: &[f64], batches: usize) -> (f64, f64) {
    let r = pearson(a, b);
    let block = a.len() / batches;
    let mut rs = Vec::with_capacity(batches);
    for k in 0..batches {
        let lo = k * block;
        let hi = lo + block;
        rs.push(pearson(&a[lo..hi], &b[lo..hi]));
    }
    let se = (variance(&rs) / batches as f64).sqrt();
    (r, se)
}
