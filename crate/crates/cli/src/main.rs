//! Command-line workflows: simulate copula-driven random fields, fit them by
//! weighted pairwise composite likelihood, and emit plot-ready diagnostics.
//! Errors leave on stderr as one JSON object and a nonzero exit code.

mod io;

use clap::{Args, Parser, Subcommand, ValueEnum};
use copulafield::copula::{clayton_bipdf, clayton_corr, std_normal_cdf, std_normal_pdf};
use copulafield::correlation::{chol_factor, corr_matrix, CorrelationModel, SpatialConfig};
use copulafield::diagnostics::empirical_semivariogram;
use copulafield::fields::{
    derive_seed, rescale_bounded, sim_clayton_with_factor, transform_marginal, DependenceParams,
    FieldRealization, MarginalSpec,
};
use copulafield::inference::{fit as run_fit, random_sites, with_uncertainty, CopulaChoice, FitConfig};
use copulafield::optim::SimplexOptions;
use io::Dataset;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "copulafield", version, about = "Spatial copula random fields: simulation, fitting, diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a random field at uniform random sites in the unit square.
    Simulate(SimulateArgs),
    /// Fit marginal and dependence parameters by weighted pairwise composite likelihood.
    Fit(FitArgs),
    /// Empirical semivariogram of a dataset.
    Variogram(VariogramArgs),
    /// Bivariate copula density on a grid, or correlation-vs-distance curves.
    Density(DensityArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MarginalArg {
    Uniform,
    Beta,
    BetaReg,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of sites.
    #[arg(long, default_value_t = 400)]
    n: usize,
    /// Correlation family (only the Generalized Wendland model is wired in).
    #[arg(long, default_value = "gw")]
    model: String,
    /// Generalized Wendland smoothness.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Generalized Wendland shape.
    #[arg(long, default_value_t = 4.0)]
    mu: f64,
    /// Compact support / range b.
    #[arg(long, default_value_t = 0.2)]
    range: f64,
    /// Nugget proportion in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    nugget: f64,
    /// Reflection-(a)symmetry parameter of the Clayton field.
    #[arg(long, default_value_t = 2)]
    nu: u32,
    #[arg(long, value_enum, default_value_t = MarginalArg::Uniform)]
    marginal: MarginalArg,
    /// Beta shape xi (beta marginal).
    #[arg(long, default_value_t = 2.0)]
    xi: f64,
    /// Beta shape delta (beta marginal).
    #[arg(long, default_value_t = 3.0)]
    delta_shape: f64,
    /// Regression coefficients, comma separated, intercept first (beta-reg marginal).
    #[arg(long, value_delimiter = ',', default_value = "0.2,-0.2")]
    beta_coeffs: Vec<f64>,
    /// Beta precision (beta-reg marginal).
    #[arg(long, default_value_t = 1.5)]
    precision: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with header x,y,value[,cov1,...].
    #[arg(long)]
    data: PathBuf,
    /// JSON fit configuration (marginal family, starts, correlation shape).
    #[arg(long)]
    config: PathBuf,
    /// Nearest-neighbor order m of the pairwise weights.
    #[arg(long, default_value_t = 2)]
    neighbors: usize,
    /// Integer nu values to profile over.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,6")]
    nu_grid: Vec<u32>,
    #[arg(long, value_enum, default_value_t = CopulaArg::Clayton)]
    copula: CopulaArg,
    /// Parametric bootstrap replicates for standard errors and PLIC
    /// (0 skips the uncertainty stage).
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    /// Seed for the bootstrap simulations.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CopulaArg {
    Clayton,
    Gaussian,
}

#[derive(Args)]
struct VariogramArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 15)]
    bins: usize,
    #[arg(long)]
    maxdist: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    Uniform,
    GaussianMargins,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long, default_value_t = 2.0)]
    nu: f64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 81)]
    grid: usize,
    /// uniform: copula density on (0,1)²; gaussian-margins: the bivariate
    /// density after mapping both margins through the standard normal.
    #[arg(long, value_enum, default_value_t = TransformArg::Uniform)]
    transform: TransformArg,
    /// Emit correlation-vs-distance curves for these nu values instead of a
    /// density grid (Generalized Wendland underlying correlation).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    curve_nu: Option<Vec<f64>>,
    /// Range of the Generalized Wendland model for --curve-nu.
    #[arg(long, default_value_t = 0.15)]
    curve_range: f64,
    /// Largest distance of the curve grid.
    #[arg(long, default_value_t = 0.2)]
    curve_maxdist: f64,
    /// Number of curve grid points.
    #[arg(long, default_value_t = 60)]
    curve_points: usize,
    #[arg(long)]
    out: PathBuf,
}

/// JSON fit configuration.
#[derive(Deserialize)]
struct FitFileConfig {
    marginal: MarginalConfig,
    #[serde(default)]
    gw_delta: f64,
    #[serde(default = "default_gw_mu")]
    gw_mu: f64,
    #[serde(default = "default_range_start")]
    range_start: f64,
    #[serde(default)]
    nugget: Option<NuggetConfig>,
    /// Optional bounded-support endpoints (a1, a2); data are mapped onto
    /// (0, 1) before fitting.
    #[serde(default)]
    support: Option<(f64, f64)>,
    #[serde(default)]
    optimizer: Option<OptimizerConfig>,
}

fn default_gw_mu() -> f64 {
    4.0
}
fn default_range_start() -> f64 {
    0.1
}

#[derive(Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum MarginalConfig {
    Uniform,
    Beta {
        #[serde(default = "one")]
        xi_start: f64,
        #[serde(default = "one")]
        delta_start: f64,
    },
    BetaRegression {
        #[serde(default)]
        beta_start: Option<Vec<f64>>,
        #[serde(default = "one")]
        precision_start: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
struct NuggetConfig {
    #[serde(default)]
    fit: bool,
    #[serde(default)]
    start: f64,
}

#[derive(Deserialize)]
struct OptimizerConfig {
    #[serde(default = "default_f_tol")]
    f_tol: f64,
    #[serde(default = "default_x_tol")]
    x_tol: f64,
    #[serde(default = "default_max_iters")]
    max_iters: usize,
}

fn default_f_tol() -> f64 {
    1e-8
}
fn default_x_tol() -> f64 {
    1e-6
}
fn default_max_iters() -> usize {
    4000
}

#[derive(Serialize)]
struct FitReport {
    copula: CopulaChoice,
    nu_selected: Option<u32>,
    estimates: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    std_errors: Option<BTreeMap<String, f64>>,
    wpl_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    plic: Option<f64>,
    nu_profile: Vec<(u32, f64)>,
    pair_count: usize,
    boundary_flags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    godambe_inv: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    support: Option<(f64, f64)>,
    wall_time_s: f64,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Variogram(args) => cmd_variogram(args),
        Command::Density(args) => cmd_density(args),
    };
    if let Err(msg) = outcome {
        eprintln!("{}", serde_json::json!({ "error": msg }));
        std::process::exit(1);
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), String> {
    if args.model != "gw" {
        return Err(format!("unknown correlation model {:?}; available: gw", args.model));
    }
    let corr = CorrelationModel::generalized_wendland(args.delta, args.mu, args.range, args.nugget, 2)
        .map_err(|e| e.to_string())?;
    let coords = random_sites(args.n, derive_seed(args.seed, 0xc0));
    let (spec, cfg, covariate_names) = match args.marginal {
        MarginalArg::Uniform => (
            MarginalSpec::Uniform,
            SpatialConfig::new(coords).map_err(|e| e.to_string())?,
            vec![],
        ),
        MarginalArg::Beta => (
            MarginalSpec::Beta { xi: args.xi, delta: args.delta_shape },
            SpatialConfig::new(coords).map_err(|e| e.to_string())?,
            vec![],
        ),
        MarginalArg::BetaReg => {
            // one uniform covariate per slope coefficient
            let k = args.beta_coeffs.len().saturating_sub(1);
            if k == 0 {
                return Err("beta-reg needs at least an intercept and one slope".into());
            }
            let flat = random_sites(args.n * k, derive_seed(args.seed, 0xc1));
            let mut covs = Array2::<f64>::zeros((args.n, k));
            for i in 0..args.n {
                for j in 0..k {
                    covs[[i, j]] = flat[[i * k + j, 0]];
                }
            }
            (
                MarginalSpec::BetaRegression {
                    beta_coeffs: args.beta_coeffs.clone(),
                    precision: args.precision,
                },
                SpatialConfig::with_covariates(coords, covs).map_err(|e| e.to_string())?,
                (1..=k).map(|j| format!("cov{j}")).collect(),
            )
        }
    };
    let l = chol_factor(&corr_matrix(&cfg, &corr)).map_err(|e| e.to_string())?;
    let u = sim_clayton_with_factor(&l, args.nu, derive_seed(args.seed, 0xc2))
        .map_err(|e| e.to_string())?;
    let realization = FieldRealization {
        values: u,
        marginal: MarginalSpec::Uniform,
        params: DependenceParams { nu: args.nu, corr },
        seed: args.seed,
    };
    let data = transform_marginal(&realization, &spec, &cfg).map_err(|e| e.to_string())?;
    Dataset {
        coords: cfg.coords.clone(),
        values: data.values,
        covariates: cfg.covariates.clone(),
        covariate_names,
    }
    .write(&args.out)
    .map_err(|e| e.to_string())
}

fn cmd_fit(args: FitArgs) -> Result<(), String> {
    let started = Instant::now();
    let dataset = Dataset::read(&args.data).map_err(|e| e.to_string())?;
    let cfg = dataset.spatial_config().map_err(|e| e.to_string())?;
    let file: FitFileConfig = serde_json::from_str(
        &std::fs::read_to_string(&args.config).map_err(|e| e.to_string())?,
    )
    .map_err(|e| format!("config: {e}"))?;

    let mut values = dataset.values.clone();
    if let Some((a1, a2)) = file.support {
        values = values
            .iter()
            .map(|&v| rescale_bounded(v, a1, a2).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
    }

    let marginal_start = match &file.marginal {
        MarginalConfig::Uniform => MarginalSpec::Uniform,
        MarginalConfig::Beta { xi_start, delta_start } => {
            MarginalSpec::Beta { xi: *xi_start, delta: *delta_start }
        }
        MarginalConfig::BetaRegression { beta_start, precision_start } => {
            let k = cfg.covariates.as_ref().map_or(0, |c| c.ncols());
            let coeffs = beta_start.clone().unwrap_or_else(|| vec![0.0; k + 1]);
            MarginalSpec::BetaRegression { beta_coeffs: coeffs, precision: *precision_start }
        }
    };
    let nugget = file.nugget.as_ref().map_or((false, 0.0), |n| (n.fit, n.start));
    let corr_start =
        CorrelationModel::generalized_wendland(file.gw_delta, file.gw_mu, file.range_start, nugget.1, 2)
            .map_err(|e| e.to_string())?;
    let copula = match args.copula {
        CopulaArg::Clayton => CopulaChoice::Clayton,
        CopulaArg::Gaussian => CopulaChoice::Gaussian,
    };
    let mut fit_cfg = FitConfig::new(args.nu_grid.clone(), marginal_start, corr_start, copula)
        .map_err(|e| e.to_string())?;
    fit_cfg.neighbor_order = args.neighbors;
    fit_cfg.fit_nugget = nugget.0;
    if let Some(o) = &file.optimizer {
        fit_cfg.optimizer = SimplexOptions {
            f_tol: o.f_tol,
            x_tol: o.x_tol,
            max_iters: o.max_iters,
            ..Default::default()
        };
    }

    let mut result = run_fit(&values, &cfg, &fit_cfg).map_err(|e| e.to_string())?;
    if args.bootstrap > 0 {
        let (updated, _) = with_uncertainty(result, &values, &cfg, &fit_cfg, args.bootstrap, args.seed)
            .map_err(|e| e.to_string())?;
        result = updated;
    }

    let estimates: BTreeMap<String, f64> = result
        .param_names
        .iter()
        .cloned()
        .zip(result.theta_hat.iter().copied())
        .collect();
    let std_errors = result.std_errors.as_ref().map(|ses| {
        result
            .param_names
            .iter()
            .cloned()
            .zip(ses.iter().copied())
            .collect()
    });
    let report = FitReport {
        copula: result.copula,
        nu_selected: result.nu_selected,
        estimates,
        std_errors,
        wpl_max: result.wpl_max,
        plic: result.plic,
        nu_profile: result.nu_profile.clone(),
        pair_count: result.pair_count,
        boundary_flags: result.boundary_flags.clone(),
        godambe_inv: result.godambe_inv.clone(),
        support: file.support,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    std::fs::write(
        &args.out,
        serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())
}

fn cmd_variogram(args: VariogramArgs) -> Result<(), String> {
    let dataset = Dataset::read(&args.data).map_err(|e| e.to_string())?;
    let cfg = dataset.spatial_config().map_err(|e| e.to_string())?;
    let bins = empirical_semivariogram(&cfg, &dataset.values, args.bins, args.maxdist)
        .map_err(|e| e.to_string())?;
    let mut out = String::from("center,semivariance,pairs\n");
    for b in bins {
        out.push_str(&format!("{},{},{}\n", b.center, b.semivariance, b.pairs));
    }
    std::fs::write(&args.out, out).map_err(|e| e.to_string())
}

fn cmd_density(args: DensityArgs) -> Result<(), String> {
    if let Some(nus) = &args.curve_nu {
        // correlation-vs-distance curves under a Generalized Wendland model
        let corr = CorrelationModel::generalized_wendland(0.0, 4.0, args.curve_range, 0.0, 2)
            .map_err(|e| e.to_string())?;
        let mut out = String::from("dist,nu,corr\n");
        for i in 0..args.curve_points {
            let d = args.curve_maxdist * i as f64 / (args.curve_points - 1).max(1) as f64;
            let rho = corr.corr(d);
            for &nu in nus {
                // zero lag: the correlation is one by definition
                let c = if rho >= 1.0 {
                    1.0
                } else {
                    clayton_corr(nu, rho).map_err(|e| e.to_string())?
                };
                out.push_str(&format!("{d},{nu},{c}\n"));
            }
        }
        return std::fs::write(&args.out, out).map_err(|e| e.to_string());
    }
    if args.grid < 2 {
        return Err("grid must have at least 2 points".into());
    }
    let mut out = String::new();
    match args.transform {
        TransformArg::Uniform => {
            out.push_str("u,v,density\n");
            for i in 0..args.grid {
                let u = (i as f64 + 0.5) / args.grid as f64;
                for j in 0..args.grid {
                    let v = (j as f64 + 0.5) / args.grid as f64;
                    let d = clayton_bipdf(u, v, args.nu, args.rho).map_err(|e| e.to_string())?;
                    out.push_str(&format!("{u},{v},{d}\n"));
                }
            }
        }
        TransformArg::GaussianMargins => {
            // density of the field after the probit transform of both margins
            out.push_str("s1,s2,density\n");
            let lim = 3.0;
            for i in 0..args.grid {
                let s1 = -lim + 2.0 * lim * i as f64 / (args.grid - 1) as f64;
                for j in 0..args.grid {
                    let s2 = -lim + 2.0 * lim * j as f64 / (args.grid - 1) as f64;
                    let u = std_normal_cdf(s1).clamp(1e-13, 1.0 - 1e-13);
                    let v = std_normal_cdf(s2).clamp(1e-13, 1.0 - 1e-13);
                    let d = clayton_bipdf(u, v, args.nu, args.rho).map_err(|e| e.to_string())?
                        * std_normal_pdf(s1)
                        * std_normal_pdf(s2);
                    out.push_str(&format!("{s1},{s2},{d}\n"));
                }
            }
        }
    }
    std::fs::write(&args.out, out).map_err(|e| e.to_string())
}
