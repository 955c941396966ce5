//! Derivative-free simplex (Nelder–Mead) minimizer used by the composite
//! likelihood fit. Objectives may return non-finite values; those vertices
//! are treated as worst-possible so the simplex backs away from bad regions.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum OptimError {
    /// The simplex did not contract below tolerance within the iteration
    /// budget; carries the best point found for post-mortem.
    NoConvergence { best: Vec<f64>, best_value: f64, iters: usize },
    /// The objective was non-finite at the starting point.
    BadStart(String),
}

impl fmt::Display for OptimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimError::NoConvergence { best_value, iters, .. } => {
                write!(f, "simplex failed to converge after {iters} iterations (best value {best_value})")
            }
            OptimError::BadStart(msg) => write!(f, "objective not finite at start: {msg}"),
        }
    }
}

impl std::error::Error for OptimError {}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_iters: usize,
    /// Relative step used to seed the initial simplex; falls back to an
    /// absolute step for coordinates near zero.
    pub init_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            f_tol: 1e-8,
            x_tol: 1e-6,
            max_iters: 4000,
            init_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Minimize `f` from `start`; one restart from the incumbent is performed to
/// shake off premature contraction.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    opts: &SimplexOptions,
) -> Result<OptimResult, OptimError> {
    let first = run_simplex(&mut f, start, opts)?;
    let mut second = run_simplex(&mut f, &first.x, opts)?;
    second.evaluations += first.evaluations;
    second.iterations += first.iterations;
    if second.value <= first.value {
        Ok(second)
    } else {
        Ok(OptimResult {
            evaluations: second.evaluations,
            iterations: second.iterations,
            ..first
        })
    }
}

fn run_simplex<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    start: &[f64],
    opts: &SimplexOptions,
) -> Result<OptimResult, OptimError> {
    let dim = start.len();
    assert!(dim >= 1, "empty parameter vector");
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::MAX
        }
    };

    let f0 = eval(start, &mut evals);
    if f0 == f64::MAX {
        return Err(OptimError::BadStart(format!("{start:?}")));
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut values: Vec<f64> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    values.push(f0);
    for i in 0..dim {
        let mut p = start.to_vec();
        p[i] += if p[i].abs() > 1e-8 {
            p[i].abs() * opts.init_step
        } else {
            opts.init_step * 0.25
        };
        values.push(eval(&p, &mut evals));
        simplex.push(p);
    }

    let (alpha, gamma, beta, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iters = 0usize;
    loop {
        // order ascending by value
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let reorder =
            |v: &[Vec<f64>], idx: &[usize]| -> Vec<Vec<f64>> { idx.iter().map(|&i| v[i].clone()).collect() };
        simplex = reorder(&simplex, &idx);
        values = idx.iter().map(|&i| values[i]).collect();

        let spread = values[dim] - values[0];
        let xspread = (0..dim)
            .map(|j| {
                simplex
                    .iter()
                    .map(|p| p[j])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    })
            })
            .map(|(lo, hi)| hi - lo)
            .fold(0.0f64, f64::max);
        if (spread.abs() <= opts.f_tol && xspread <= opts.x_tol) || iters >= opts.max_iters {
            if iters >= opts.max_iters {
                return Err(OptimError::NoConvergence {
                    best: simplex[0].clone(),
                    best_value: values[0],
                    iters,
                });
            }
            return Ok(OptimResult {
                x: simplex[0].clone(),
                value: values[0],
                iterations: iters,
                evaluations: evals,
            });
        }
        iters += 1;

        // centroid of all but worst
        let mut centroid = vec![0.0; dim];
        for p in simplex.iter().take(dim) {
            for (c, &v) in centroid.iter_mut().zip(p) {
                *c += v / dim as f64;
            }
        }
        let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(&x, &y)| x + t * (y - x)).collect()
        };

        let reflected = lerp(&centroid, &simplex[dim], -alpha);
        let f_r = eval(&reflected, &mut evals);
        if f_r < values[0] {
            let expanded = lerp(&centroid, &simplex[dim], -gamma);
            let f_e = eval(&expanded, &mut evals);
            if f_e < f_r {
                simplex[dim] = expanded;
                values[dim] = f_e;
            } else {
                simplex[dim] = reflected;
                values[dim] = f_r;
            }
        } else if f_r < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = f_r;
        } else {
            let contracted = if f_r < values[dim] {
                lerp(&centroid, &simplex[dim], -beta)
            } else {
                lerp(&centroid, &simplex[dim], beta)
            };
            let f_c = eval(&contracted, &mut evals);
            if f_c < values[dim].min(f_r) {
                simplex[dim] = contracted;
                values[dim] = f_c;
            } else {
                // shrink towards best
                for i in 1..=dim {
                    simplex[i] = lerp(&simplex[0], &simplex[i], sigma);
                    values[i] = eval(&simplex[i], &mut evals);
                }
            }
        }
    }
}
