//! Classical estimators trained on the contaminated data.
//!
//! These are the comparison points for the expander pipeline: OLS, ridge,
//! Huber regression by IRLS, and RANSAC. Hyperparameter defaults follow
//! common library behavior; none of these methods is expected to survive
//! a minority-inlier regime.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::index;

use crate::error::{Error, Result};
use crate::numkit;
use crate::rng::{domain, RngLabel};

/// A fitted baseline.
#[derive(Debug, Clone)]
pub struct BaselineFit {
    pub coefficients: Array1<f64>,
    pub method: &'static str,
    /// IRLS / trial iterations actually used, where applicable.
    pub iterations: usize,
}

fn normal_equations(x: &ArrayView2<f64>, y: &ArrayView1<f64>) -> (Array2<f64>, Array1<f64>) {
    (x.t().dot(x), x.t().dot(y))
}

/// Ordinary least squares via the normal equations.
pub fn ols_fit(x: &ArrayView2<f64>, y: &ArrayView1<f64>) -> Result<BaselineFit> {
    check_shapes(x, y)?;
    let (gram, rhs) = normal_equations(x, y);
    let coefficients = numkit::ridge_solve(&gram.view(), &rhs.view(), 0.0)
        .map_err(|_| Error::SingularDesign("X^T X is not positive definite".into()))?;
    Ok(BaselineFit {
        coefficients,
        method: "ols",
        iterations: 1,
    })
}

/// Ridge regression: solves `(X^T X + lambda I) w = X^T y` (unnormalized
/// Gram matrix, so small lambdas are gentle at large n).
pub fn ridge_fit(x: &ArrayView2<f64>, y: &ArrayView1<f64>, lambda: f64) -> Result<BaselineFit> {
    check_shapes(x, y)?;
    if lambda < 0.0 {
        return Err(Error::Parameter(
            "ridge_fit: lambda must be nonnegative".into(),
        ));
    }
    let (gram, rhs) = normal_equations(x, y);
    let coefficients = numkit::ridge_solve(&gram.view(), &rhs.view(), lambda)
        .map_err(|_| Error::SingularDesign("X^T X + lambda I is not positive definite".into()))?;
    Ok(BaselineFit {
        coefficients,
        method: "ridge",
        iterations: 1,
    })
}

/// Huber regression by iteratively reweighted least squares.
///
/// Row weights are `min(1, delta / |r_i|)`. When `delta` is `None` it is
/// set to 1.35 times the MAD-based residual scale of an initial OLS fit.
pub fn huber_fit(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    delta: Option<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<BaselineFit> {
    check_shapes(x, y)?;
    let init = ols_fit(x, y)?;
    let mut w = init.coefficients;
    let delta = match delta {
        Some(v) if v > 0.0 => v,
        Some(_) => return Err(Error::Parameter("huber_fit: delta must be positive".into())),
        None => {
            let residuals = y - &x.dot(&w);
            let scale = mad_scale(residuals.as_slice().expect("contiguous"));
            // A degenerate scale (exact fit) leaves OLS in charge.
            if scale <= 0.0 {
                return Ok(BaselineFit {
                    coefficients: w,
                    method: "huber",
                    iterations: 0,
                });
            }
            1.35 * scale
        }
    };

    let d = x.ncols();
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let residuals = y - &x.dot(&w);
        let mut gram = Array2::<f64>::zeros((d, d));
        let mut rhs = Array1::<f64>::zeros(d);
        for i in 0..x.nrows() {
            let r = residuals[i].abs();
            let weight = if r <= delta { 1.0 } else { delta / r };
            let xi = x.row(i);
            for a in 0..d {
                let wa = weight * xi[a];
                rhs[a] += wa * y[i];
                for b in a..d {
                    gram[(a, b)] += wa * xi[b];
                }
            }
        }
        for a in 0..d {
            for b in (a + 1)..d {
                gram[(b, a)] = gram[(a, b)];
            }
        }
        let next = numkit::ridge_solve(&gram.view(), &rhs.view(), 0.0)
            .map_err(|_| Error::SingularDesign("weighted Gram matrix singular".into()))?;
        let step = numkit::euclidean(&next.view(), &w.view());
        let done = step < tol * (1.0 + numkit::norm(&w.view()));
        w = next;
        if done {
            break;
        }
    }
    Ok(BaselineFit {
        coefficients: w,
        method: "huber",
        iterations,
    })
}

/// RANSAC: repeated minimal-sample fits scored by consensus size, then an
/// OLS refit on the largest consensus set.
///
/// `residual_threshold` of `None` uses the median absolute deviation of
/// the responses, the common library default.
pub fn ransac_fit(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    min_samples: usize,
    residual_threshold: Option<f64>,
    n_trials: usize,
    seed: u64,
) -> Result<BaselineFit> {
    check_shapes(x, y)?;
    let n = x.nrows();
    let d = x.ncols();
    if min_samples < d {
        return Err(Error::Parameter(format!(
            "ransac_fit: min_samples {min_samples} below dimension {d}"
        )));
    }
    if n < min_samples {
        return Err(Error::Parameter(format!(
            "ransac_fit: n = {n} smaller than min_samples {min_samples}"
        )));
    }
    if n_trials == 0 {
        return Err(Error::Parameter("ransac_fit: n_trials must be >= 1".into()));
    }
    let threshold = match residual_threshold {
        Some(t) if t > 0.0 => t,
        Some(_) => {
            return Err(Error::Parameter(
                "ransac_fit: threshold must be positive".into(),
            ))
        }
        None => {
            let mut vals = y.to_vec();
            let med = median(&mut vals);
            let mut dev: Vec<f64> = y.iter().map(|v| (v - med).abs()).collect();
            let mad = median(&mut dev);
            if mad > 0.0 {
                mad
            } else {
                return Err(Error::Parameter(
                    "ransac_fit: degenerate responses, supply residual_threshold".into(),
                ));
            }
        }
    };

    let mut rng = RngLabel::new(seed, 0, 0).rng(domain::RANSAC);
    let mut best: Option<(usize, Vec<usize>)> = None;
    for _ in 0..n_trials {
        let pick = index::sample(&mut rng, n, min_samples);
        let mut xs = Array2::<f64>::zeros((min_samples, d));
        let mut ys = Array1::<f64>::zeros(min_samples);
        for (row, i) in pick.iter().enumerate() {
            xs.row_mut(row).assign(&x.row(i));
            ys[row] = y[i];
        }
        let Ok(fit) = ols_fit(&xs.view(), &ys.view()) else {
            continue; // singular subsample
        };
        let consensus: Vec<usize> = (0..n)
            .filter(|&i| (y[i] - x.row(i).dot(&fit.coefficients)).abs() <= threshold)
            .collect();
        let better = match &best {
            None => true,
            Some((count, _)) => consensus.len() > *count,
        };
        if better {
            best = Some((consensus.len(), consensus));
        }
    }
    let Some((count, consensus)) = best else {
        return Err(Error::ConsensusFailure {
            required: min_samples,
        });
    };
    if count < min_samples {
        return Err(Error::ConsensusFailure {
            required: min_samples,
        });
    }
    let mut xs = Array2::<f64>::zeros((count, d));
    let mut ys = Array1::<f64>::zeros(count);
    for (row, &i) in consensus.iter().enumerate() {
        xs.row_mut(row).assign(&x.row(i));
        ys[row] = y[i];
    }
    let refit = ols_fit(&xs.view(), &ys.view())?;
    Ok(BaselineFit {
        coefficients: refit.coefficients,
        method: "ransac",
        iterations: n_trials,
    })
}

/// MAD-based robust residual scale: `1.4826 * median(|r - median(r)|)`.
pub fn mad_scale(values: &[f64]) -> f64 {
    let mut vals = values.to_vec();
    let med = median(&mut vals);
    let mut dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    1.4826 * median(&mut dev)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn check_shapes(x: &ArrayView2<f64>, y: &ArrayView1<f64>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Parameter("empty design matrix".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, y has {}",
            x.nrows(),
            y.len()
        )));
    }
    Ok(())
}
