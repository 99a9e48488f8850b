//! Small dense symmetric linear algebra.
//!
//! Everything here targets `d` up to a few hundred: Cholesky-based SPD
//! solves with a ridge, the top eigenpair by power iteration, PCA by
//! deflated power iteration, and single-linkage clustering. Direct
//! factorizations are deliberate — the pipeline's cubic cost budget is in
//! the `d x d` solves, and at this scale they beat iterative machinery.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{domain, RngLabel};

/// Dominant eigenpair returned by [`top_eigenpair`].
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Unit-norm eigenvector; sign fixed so its largest-magnitude
    /// coordinate is positive.
    pub vector: Array1<f64>,
    /// False when the Rayleigh quotient had not settled within `max_iter`;
    /// the best iterate is still returned.
    pub converged: bool,
}

/// Clusters produced by [`single_linkage_clusters`].
#[derive(Debug, Clone)]
pub struct Clusters {
    /// `assignments[i]` is the cluster id of input point `i`.
    pub assignments: Vec<usize>,
    /// Coordinate mean of each cluster, indexed by cluster id.
    pub centers: Vec<Array1<f64>>,
}

/// Lower-triangular Cholesky factor of a symmetric matrix.
///
/// Fails (returning `IndefiniteMoments`) as soon as a pivot is
/// non-positive or non-finite; callers translate that into their own
/// error vocabulary.
pub fn cholesky(matrix: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let d = matrix.nrows();
    if matrix.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "cholesky expects a square matrix, got {}x{}",
            d,
            matrix.ncols()
        )));
    }
    // Pivots must clear a threshold relative to the matrix scale; an
    // exactly singular matrix otherwise rounds to a tiny positive pivot.
    let scale = (0..d).map(|i| matrix[(i, i)].abs()).fold(0.0_f64, f64::max);
    let pivot_floor = f64::EPSILON * (d as f64) * scale;
    let mut lower = Array2::<f64>::zeros((d, d));
    for j in 0..d {
        let mut diag = matrix[(j, j)];
        for k in 0..j {
            diag -= lower[(j, k)] * lower[(j, k)];
        }
        if !diag.is_finite() || diag <= pivot_floor {
            return Err(Error::IndefiniteMoments { lambda: 0.0 });
        }
        let pivot = diag.sqrt();
        lower[(j, j)] = pivot;
        for i in (j + 1)..d {
            let mut v = matrix[(i, j)];
            for k in 0..j {
                v -= lower[(i, k)] * lower[(j, k)];
            }
            lower[(i, j)] = v / pivot;
        }
    }
    Ok(lower)
}

fn solve_with_factor(lower: &Array2<f64>, rhs: &ArrayView1<f64>) -> Array1<f64> {
    let d = lower.nrows();
    // Forward: L z = rhs
    let mut z = rhs.to_owned();
    for i in 0..d {
        for k in 0..i {
            let zk = z[k];
            z[i] -= lower[(i, k)] * zk;
        }
        z[i] /= lower[(i, i)];
    }
    // Back: L^T x = z
    for i in (0..d).rev() {
        for k in (i + 1)..d {
            let zk = z[k];
            z[i] -= lower[(k, i)] * zk;
        }
        z[i] /= lower[(i, i)];
    }
    z
}

/// Solve `(sigma_hat + lambda I) x = g_hat` by Cholesky factorization.
///
/// Errors with `IndefiniteMoments` when the shifted matrix is not positive
/// definite, which tells the caller to raise `lambda`.
pub fn ridge_solve(
    sigma_hat: &ArrayView2<f64>,
    g_hat: &ArrayView1<f64>,
    lambda: f64,
) -> Result<Array1<f64>> {
    let d = sigma_hat.nrows();
    if g_hat.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "ridge_solve: matrix is {}x{} but rhs has length {}",
            d,
            sigma_hat.ncols(),
            g_hat.len()
        )));
    }
    if lambda < 0.0 {
        return Err(Error::Parameter(
            "ridge_solve: lambda must be nonnegative".into(),
        ));
    }
    let mut shifted = sigma_hat.to_owned();
    for i in 0..d {
        shifted[(i, i)] += lambda;
    }
    let lower = cholesky(&shifted.view()).map_err(|_| Error::IndefiniteMoments { lambda })?;
    let solution = solve_with_factor(&lower, g_hat);

    #[cfg(debug_assertions)]
    {
        let residual = &shifted.dot(&solution) - g_hat;
        let scale = (frobenius_norm(sigma_hat) + lambda) * norm(&solution.view());
        debug_assert!(
            norm(&residual.view()) <= 1e-10 * scale.max(f64::MIN_POSITIVE),
            "ridge_solve residual contract violated"
        );
    }
    Ok(solution)
}

/// Dominant-magnitude eigenpair of a symmetric matrix by power iteration.
///
/// Converged when successive Rayleigh quotients differ by less than
/// `tol * |value|`. For the positive-semidefinite residual matrices used
/// in the pipeline the dominant eigenvalue is the maximum one.
pub fn top_eigenpair(
    matrix: &ArrayView2<f64>,
    tol: f64,
    max_iter: usize,
    label: RngLabel,
) -> EigenPair {
    let d = matrix.nrows();
    assert_eq!(d, matrix.ncols(), "top_eigenpair expects a square matrix");
    let mut rng = label.rng(domain::POWER_START);
    let mut v = Array1::from_iter((0..d).map(|_| rng.random::<f64>() - 0.5));
    let n = norm(&v.view());
    if n == 0.0 {
        v[0] = 1.0;
    } else {
        v /= n;
    }

    let mut value = rayleigh(matrix, &v);
    let mut converged = false;
    for _ in 0..max_iter {
        let mut w = matrix.dot(&v);
        let wn = norm(&w.view());
        if wn == 0.0 {
            // v is in the kernel; the matrix is (numerically) zero along it.
            value = 0.0;
            converged = true;
            break;
        }
        w /= wn;
        let next = rayleigh(matrix, &w);
        let settled = (next - value).abs() < tol * next.abs().max(f64::MIN_POSITIVE);
        v = w;
        value = next;
        if settled {
            converged = true;
            break;
        }
    }
    fix_sign(&mut v);
    EigenPair {
        value,
        vector: v,
        converged,
    }
}

fn rayleigh(matrix: &ArrayView2<f64>, v: &Array1<f64>) -> f64 {
    v.dot(&matrix.dot(v))
}

fn fix_sign(v: &mut Array1<f64>) {
    let mut idx = 0;
    let mut best = 0.0_f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

/// Top-`k` orthonormal basis of the column-centered covariance of `x`,
/// ordered by descending eigenvalue. Returned as a `d x k` matrix.
pub fn pca_fit(x: &ArrayView2<f64>, k: usize) -> Result<Array2<f64>> {
    let (n, d) = (x.nrows(), x.ncols());
    if k > d {
        return Err(Error::Parameter(format!(
            "pca_fit: k = {k} exceeds dimension {d}"
        )));
    }
    if n < 2 {
        return Err(Error::Parameter("pca_fit needs at least two rows".into()));
    }
    let mean = x.mean_axis(ndarray::Axis(0)).expect("n >= 2");
    let centered = x - &mean.view().insert_axis(ndarray::Axis(0));
    let mut cov = centered.t().dot(&centered) / (n as f64 - 1.0);

    let mut basis = Array2::<f64>::zeros((d, k));
    let label = RngLabel::new(0x70c1, 0, 0);
    for j in 0..k {
        // Deflated power iteration; re-orthogonalize every step so the
        // basis stays orthonormal even under clustered eigenvalues.
        let mut rng = RngLabel::new(label.master_seed, j as u64, 0).rng(domain::POWER_START);
        let mut v = Array1::from_iter((0..d).map(|_| rng.random::<f64>() - 0.5));
        orthogonalize(&mut v, &basis, j);
        normalize_or_unit(&mut v, j);
        let mut value = rayleigh(&cov.view(), &v);
        for _ in 0..10_000 {
            let mut w = cov.dot(&v);
            orthogonalize(&mut w, &basis, j);
            let wn = norm(&w.view());
            if wn == 0.0 {
                break;
            }
            w /= wn;
            let next = rayleigh(&cov.view(), &w);
            let settled = (next - value).abs() < 1e-13 * next.abs().max(f64::MIN_POSITIVE);
            v = w;
            value = next;
            if settled {
                break;
            }
        }
        fix_sign(&mut v);
        basis.column_mut(j).assign(&v);
        // Deflate: cov -= value * v v^T
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] -= value * v[a] * v[b];
            }
        }
    }
    Ok(basis)
}

fn orthogonalize(v: &mut Array1<f64>, basis: &Array2<f64>, cols: usize) {
    for j in 0..cols {
        let col = basis.column(j);
        let proj = v.dot(&col);
        for (vi, bi) in v.iter_mut().zip(col.iter()) {
            *vi -= proj * bi;
        }
    }
}

fn normalize_or_unit(v: &mut Array1<f64>, fallback_axis: usize) {
    let n = norm(&v.view());
    if n == 0.0 {
        let axis = fallback_axis % v.len();
        v.fill(0.0);
        v[axis] = 1.0;
    } else {
        *v /= n;
    }
}

/// Connected components of the graph linking point pairs at distance
/// `<= radius`; radius 0 links only exactly coincident points.
pub fn single_linkage_clusters(points: &[Array1<f64>], radius: f64) -> Clusters {
    assert!(
        !points.is_empty(),
        "single_linkage_clusters needs at least one point"
    );
    assert!(radius >= 0.0, "radius must be nonnegative");
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = euclidean(&points[i].view(), &points[j].view());
            if dist <= radius {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    // Relabel roots to dense ids in first-appearance order.
    let mut ids = std::collections::HashMap::new();
    let mut assignments = vec![0usize; n];
    for (i, slot) in assignments.iter_mut().enumerate() {
        let root = find(&mut parent, i);
        let next = ids.len();
        *slot = *ids.entry(root).or_insert(next);
    }
    let k = ids.len();
    let d = points[0].len();
    let mut centers = vec![Array1::<f64>::zeros(d); k];
    let mut counts = vec![0usize; k];
    for (i, p) in points.iter().enumerate() {
        centers[assignments[i]] += p;
        counts[assignments[i]] += 1;
    }
    for (c, &cnt) in centers.iter_mut().zip(&counts) {
        *c /= cnt as f64;
    }
    Clusters {
        assignments,
        centers,
    }
}

pub fn norm(v: &ArrayView1<f64>) -> f64 {
    v.dot(v).sqrt()
}

pub fn euclidean(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn frobenius_norm(m: &ArrayView2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Exact symmetrization `(A + A^T) / 2`.
pub fn symmetrize(m: &mut Array2<f64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
