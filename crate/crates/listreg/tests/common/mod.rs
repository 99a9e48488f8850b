//! Independent numerical oracles shared by the integration suites.
//!
//! These deliberately avoid the library's own solver paths: elimination
//! instead of Cholesky, cyclic Jacobi instead of power iteration, BFS
//! instead of union-find.

use ndarray::{Array1, Array2};

/// Gaussian elimination with partial pivoting.
pub fn elimination_solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.len());
    let mut m = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if m[(row, col)].abs() > m[(pivot, col)].abs() {
                pivot = row;
            }
        }
        if m[(pivot, col)].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            rhs.swap(col, pivot);
        }
        for row in (col + 1)..n {
            let factor = m[(row, col)] / m[(col, col)];
            for j in col..n {
                let v = m[(col, j)];
                m[(row, j)] -= factor * v;
            }
            let v = rhs[col];
            rhs[row] -= factor * v;
        }
    }
    let mut x = Array1::<f64>::zeros(n);
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in (row + 1)..n {
            acc -= m[(row, j)] * x[j];
        }
        x[row] = acc / m[(row, row)];
    }
    Some(x)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Returns eigenvalues in descending order with matching eigenvectors
/// (columns of the returned matrix).
pub fn jacobi_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    for _sweep in 0..200 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m[(i, i)], i)).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let values: Vec<f64> = pairs.iter().map(|&(val, _)| val).collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (out_col, &(_, in_col)) in pairs.iter().enumerate() {
        for row in 0..n {
            vectors[(row, out_col)] = v[(row, in_col)];
        }
    }
    (values, vectors)
}

/// Connected components at threshold `radius` by breadth-first search
/// over the explicit pairwise adjacency. Returns a canonical labeling
/// (component id by first appearance).
pub fn bfs_components(points: &[Array1<f64>], radius: f64) -> Vec<usize> {
    let n = points.len();
    let dist = |i: usize, j: usize| -> f64 {
        points[i]
            .iter()
            .zip(points[j].iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        label[start] = next;
        while let Some(i) = queue.pop_front() {
            let reachable: Vec<usize> = (0..n)
                .filter(|&j| label[j] == usize::MAX && dist(i, j) <= radius)
                .collect();
            for j in reachable {
                label[j] = next;
                queue.push_back(j);
            }
        }
        next += 1;
    }
    label
}

/// 100-system ridge-solve vs elimination check (d <= 16). Returns the
/// worst relative gap observed.
pub fn ridge_vs_elimination_worst_gap() -> f64 {
    let mut worst = 0.0_f64;
    for trial in 0..100 {
        let d = 2 + (trial % 15);
        let a = seeded_matrix(d + 4, d, 1000 + trial as u64);
        let mut sigma = a.t().dot(&a);
        for i in 0..d {
            sigma[(i, i)] += 0.1;
        }
        let rhs = seeded_vector(d, 2000 + trial as u64);
        let lambda = if trial % 3 == 0 {
            0.0
        } else {
            0.01 * (trial % 7) as f64
        };
        let got = listreg::numkit::ridge_solve(&sigma.view(), &rhs.view(), lambda).unwrap();
        let mut shifted = sigma.clone();
        for i in 0..d {
            shifted[(i, i)] += lambda;
        }
        let oracle = elimination_solve(&shifted, &rhs).expect("SPD system");
        let diff = &got - &oracle;
        let rel =
            listreg::numkit::norm(&diff.view()) / listreg::numkit::norm(&oracle.view()).max(1e-300);
        worst = worst.max(rel);
    }
    worst
}

/// 100-matrix power-iteration vs Jacobi check (d <= 12). Returns the
/// worst relative eigenvalue gap observed.
pub fn power_vs_jacobi_worst_gap() -> f64 {
    let mut worst = 0.0_f64;
    for trial in 0..100 {
        let d = 2 + (trial % 11);
        let a = seeded_matrix(d, d, 3000 + trial as u64);
        let mut m = a.clone();
        m += &a.t();
        let pair = listreg::numkit::top_eigenpair(
            &m.view(),
            1e-12,
            200_000,
            listreg::rng::RngLabel::new(trial as u64, 0, 0),
        );
        let (values, _) = jacobi_eigen(&m);
        let dominant = values
            .iter()
            .copied()
            .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
            .unwrap();
        worst = worst.max((pair.value - dominant).abs() / dominant.abs().max(1e-300));
    }
    worst
}

/// 100-point-set single-linkage vs BFS check (<= 40 points). Returns the
/// number of mismatching point sets.
pub fn linkage_vs_bfs_mismatches() -> usize {
    use rand::Rng;
    let mut mismatches = 0;
    for trial in 0..100u64 {
        let mut rng =
            listreg::rng::RngLabel::new(4000 + trial, 0, 0).rng(listreg::rng::domain::DATA);
        let n = 2 + (trial as usize % 39);
        let d = 1 + (trial as usize % 4);
        let points: Vec<Array1<f64>> = (0..n)
            .map(|_| Array1::from_iter((0..d).map(|_| rng.random::<f64>() * 4.0 - 2.0)))
            .collect();
        let radius = rng.random::<f64>() * 1.5;
        let got = listreg::numkit::single_linkage_clusters(&points, radius);
        if got.assignments != bfs_components(&points, radius) {
            mismatches += 1;
        }
    }
    mismatches
}

/// Deterministic dense test matrices/vectors from a seeded stream.
pub fn seeded_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    use rand::Rng;
    let mut rng = listreg::rng::RngLabel::new(seed, 0, 0).rng(listreg::rng::domain::DATA);
    let mut m = Array2::<f64>::zeros((rows, cols));
    for v in m.iter_mut() {
        *v = rng.random::<f64>() * 2.0 - 1.0;
    }
    m
}

pub fn seeded_vector(len: usize, seed: u64) -> Array1<f64> {
    use rand::Rng;
    let mut rng = listreg::rng::RngLabel::new(seed, 1, 0).rng(listreg::rng::domain::DATA);
    Array1::from_iter((0..len).map(|_| rng.random::<f64>() * 2.0 - 1.0))
}
