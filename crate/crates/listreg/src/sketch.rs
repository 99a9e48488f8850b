//! Bucket assignment and per-bucket second-moment statistics.
//!
//! Rows are routed to buckets by the expander graphs in time proportional
//! to `n * degree * repetitions`. Bucket statistics are means over the
//! rows that hash there — the signs square away in every quadratic
//! quantity, so moments are sign-independent; the signs exist for the
//! sketching identity, and the assignment keeps them for completeness.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::expander::ExpanderSketch;

/// Identifies one bucket of one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BucketKey {
    pub repetition: usize,
    pub bucket: usize,
}

/// Row-to-bucket map across all repetitions.
///
/// Membership lists are in ascending row order, which fixes the summation
/// order of every per-bucket statistic.
#[derive(Debug, Clone)]
pub struct BucketAssignment {
    repetition_count: usize,
    bucket_count: usize,
    n_rows: usize,
    degree: usize,
    membership: Vec<Vec<(u32, i8)>>,
}

impl BucketAssignment {
    pub fn repetition_count(&self) -> usize {
        self.repetition_count
    }

    pub fn bucket_count(&self) -> usize {
        self.bucket_count
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `(row, sign)` pairs hashing to bucket `(t, b)`, ascending by row.
    pub fn members(&self, repetition: usize, bucket: usize) -> &[(u32, i8)] {
        &self.membership[repetition * self.bucket_count + bucket]
    }

    pub fn total_members(&self) -> usize {
        self.membership.iter().map(Vec::len).sum()
    }

    /// Keys of all non-empty buckets, in `(repetition, bucket)` order.
    pub fn active_buckets(&self) -> Vec<BucketKey> {
        let mut keys = Vec::new();
        for t in 0..self.repetition_count {
            for b in 0..self.bucket_count {
                if !self.members(t, b).is_empty() {
                    keys.push(BucketKey {
                        repetition: t,
                        bucket: b,
                    });
                }
            }
        }
        keys
    }
}

/// Per-bucket normal-equation statistics, normalized by row count.
#[derive(Debug, Clone)]
pub struct BucketStats {
    /// Mean of `x x^T` over the bucket's rows; symmetric PSD.
    pub second_moment: Array2<f64>,
    /// Mean of `x * y` over the bucket's rows.
    pub cross_moment: Array1<f64>,
    pub count: usize,
}

/// Route every row to its buckets in all repetitions.
pub fn assign_buckets(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    graphs: &[ExpanderSketch],
) -> Result<BucketAssignment> {
    if graphs.is_empty() {
        return Err(Error::Parameter(
            "assign_buckets: need at least one graph".into(),
        ));
    }
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "assign_buckets: X has {n} rows but y has {} entries",
            y.len()
        )));
    }
    let bucket_count = graphs[0].n_buckets();
    let degree = graphs[0].degree();
    for g in graphs {
        if g.n_left() != n || g.n_buckets() != bucket_count || g.degree() != degree {
            return Err(Error::DimensionMismatch(
                "assign_buckets: graphs must share n_left, bucket count, and degree".into(),
            ));
        }
    }
    let repetition_count = graphs.len();
    let mut membership = vec![Vec::new(); repetition_count * bucket_count];
    for (t, g) in graphs.iter().enumerate() {
        let base = t * bucket_count;
        for row in 0..n {
            for (&b, &s) in g.buckets_of(row).iter().zip(g.signs_of(row)) {
                membership[base + b as usize].push((row as u32, s));
            }
        }
    }
    Ok(BucketAssignment {
        repetition_count,
        bucket_count,
        n_rows: n,
        degree,
        membership,
    })
}

/// Mean `x x^T` and `x y` over one bucket's rows.
pub fn bucket_moments(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    assignment: &BucketAssignment,
    repetition: usize,
    bucket: usize,
) -> Result<BucketStats> {
    let rows = assignment.members(repetition, bucket);
    if rows.is_empty() {
        return Err(Error::EmptyBucket { repetition, bucket });
    }
    let d = x.ncols();
    let mut second = Array2::<f64>::zeros((d, d));
    let mut cross = Array1::<f64>::zeros(d);
    for &(row, _sign) in rows {
        let xi = x.row(row as usize);
        let yi = y[row as usize];
        accumulate_outer_upper(&mut second, &xi, 1.0);
        for j in 0..d {
            cross[j] += xi[j] * yi;
        }
    }
    mirror_upper(&mut second);
    let inv = 1.0 / rows.len() as f64;
    second *= inv;
    cross *= inv;
    Ok(BucketStats {
        second_moment: second,
        cross_moment: cross,
        count: rows.len(),
    })
}

/// Mean `r^2 x x^T` over one bucket's rows, with `r = y - <x, estimate>`.
pub fn bucket_residual_matrix(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    assignment: &BucketAssignment,
    repetition: usize,
    bucket: usize,
    estimate: &ArrayView1<f64>,
) -> Result<Array2<f64>> {
    let rows = assignment.members(repetition, bucket);
    if rows.is_empty() {
        return Err(Error::EmptyBucket { repetition, bucket });
    }
    let d = x.ncols();
    let mut out = Array2::<f64>::zeros((d, d));
    for &(row, _sign) in rows {
        let xi = x.row(row as usize);
        let r = y[row as usize] - xi.dot(estimate);
        accumulate_outer_upper(&mut out, &xi, r * r);
    }
    mirror_upper(&mut out);
    out *= 1.0 / rows.len() as f64;
    Ok(out)
}

/// Rayleigh score of one bucket along direction `v`:
/// mean over rows of `r^2 <x, v>^2`. Equals `v^T M v` for the bucket's
/// residual matrix `M`, without materializing it.
pub fn bucket_residual_score(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    assignment: &BucketAssignment,
    repetition: usize,
    bucket: usize,
    estimate: &ArrayView1<f64>,
    direction: &ArrayView1<f64>,
) -> Result<f64> {
    let rows = assignment.members(repetition, bucket);
    if rows.is_empty() {
        return Err(Error::EmptyBucket { repetition, bucket });
    }
    let mut total = 0.0;
    for &(row, _sign) in rows {
        let xi = x.row(row as usize);
        let r = y[row as usize] - xi.dot(estimate);
        let p = xi.dot(direction);
        total += r * r * p * p;
    }
    Ok(total / rows.len() as f64)
}

fn accumulate_outer_upper(acc: &mut Array2<f64>, xi: &ArrayView1<f64>, weight: f64) {
    let d = xi.len();
    for a in 0..d {
        let wa = weight * xi[a];
        for b in a..d {
            acc[(a, b)] += wa * xi[b];
        }
    }
}

fn mirror_upper(m: &mut Array2<f64>) {
    let d = m.nrows();
    for a in 0..d {
        for b in (a + 1)..d {
            m[(b, a)] = m[(a, b)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expander::sample_expander;
    use crate::rng::RngLabel;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2, Array2};

    fn graphs(n: usize, b: usize, d_l: usize, reps: usize, master: u64) -> Vec<ExpanderSketch> {
        (0..reps)
            .map(|t| sample_expander(n, b, d_l, RngLabel::new(master, 0, t as u64)).unwrap())
            .collect()
    }

    #[test]
    fn single_row_two_entries() {
        let x = arr2(&[[1.0, 2.0]]);
        let y = arr1(&[3.0]);
        let gs = graphs(1, 10, 2, 1, 1);
        let asg = assign_buckets(&x.view(), &y.view(), &gs).unwrap();
        assert_eq!(asg.total_members(), 2);
        for key in asg.active_buckets() {
            assert_eq!(asg.members(key.repetition, key.bucket)[0].0, 0);
        }
    }

    #[test]
    fn complete_graph_every_bucket_full() {
        let x = Array2::<f64>::ones((3, 2));
        let y = arr1(&[1.0, 2.0, 3.0]);
        let gs = graphs(3, 3, 3, 1, 2);
        let asg = assign_buckets(&x.view(), &y.view(), &gs).unwrap();
        for b in 0..3 {
            assert_eq!(asg.members(0, b).len(), 3);
        }
    }

    #[test]
    fn membership_counts_per_row() {
        let n = 50;
        let x = Array2::<f64>::zeros((n, 3));
        let y = Array1::<f64>::zeros(n);
        let gs = graphs(n, 10, 2, 2, 3);
        let asg = assign_buckets(&x.view(), &y.view(), &gs).unwrap();
        assert_eq!(asg.total_members(), n * 2 * 2);
        for t in 0..2 {
            let mut per_row = vec![0usize; n];
            for b in 0..10 {
                for &(row, _) in asg.members(t, b) {
                    per_row[row as usize] += 1;
                }
            }
            assert!(per_row.iter().all(|&c| c == 2));
        }
    }

    #[test]
    fn dense_sketch_oracle_agrees() {
        // Materialize S_t as a dense signed B x n matrix and group rows
        // explicitly; membership-based grouping must match.
        let n = 50;
        let mut x = Array2::<f64>::zeros((n, 4));
        for (i, v) in x.iter_mut().enumerate() {
            *v = (i as f64 * 0.37).sin();
        }
        let y = Array1::from_iter((0..n).map(|i| (i as f64 * 0.11).cos()));
        let gs = graphs(n, 10, 2, 2, 4);
        let asg = assign_buckets(&x.view(), &y.view(), &gs).unwrap();
        for (t, g) in gs.iter().enumerate() {
            let mut dense = Array2::<f64>::zeros((10, n));
            for row in 0..n {
                for (&b, &s) in g.buckets_of(row).iter().zip(g.signs_of(row)) {
                    dense[(b as usize, row)] = s as f64;
                }
            }
            for b in 0..10 {
                let expected: Vec<(u32, i8)> = (0..n)
                    .filter(|&row| dense[(b, row)] != 0.0)
                    .map(|row| (row as u32, dense[(b, row)] as i8))
                    .collect();
                assert_eq!(asg.members(t, b), expected.as_slice());
            }
        }
    }

    #[test]
    fn rejects_mismatched_graphs() {
        let x = Array2::<f64>::zeros((5, 2));
        let y = Array1::<f64>::zeros(5);
        let mut gs = graphs(5, 8, 2, 1, 5);
        gs.push(sample_expander(5, 9, 2, RngLabel::new(5, 0, 9)).unwrap());
        assert!(assign_buckets(&x.view(), &y.view(), &gs).is_err());
        let y_bad = Array1::<f64>::zeros(4);
        let gs2 = graphs(5, 8, 2, 1, 5);
        assert!(assign_buckets(&x.view(), &y_bad.view(), &gs2).is_err());
    }

    #[test]
    fn moments_single_row() {
        let x = arr2(&[[1.0, 0.0, 0.0]]);
        let y = arr1(&[2.0]);
        let gs = graphs(1, 4, 2, 1, 6);
        let asg = assign_buckets(&x.view(), &y.view(), &gs).unwrap();
        let key = asg.active_buckets()[0];
        let stats = bucket_moments(&x.view(), &y.view(), &asg, key.repetition, key.bucket).unwrap();
        assert_eq!(stats.count, 1);
        assert_abs_diff_eq!(stats.second_moment[(0, 0)], 1.0);
        assert_abs_diff_eq!(stats.second_moment[(1, 1)], 0.0);
        assert_abs_diff_eq!(stats.cross_moment[0], 2.0);
    }

    #[test]
    fn moments_mean_invariant_under_duplication() {
        // Two identical rows give the same normalized stats as one.
        let x1 = arr2(&[[1.0, -2.0]]);
        let y1 = arr1(&[0.7]);
        let x2 = arr2(&[[1.0, -2.0], [1.0, -2.0]]);
        let y2 = arr1(&[0.7, 0.7]);
        let g1 = graphs(1, 1, 1, 1, 7);
        let g2 = graphs(2, 1, 1, 1, 7);
        let a1 = assign_buckets(&x1.view(), &y1.view(), &g1).unwrap();
        let a2 = assign_buckets(&x2.view(), &y2.view(), &g2).unwrap();
        let s1 = bucket_moments(&x1.view(), &y1.view(), &a1, 0, 0).unwrap();
        let s2 = bucket_moments(&x2.view(), &y2.view(), &a2, 0, 0).unwrap();
        assert_eq!(s2.count, 2);
        for i in 0..2 {
            assert_abs_diff_eq!(s1.cross_moment[i], s2.cross_moment[i], epsilon = 1e-15);
            for j in 0..2 {
                assert_abs_diff_eq!(
                    s1.second_moment[(i, j)],
                    s2.second_moment[(i, j)],
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn clean_bucket_moments_concentrate() {
        // 500 iid isotropic rows with exact linear responses: the bucket
        // mean moments sit near (I, w*). Frobenius bounds the operator
        // norm, so the assert is conservative.
        use rand_distr::{Distribution, StandardNormal};
        let n = 500;
        let d = 5;
        let mut rng = RngLabel::new(99, 0, 0).rng(crate::rng::domain::DATA);
        let normal = StandardNormal;
        let mut x = Array2::<f64>::zeros((n, d));
        for v in x.iter_mut() {
            *v = normal.sample(&mut rng);
        }
        let w = arr1(&[0.6, -0.4, 0.2, 0.5, -0.45]); // unit-ish truth
        let y = x.dot(&w);
        let gs = graphs(n, 1, 1, 1, 14); // everything lands in one bucket
        let asg = assign_buckets(&x.view(), &y.view(), &gs).unwrap();
        let stats = bucket_moments(&x.view(), &y.view(), &asg, 0, 0).unwrap();
        assert_eq!(stats.count, n);
        let mut h_dev = stats.second_moment.clone();
        for i in 0..d {
            h_dev[(i, i)] -= 1.0;
        }
        let fro = h_dev.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(fro < 0.3, "||H - I||_F = {fro}");
        let g_dev = &stats.cross_moment - &w;
        let g_err = g_dev.dot(&g_dev).sqrt();
        assert!(g_err < 0.3, "||g - w*|| = {g_err}");
    }

    #[test]
    fn empty_bucket_signals() {
        let x = arr2(&[[1.0]]);
        let y = arr1(&[1.0]);
        let gs = graphs(1, 10, 1, 1, 8);
        let asg = assign_buckets(&x.view(), &y.view(), &gs).unwrap();
        let occupied = asg.active_buckets()[0].bucket;
        let empty = (0..10).find(|&b| b != occupied).unwrap();
        assert!(matches!(
            bucket_moments(&x.view(), &y.view(), &asg, 0, empty),
            Err(Error::EmptyBucket { .. })
        ));
    }

    #[test]
    fn residual_matrix_vanishes_at_interpolant() {
        let x = arr2(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let w = arr1(&[2.0, -1.0]);
        let y = x.dot(&w);
        let gs = graphs(3, 3, 3, 1, 9);
        let asg = assign_buckets(&x.view(), &y.view(), &gs).unwrap();
        let m = bucket_residual_matrix(&x.view(), &y.view(), &asg, 0, 0, &w.view()).unwrap();
        assert!(m.iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn residual_matrix_single_row() {
        let x = arr2(&[[1.0, 0.0]]);
        let y = arr1(&[3.0]);
        let gs = graphs(1, 2, 2, 1, 10);
        let asg = assign_buckets(&x.view(), &y.view(), &gs).unwrap();
        let zero = arr1(&[0.0, 0.0]);
        let m = bucket_residual_matrix(&x.view(), &y.view(), &asg, 0, 0, &zero.view()).unwrap();
        assert_abs_diff_eq!(m[(0, 0)], 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[(0, 1)], 0.0);
    }

    #[test]
    fn residual_matrix_matches_naive_double_loop() {
        let n = 20;
        let d = 4;
        let mut x = Array2::<f64>::zeros((n, d));
        for (i, v) in x.iter_mut().enumerate() {
            *v = ((i * 31 % 17) as f64 - 8.0) / 5.0;
        }
        let y = Array1::from_iter((0..n).map(|i| ((i * 13 % 7) as f64) - 3.0));
        let est = arr1(&[0.2, -0.4, 1.0, 0.0]);
        let gs = graphs(n, 1, 1, 1, 11);
        let asg = assign_buckets(&x.view(), &y.view(), &gs).unwrap();
        let m = bucket_residual_matrix(&x.view(), &y.view(), &asg, 0, 0, &est.view()).unwrap();
        let mut naive = Array2::<f64>::zeros((d, d));
        for i in 0..n {
            let r = y[i] - x.row(i).dot(&est);
            for a in 0..d {
                for b in 0..d {
                    naive[(a, b)] += r * r * x[(i, a)] * x[(i, b)];
                }
            }
        }
        naive /= n as f64;
        for a in 0..d {
            for b in 0..d {
                assert_abs_diff_eq!(m[(a, b)], naive[(a, b)], epsilon = 1e-12);
            }
        }
        // The direction score agrees with the materialized quadratic form.
        let v = arr1(&[0.5, 0.5, -0.5, 0.5]);
        let score = bucket_residual_score(&x.view(), &y.view(), &asg, 0, 0, &est.view(), &v.view())
            .unwrap();
        assert_abs_diff_eq!(score, v.dot(&m.dot(&v)), epsilon = 1e-12);
    }

    #[test]
    fn moments_are_sign_independent() {
        // Flipping any subset of edge signs leaves every quadratic bucket
        // statistic unchanged (signs square away).
        let n = 30;
        let mut x = Array2::<f64>::zeros((n, 3));
        for (i, v) in x.iter_mut().enumerate() {
            *v = ((i * 7 % 13) as f64) / 3.0 - 2.0;
        }
        let y = Array1::from_iter((0..n).map(|i| (i as f64) * 0.3 - 4.0));
        let gs = graphs(n, 8, 2, 2, 13);
        let asg = assign_buckets(&x.view(), &y.view(), &gs).unwrap();
        let mut flipped = asg.clone();
        for (i, bucket) in flipped.membership.iter_mut().enumerate() {
            for (j, entry) in bucket.iter_mut().enumerate() {
                if (i + j) % 2 == 0 {
                    entry.1 = -entry.1;
                }
            }
        }
        let est = arr1(&[0.5, -1.0, 0.25]);
        for key in asg.active_buckets() {
            let a = bucket_moments(&x.view(), &y.view(), &asg, key.repetition, key.bucket).unwrap();
            let b =
                bucket_moments(&x.view(), &y.view(), &flipped, key.repetition, key.bucket).unwrap();
            assert_eq!(a.second_moment, b.second_moment);
            assert_eq!(a.cross_moment, b.cross_moment);
            let ra = bucket_residual_matrix(
                &x.view(),
                &y.view(),
                &asg,
                key.repetition,
                key.bucket,
                &est.view(),
            )
            .unwrap();
            let rb = bucket_residual_matrix(
                &x.view(),
                &y.view(),
                &flipped,
                key.repetition,
                key.bucket,
                &est.view(),
            )
            .unwrap();
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn moments_linear_in_y() {
        let n = 15;
        let mut x = Array2::<f64>::zeros((n, 3));
        for (i, v) in x.iter_mut().enumerate() {
            *v = ((i % 5) as f64) - 2.0;
        }
        let y1 = Array1::from_iter((0..n).map(|i| i as f64));
        let y2 = Array1::from_iter((0..n).map(|i| (i as f64).sqrt()));
        let combined = &y1 * 2.0 + &y2 * -0.5;
        let gs = graphs(n, 4, 2, 1, 12);
        let asg = assign_buckets(&x.view(), &y1.view(), &gs).unwrap();
        for key in asg.active_buckets() {
            let g1 = bucket_moments(&x.view(), &y1.view(), &asg, key.repetition, key.bucket)
                .unwrap()
                .cross_moment;
            let g2 = bucket_moments(&x.view(), &y2.view(), &asg, key.repetition, key.bucket)
                .unwrap()
                .cross_moment;
            let gc = bucket_moments(
                &x.view(),
                &combined.view(),
                &asg,
                key.repetition,
                key.bucket,
            )
            .unwrap()
            .cross_moment;
            for j in 0..3 {
                assert_abs_diff_eq!(gc[j], 2.0 * g1[j] - 0.5 * g2[j], epsilon = 1e-12);
            }
        }
    }
}
