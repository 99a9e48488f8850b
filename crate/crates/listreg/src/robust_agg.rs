//! Robust aggregation of bucket statistics into global moment estimates.
//!
//! Buckets are shuffled into blocks, block means are formed, and the
//! blocks are combined by coordinate-wise median-of-means (the default)
//! or by the geometric median. A constant fraction of arbitrarily bad
//! buckets moves the result only within the spread of the good blocks.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit;
use crate::rng::{domain, RngLabel};
use crate::sketch::BucketStats;

/// How block means are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    /// Entrywise median across blocks; matrices symmetrized afterward.
    CoordinateMedian,
    /// Weiszfeld geometric median; matrices flattened to d^2 coordinates.
    GeometricMedian,
}

impl std::str::FromStr for AggregationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mom" | "coordinate_median" => Ok(AggregationMode::CoordinateMedian),
            "geometric" | "geometric_median" => Ok(AggregationMode::GeometricMedian),
            other => Err(Error::Parameter(format!(
                "unknown aggregation mode '{other}' (expected 'mom' or 'geometric')"
            ))),
        }
    }
}

impl std::fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AggregationMode::CoordinateMedian => write!(f, "mom"),
            AggregationMode::GeometricMedian => write!(f, "geometric"),
        }
    }
}

/// Aggregation knobs shared by every robust-aggregation call site.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AggregationConfig {
    /// Target buckets per block.
    pub block_size: usize,
    pub mode: AggregationMode,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self {
            block_size: 16,
            mode: AggregationMode::CoordinateMedian,
        }
    }
}

/// Disjoint cover of `0..n_items` by consecutive chunks of a random
/// permutation.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    pub blocks: Vec<Vec<usize>>,
    pub block_size: usize,
}

/// Aggregated covariance and cross-moment estimates.
#[derive(Debug, Clone)]
pub struct RobustMoments {
    /// Symmetric estimate of the covariance; exact symmetry by construction.
    pub covariance: Array2<f64>,
    pub cross_moment: Array1<f64>,
    pub block_count: usize,
}

/// Shuffle `0..n_items` and cut the permutation into chunks of
/// `block_size` (the last chunk may be short).
pub fn partition_blocks(
    n_items: usize,
    block_size: usize,
    rng_label: RngLabel,
) -> Result<BlockPartition> {
    if n_items == 0 {
        return Err(Error::EmptyAggregation);
    }
    if block_size == 0 {
        return Err(Error::Parameter(
            "partition_blocks: block_size must be >= 1".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n_items).collect();
    order.shuffle(&mut rng_label.rng(domain::PARTITION_MOMENTS));
    let blocks = order.chunks(block_size).map(|c| c.to_vec()).collect();
    Ok(BlockPartition { blocks, block_size })
}

/// Entrywise median of vectors; even counts use the lower-upper midpoint.
pub fn mom_median_vectors(items: &[Array1<f64>]) -> Result<Array1<f64>> {
    let first = items.first().ok_or(Error::EmptyAggregation)?;
    let d = first.len();
    if items.iter().any(|v| v.len() != d) {
        return Err(Error::DimensionMismatch(
            "mom_median_vectors: lengths differ".into(),
        ));
    }
    let mut out = Array1::<f64>::zeros(d);
    let mut scratch = Vec::with_capacity(items.len());
    for j in 0..d {
        scratch.clear();
        scratch.extend(items.iter().map(|v| v[j]));
        out[j] = median_in_place(&mut scratch);
    }
    Ok(out)
}

/// Entrywise median of matrices, symmetrized as `(A + A^T)/2` afterward.
pub fn mom_median_matrices(items: &[Array2<f64>]) -> Result<Array2<f64>> {
    let first = items.first().ok_or(Error::EmptyAggregation)?;
    let shape = (first.nrows(), first.ncols());
    if items.iter().any(|m| (m.nrows(), m.ncols()) != shape) {
        return Err(Error::DimensionMismatch(
            "mom_median_matrices: shapes differ".into(),
        ));
    }
    let mut out = Array2::<f64>::zeros(shape);
    let mut scratch = Vec::with_capacity(items.len());
    for a in 0..shape.0 {
        for b in 0..shape.1 {
            scratch.clear();
            scratch.extend(items.iter().map(|m| m[(a, b)]));
            out[(a, b)] = median_in_place(&mut scratch);
        }
    }
    numkit::symmetrize(&mut out);
    Ok(out)
}

fn median_in_place(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Geometric median by the modified Weiszfeld iteration.
///
/// Converged when the step is below `tol` times the point spread; when the
/// iterate lands on a data point the Vardi-Zhang correction applies. The
/// best iterate seen is returned if `max_iter` is exhausted. Points are
/// summed in a canonical (sorted) order, so the output is bit-identical
/// under input permutation.
pub fn geometric_median(points: &[Array1<f64>], tol: f64, max_iter: usize) -> Result<Array1<f64>> {
    let first = points.first().ok_or(Error::EmptyAggregation)?;
    let d = first.len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::DimensionMismatch(
            "geometric_median: lengths differ".into(),
        ));
    }
    if points.len() == 1 {
        return Ok(points[0].clone());
    }
    let mut order: Vec<&Array1<f64>> = points.iter().collect();
    order.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|c| !c.is_eq())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let points = order;
    let mut centroid = Array1::<f64>::zeros(d);
    for &p in &points {
        centroid += p;
    }
    centroid /= points.len() as f64;
    let spread = points
        .iter()
        .map(|p| numkit::euclidean(&p.view(), &centroid.view()))
        .fold(0.0_f64, f64::max);
    if spread == 0.0 {
        return Ok(centroid);
    }
    let anchor_eps = tol * spread;

    let objective = |q: &Array1<f64>| -> f64 {
        points
            .iter()
            .map(|p| numkit::euclidean(&p.view(), &q.view()))
            .sum()
    };

    let mut current = centroid;
    let mut best = current.clone();
    let mut best_obj = objective(&best);
    for _ in 0..max_iter {
        let mut weighted = Array1::<f64>::zeros(d);
        let mut weight_sum = 0.0;
        let mut pull = Array1::<f64>::zeros(d);
        let mut anchored = 0usize;
        for &p in &points {
            let dist = numkit::euclidean(&p.view(), &current.view());
            if dist <= anchor_eps {
                anchored += 1;
                continue;
            }
            let w = 1.0 / dist;
            weighted.scaled_add(w, p);
            weight_sum += w;
            pull.scaled_add(w, &(p - &current));
        }
        if weight_sum == 0.0 {
            // Every point coincides with the iterate.
            break;
        }
        let proposal = &weighted / weight_sum;
        let next = if anchored == 0 {
            proposal
        } else {
            let r = numkit::norm(&pull.view());
            if r <= anchored as f64 {
                // The anchored point is the median.
                break;
            }
            let t = anchored as f64 / r;
            &proposal * (1.0 - t) + &current * t
        };
        let step = numkit::euclidean(&next.view(), &current.view());
        current = next;
        let obj = objective(&current);
        if obj < best_obj {
            best_obj = obj;
            best = current.clone();
        }
        if step < tol * spread {
            break;
        }
    }
    Ok(best)
}

/// Partition buckets into blocks, average `(H, g)` within each block, and
/// combine the block means robustly.
///
/// `stats` must be in a deterministic order (the pipeline uses ascending
/// bucket-key order); the partition shuffle provides the randomization.
pub fn robust_aggregate(
    stats: &[BucketStats],
    cfg: &AggregationConfig,
    rng_label: RngLabel,
) -> Result<RobustMoments> {
    if stats.is_empty() {
        return Err(Error::EmptyAggregation);
    }
    let d = stats[0].cross_moment.len();
    let partition = partition_blocks(stats.len(), cfg.block_size, rng_label)?;
    let mut mat_means = Vec::with_capacity(partition.blocks.len());
    let mut vec_means = Vec::with_capacity(partition.blocks.len());
    for block in &partition.blocks {
        let mut h = Array2::<f64>::zeros((d, d));
        let mut g = Array1::<f64>::zeros(d);
        for &idx in block {
            h += &stats[idx].second_moment;
            g += &stats[idx].cross_moment;
        }
        let inv = 1.0 / block.len() as f64;
        mat_means.push(h * inv);
        vec_means.push(g * inv);
    }
    let (covariance, cross_moment) = match cfg.mode {
        AggregationMode::CoordinateMedian => (
            mom_median_matrices(&mat_means)?,
            mom_median_vectors(&vec_means)?,
        ),
        AggregationMode::GeometricMedian => {
            let flat: Vec<Array1<f64>> = mat_means
                .iter()
                .map(|m| Array1::from_iter(m.iter().copied()))
                .collect();
            let med = geometric_median(&flat, 1e-9, 200)?;
            let mut m = Array2::from_shape_vec((d, d), med.to_vec())
                .expect("shape preserved by flattening");
            numkit::symmetrize(&mut m);
            (m, geometric_median(&vec_means, 1e-9, 200)?)
        }
    };
    Ok(RobustMoments {
        covariance,
        cross_moment,
        block_count: partition.blocks.len(),
    })
}

/// Robustly aggregate a family of symmetric matrices (used for the
/// residual covariance). Returns the aggregate and the block count.
pub fn robust_aggregate_matrices(
    mats: &[Array2<f64>],
    cfg: &AggregationConfig,
    rng_label: RngLabel,
) -> Result<(Array2<f64>, usize)> {
    if mats.is_empty() {
        return Err(Error::EmptyAggregation);
    }
    let d = mats[0].nrows();
    let mut order: Vec<usize> = (0..mats.len()).collect();
    order.shuffle(&mut rng_label.rng(domain::PARTITION_RESIDUAL));
    let mut means = Vec::new();
    for chunk in order.chunks(cfg.block_size) {
        let mut h = Array2::<f64>::zeros((d, d));
        for &idx in chunk {
            h += &mats[idx];
        }
        means.push(h / chunk.len() as f64);
    }
    let agg = match cfg.mode {
        AggregationMode::CoordinateMedian => mom_median_matrices(&means)?,
        AggregationMode::GeometricMedian => {
            let flat: Vec<Array1<f64>> = means
                .iter()
                .map(|m| Array1::from_iter(m.iter().copied()))
                .collect();
            let med = geometric_median(&flat, 1e-9, 200)?;
            let mut m = Array2::from_shape_vec((d, d), med.to_vec())
                .expect("shape preserved by flattening");
            numkit::symmetrize(&mut m);
            m
        }
    };
    let count = means.len();
    Ok((agg, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, Array2};

    #[test]
    fn partition_single_block() {
        let p = partition_blocks(10, 10, RngLabel::new(1, 0, 0)).unwrap();
        assert_eq!(p.blocks.len(), 1);
        assert_eq!(p.blocks[0].len(), 10);
    }

    #[test]
    fn partition_uneven_tail() {
        let p = partition_blocks(10, 3, RngLabel::new(2, 0, 0)).unwrap();
        let sizes: Vec<usize> = p.blocks.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 3, 1]);
        let mut seen: Vec<usize> = p.blocks.iter().flatten().copied().collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn partition_large_membership() {
        let p = partition_blocks(8000, 16, RngLabel::new(3, 0, 0)).unwrap();
        assert_eq!(p.blocks.len(), 500);
        let mut seen = vec![0u8; 8000];
        for block in &p.blocks {
            for &i in block {
                seen[i] += 1;
            }
        }
        assert!(
            seen.iter().all(|&c| c == 1),
            "each item in exactly one block"
        );
    }

    #[test]
    fn partition_rejects_empty() {
        assert!(matches!(
            partition_blocks(0, 4, RngLabel::new(0, 0, 0)),
            Err(Error::EmptyAggregation)
        ));
    }

    #[test]
    fn median_ignores_wild_value() {
        let items = vec![arr1(&[1.0]), arr1(&[2.0]), arr1(&[100.0])];
        let m = mom_median_vectors(&items).unwrap();
        assert_abs_diff_eq!(m[0], 2.0);
    }

    #[test]
    fn median_even_count_midpoint() {
        let items = vec![arr1(&[0.0, 0.0]), arr1(&[1.0, 1.0])];
        let m = mom_median_vectors(&items).unwrap();
        assert_abs_diff_eq!(m[0], 0.5);
        assert_abs_diff_eq!(m[1], 0.5);
    }

    #[test]
    fn median_matrices_majority_exact() {
        // 66 identities vs 33 wild copies: the entrywise sort oracle says
        // every entry's median is the identity's entry.
        let good = Array2::<f64>::eye(3);
        let bad = Array2::<f64>::eye(3) * 100.0;
        let mut items = Vec::new();
        for _ in 0..66 {
            items.push(good.clone());
        }
        for _ in 0..33 {
            items.push(bad.clone());
        }
        let m = mom_median_matrices(&items).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut col: Vec<f64> = items.iter().map(|it| it[(i, j)]).collect();
                col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let oracle = col[col.len() / 2];
                assert_eq!(m[(i, j)], oracle);
                assert_eq!(m[(i, j)], good[(i, j)]);
            }
        }
    }

    #[test]
    fn median_rejects_shape_mismatch() {
        let items = vec![arr1(&[1.0, 2.0]), arr1(&[1.0])];
        assert!(mom_median_vectors(&items).is_err());
    }

    #[test]
    fn geometric_median_single_point() {
        let p = arr1(&[3.0, -1.0]);
        let m = geometric_median(std::slice::from_ref(&p), 1e-9, 200).unwrap();
        assert_eq!(m, p);
    }

    #[test]
    fn geometric_median_equilateral_triangle() {
        let pts = vec![
            arr1(&[0.0, 0.0]),
            arr1(&[1.0, 0.0]),
            arr1(&[0.5, 3.0_f64.sqrt() / 2.0]),
        ];
        let m = geometric_median(&pts, 1e-10, 500).unwrap();
        let centroid = arr1(&[0.5, 3.0_f64.sqrt() / 6.0]);
        assert!(numkit::euclidean(&m.view(), &centroid.view()) < 1e-6);
    }

    #[test]
    fn geometric_median_matches_grid_search() {
        let pts = vec![
            arr1(&[0.0, 0.0]),
            arr1(&[1.0, 0.0]),
            arr1(&[0.0, 1.0]),
            arr1(&[10.0, 10.0]),
        ];
        let m = geometric_median(&pts, 1e-10, 500).unwrap();
        // 200x200 grid over [-1, 11]^2.
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for gx in 0..200 {
            for gy in 0..200 {
                let qx = -1.0 + 12.0 * gx as f64 / 199.0;
                let qy = -1.0 + 12.0 * gy as f64 / 199.0;
                let q = arr1(&[qx, qy]);
                let obj: f64 = pts
                    .iter()
                    .map(|p| numkit::euclidean(&p.view(), &q.view()))
                    .sum();
                if obj < best.0 {
                    best = (obj, qx, qy);
                }
            }
        }
        assert!(
            (m[0] - best.1).abs() < 1e-2,
            "x: {} vs grid {}",
            m[0],
            best.1
        );
        assert!(
            (m[1] - best.2).abs() < 1e-2,
            "y: {} vs grid {}",
            m[1],
            best.2
        );
    }

    #[test]
    fn geometric_median_anchored_at_data_point() {
        // The median of a heavily repeated point is that point.
        let pts = vec![
            arr1(&[1.0, 1.0]),
            arr1(&[1.0, 1.0]),
            arr1(&[1.0, 1.0]),
            arr1(&[5.0, 5.0]),
        ];
        let m = geometric_median(&pts, 1e-10, 500).unwrap();
        assert!(numkit::euclidean(&m.view(), &pts[0].view()) < 1e-6);
    }

    #[test]
    fn weiszfeld_objective_descends() {
        let pts: Vec<Array1<f64>> = (0..9)
            .map(|i| arr1(&[(i as f64 * 1.3).sin() * 4.0, (i as f64 * 0.7).cos() * 4.0]))
            .collect();
        // Re-run the iteration manually, tracking the objective.
        let mut current = {
            let mut c = Array1::<f64>::zeros(2);
            for p in &pts {
                c += p;
            }
            c / pts.len() as f64
        };
        let objective = |q: &Array1<f64>| -> f64 {
            pts.iter()
                .map(|p| numkit::euclidean(&p.view(), &q.view()))
                .sum()
        };
        let mut last = objective(&current);
        for _ in 0..60 {
            let mut weighted = Array1::<f64>::zeros(2);
            let mut wsum = 0.0;
            for p in &pts {
                let dist = numkit::euclidean(&p.view(), &current.view());
                if dist <= 1e-12 {
                    continue;
                }
                weighted.scaled_add(1.0 / dist, p);
                wsum += 1.0 / dist;
            }
            current = &weighted / wsum;
            let obj = objective(&current);
            assert!(
                obj <= last + 1e-10,
                "Weiszfeld objective increased: {obj} > {last}"
            );
            last = obj;
        }
    }

    fn constant_stats(h: &Array2<f64>, g: &Array1<f64>, n: usize) -> Vec<BucketStats> {
        (0..n)
            .map(|_| BucketStats {
                second_moment: h.clone(),
                cross_moment: g.clone(),
                count: 5,
            })
            .collect()
    }

    #[test]
    fn aggregate_constant_buckets_exact() {
        let h = Array2::<f64>::eye(3) * 1.5;
        let g = arr1(&[1.0, -2.0, 0.5]);
        let stats = constant_stats(&h, &g, 37);
        for mode in [
            AggregationMode::CoordinateMedian,
            AggregationMode::GeometricMedian,
        ] {
            let cfg = AggregationConfig {
                block_size: 4,
                mode,
            };
            let out = robust_aggregate(&stats, &cfg, RngLabel::new(4, 0, 0)).unwrap();
            for i in 0..3 {
                assert_abs_diff_eq!(out.cross_moment[i], g[i], epsilon = 1e-9);
                for j in 0..3 {
                    assert_abs_diff_eq!(out.covariance[(i, j)], h[(i, j)], epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn aggregate_resists_corrupted_buckets() {
        // 30% of buckets replaced by a 1e6-scaled matrix: the estimate
        // stays within the range of the good buckets entrywise.
        let h = Array2::<f64>::eye(4);
        let g = arr1(&[1.0, 1.0, 1.0, 1.0]);
        let mut stats = constant_stats(&h, &g, 70);
        let wild = Array2::<f64>::eye(4) * 1.0e6;
        for _ in 0..30 {
            stats.push(BucketStats {
                second_moment: wild.clone(),
                cross_moment: &g * 1.0e6,
                count: 5,
            });
        }
        let cfg = AggregationConfig {
            block_size: 1,
            mode: AggregationMode::CoordinateMedian,
        };
        let out = robust_aggregate(&stats, &cfg, RngLabel::new(5, 0, 0)).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(out.covariance[(i, i)], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(out.cross_moment[i], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn aggregate_output_symmetric() {
        let mut asym = Array2::<f64>::zeros((3, 3));
        asym[(0, 1)] = 1.0;
        asym[(1, 0)] = 0.0;
        let stats = vec![BucketStats {
            second_moment: asym,
            cross_moment: arr1(&[0.0, 0.0, 0.0]),
            count: 1,
        }];
        let out = robust_aggregate(
            &stats,
            &AggregationConfig::default(),
            RngLabel::new(6, 0, 0),
        )
        .unwrap();
        assert_eq!(out.covariance[(0, 1)], out.covariance[(1, 0)]);
    }

    #[test]
    fn aggregate_empty_is_error() {
        assert!(matches!(
            robust_aggregate(&[], &AggregationConfig::default(), RngLabel::new(0, 0, 0)),
            Err(Error::EmptyAggregation)
        ));
    }
}
