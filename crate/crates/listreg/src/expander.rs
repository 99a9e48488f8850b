//! Random signed left-regular bipartite graphs and their combinatorial
//! diagnostics.
//!
//! Each left vertex (a data row) picks `degree` distinct buckets uniformly
//! at random, and every edge carries an independent fair sign. Small left
//! subsets of such graphs expand almost losslessly, which is what isolates
//! inliers into lightly contaminated buckets downstream. The diagnostics
//! here — neighbor counts, unique neighbors, collision excess, loads — are
//! exact, not sampled, and are the quantities the estimator's correctness
//! story is built on.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{domain, RngLabel};

/// One repetition's signed left-regular bipartite graph.
///
/// Immutable after sampling; regenerating with the same label reproduces
/// the identical graph and signs.
#[derive(Debug, Clone)]
pub struct ExpanderSketch {
    n_left: usize,
    n_buckets: usize,
    degree: usize,
    /// Bucket choices, `degree` per left vertex, flattened row-major.
    adjacency: Vec<u32>,
    /// Edge signs in {-1, +1}, aligned with `adjacency`.
    signs: Vec<i8>,
    rng_label: RngLabel,
}

impl ExpanderSketch {
    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_buckets(&self) -> usize {
        self.n_buckets
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rng_label(&self) -> RngLabel {
        self.rng_label
    }

    /// The `degree` distinct buckets chosen by left vertex `i`.
    pub fn buckets_of(&self, i: usize) -> &[u32] {
        &self.adjacency[i * self.degree..(i + 1) * self.degree]
    }

    /// Edge signs of vertex `i`, aligned with [`Self::buckets_of`].
    pub fn signs_of(&self, i: usize) -> &[i8] {
        &self.signs[i * self.degree..(i + 1) * self.degree]
    }

    pub fn edge_count(&self) -> usize {
        self.n_left * self.degree
    }

    /// Text adjacency dump, one line per left vertex: `i: b+,b-,...`.
    pub fn adjacency_dump(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n_left {
            let _ = write!(out, "{i}:");
            for (k, (&b, &s)) in self.buckets_of(i).iter().zip(self.signs_of(i)).enumerate() {
                let sep = if k == 0 { ' ' } else { ',' };
                let sign = if s > 0 { '+' } else { '-' };
                let _ = write!(out, "{sep}{b}{sign}");
            }
            out.push('\n');
        }
        out
    }
}

/// Exact combinatorial structure of one left subset `X`.
#[derive(Debug, Clone)]
pub struct SubsetDiagnostics {
    /// `|N(X)|`: number of buckets adjacent to `X`.
    pub neighbor_count: usize,
    /// Buckets adjacent to exactly one member of `X`, ascending.
    pub unique_neighbor_buckets: Vec<u32>,
    /// Edges beyond the first landing in each bucket.
    pub collision_excess: usize,
    /// For each vertex of `X` (in the deduplicated ascending order of
    /// [`SubsetDiagnostics::subset`]), how many of its buckets are unique.
    pub per_vertex_unique: Vec<usize>,
    /// The deduplicated, ascending subset the diagnostics refer to.
    pub subset: Vec<usize>,
    /// `L_b(X)` for every bucket `b`.
    pub bucket_loads: Vec<u32>,
}

/// Contamination census over the unique-neighbor buckets of an inlier set.
#[derive(Debug, Clone)]
pub struct CensusRecord {
    /// Number of buckets that are unique neighbors of the inlier set.
    pub unique_bucket_count: usize,
    /// Fraction of those buckets holding at most `cap` outliers
    /// (1.0 when there are no unique buckets).
    pub fraction_good: f64,
    /// Mean outlier count over the unique buckets (0.0 when none).
    pub mean_outlier_count: f64,
    /// Fraction of inliers owning at least one capped unique bucket.
    pub fraction_inliers_with_good_bucket: f64,
}

/// Sample a signed left-regular bipartite graph.
///
/// Each vertex's bucket set is a uniform `degree`-subset of
/// `[0, n_buckets)` drawn from its own label-derived stream, so the graph
/// is reproducible and independent of sampling order.
pub fn sample_expander(
    n_left: usize,
    n_buckets: usize,
    degree: usize,
    rng_label: RngLabel,
) -> Result<ExpanderSketch> {
    if n_left == 0 || n_buckets == 0 || degree == 0 {
        return Err(Error::Parameter(
            "sample_expander: dimensions must be positive".into(),
        ));
    }
    if degree > n_buckets {
        return Err(Error::Parameter(format!(
            "sample_expander: degree {degree} exceeds bucket count {n_buckets}"
        )));
    }
    let mut adjacency = Vec::with_capacity(n_left * degree);
    let mut signs = Vec::with_capacity(n_left * degree);
    for v in 0..n_left {
        let mut rng = rng_label.vertex_rng(domain::GRAPH, v as u64);
        let picks = index::sample(&mut rng, n_buckets, degree);
        for b in picks {
            adjacency.push(b as u32);
            signs.push(if rng.random::<bool>() { 1 } else { -1 });
        }
    }
    Ok(ExpanderSketch {
        n_left,
        n_buckets,
        degree,
        adjacency,
        signs,
        rng_label,
    })
}

/// Exact neighbor/uniqueness/collision/load diagnostics for subset `X`.
///
/// Duplicate indices are collapsed; out-of-range indices are rejected.
pub fn subset_diagnostics(graph: &ExpanderSketch, subset: &[usize]) -> Result<SubsetDiagnostics> {
    let mut xs: Vec<usize> = subset.to_vec();
    xs.sort_unstable();
    xs.dedup();
    if let Some(&bad) = xs.iter().find(|&&i| i >= graph.n_left) {
        return Err(Error::Parameter(format!(
            "subset_diagnostics: vertex {bad} out of range (n_left = {})",
            graph.n_left
        )));
    }

    let mut bucket_loads = vec![0u32; graph.n_buckets];
    for &i in &xs {
        for &b in graph.buckets_of(i) {
            bucket_loads[b as usize] += 1;
        }
    }
    let mut neighbor_count = 0usize;
    let mut collision_excess = 0usize;
    let mut unique = Vec::new();
    for (b, &load) in bucket_loads.iter().enumerate() {
        if load > 0 {
            neighbor_count += 1;
            collision_excess += (load - 1) as usize;
            if load == 1 {
                unique.push(b as u32);
            }
        }
    }
    let per_vertex_unique = xs
        .iter()
        .map(|&i| {
            graph
                .buckets_of(i)
                .iter()
                .filter(|&&b| bucket_loads[b as usize] == 1)
                .count()
        })
        .collect();

    Ok(SubsetDiagnostics {
        neighbor_count,
        unique_neighbor_buckets: unique,
        collision_excess,
        per_vertex_unique,
        subset: xs,
        bucket_loads,
    })
}

/// One-sided empirical estimate of the lossless-expansion parameter:
/// the max over sampled subsets of `1 - |N(X)| / (degree * |X|)`.
pub fn audit_expansion(
    graph: &ExpanderSketch,
    max_set_size: usize,
    trials: usize,
    rng_label: RngLabel,
) -> Result<f64> {
    if max_set_size == 0 || max_set_size > graph.n_left {
        return Err(Error::Parameter(format!(
            "audit_expansion: max_set_size must be in [1, {}]",
            graph.n_left
        )));
    }
    if trials == 0 {
        return Err(Error::Parameter(
            "audit_expansion: trials must be >= 1".into(),
        ));
    }
    let mut rng = rng_label.rng(domain::AUDIT);
    let mut worst: f64 = 0.0;
    let mut loads: HashMap<u32, u32> = HashMap::new();
    for _ in 0..trials {
        let size = rng.random_range(1..=max_set_size);
        let subset = index::sample(&mut rng, graph.n_left, size);
        loads.clear();
        for i in subset {
            for &b in graph.buckets_of(i) {
                *loads.entry(b).or_insert(0) += 1;
            }
        }
        let neighbors = loads.len();
        let eps = 1.0 - neighbors as f64 / (graph.degree * size) as f64;
        worst = worst.max(eps);
    }
    Ok(worst)
}

/// Census of outlier contamination across the unique buckets of `inliers`.
pub fn light_contamination_census(
    graph: &ExpanderSketch,
    inliers: &[usize],
    outliers: &[usize],
    cap: usize,
) -> Result<CensusRecord> {
    let diag = subset_diagnostics(graph, inliers)?;
    let outlier_diag = subset_diagnostics(graph, outliers)?;
    if diag
        .subset
        .iter()
        .any(|i| outlier_diag.subset.binary_search(i).is_ok())
    {
        return Err(Error::Parameter(
            "light_contamination_census: inlier and outlier sets overlap".into(),
        ));
    }

    let unique = &diag.unique_neighbor_buckets;
    if unique.is_empty() {
        return Ok(CensusRecord {
            unique_bucket_count: 0,
            fraction_good: 1.0,
            mean_outlier_count: 0.0,
            fraction_inliers_with_good_bucket: 0.0,
        });
    }

    let mut good = 0usize;
    let mut total_outliers = 0usize;
    let mut bucket_good = vec![false; graph.n_buckets];
    for &b in unique {
        let count = outlier_diag.bucket_loads[b as usize] as usize;
        total_outliers += count;
        if count <= cap {
            good += 1;
            bucket_good[b as usize] = true;
        }
    }
    let owners_with_good = diag
        .subset
        .iter()
        .filter(|&&i| {
            graph
                .buckets_of(i)
                .iter()
                .any(|&b| bucket_good[b as usize] && diag.bucket_loads[b as usize] == 1)
        })
        .count();

    Ok(CensusRecord {
        unique_bucket_count: unique.len(),
        fraction_good: good as f64 / unique.len() as f64,
        mean_outlier_count: total_outliers as f64 / unique.len() as f64,
        fraction_inliers_with_good_bucket: owners_with_good as f64
            / diag.subset.len().max(1) as f64,
    })
}
