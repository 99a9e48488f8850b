//! Sample a random signed expander and audit its combinatorial health:
//! subset diagnostics, an empirical lossless-expansion certificate, and a
//! light-contamination census over a random inlier/outlier split.
//!
//!     cargo run --release --example expander_audit

use listreg::expander::{
    audit_expansion, light_contamination_census, sample_expander, subset_diagnostics,
};
use listreg::rng::{domain, RngLabel};
use rand::seq::SliceRandom;

fn main() {
    let (n, buckets, degree) = (10_000, 10_000, 4);
    let graph = sample_expander(n, buckets, degree, RngLabel::new(7, 0, 0)).unwrap();
    println!(
        "graph: n = {n}, buckets = {buckets}, degree = {degree}, edges = {}",
        graph.edge_count()
    );

    // Exact diagnostics of a small subset.
    let subset: Vec<usize> = (0..24).collect();
    let diag = subset_diagnostics(&graph, &subset).unwrap();
    println!(
        "subset |X| = 24: |N(X)| = {}, |U(X)| = {}, collision excess = {}",
        diag.neighbor_count,
        diag.unique_neighbor_buckets.len(),
        diag.collision_excess
    );
    assert_eq!(diag.neighbor_count + diag.collision_excess, degree * 24);

    // One-sided empirical expansion loss over sampled subsets.
    let eps = audit_expansion(&graph, 50, 2000, RngLabel::new(8, 0, 0)).unwrap();
    println!("empirical expansion loss over |X| <= 50: eps_hat = {eps:.4}");

    // How contaminated are the unique buckets of a 30% inlier split?
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut RngLabel::new(9, 0, 0).rng(domain::AUDIT));
    let (inliers, outliers) = ids.split_at(3 * n / 10);
    let census = light_contamination_census(&graph, inliers, outliers, 3).unwrap();
    println!(
        "census (alpha = 0.3, cap = 3): {} unique buckets, fraction good = {:.3}, \
         mean outliers per unique bucket = {:.2}, inliers owning a good bucket = {:.3}",
        census.unique_bucket_count,
        census.fraction_good,
        census.mean_outlier_count,
        census.fraction_inliers_with_good_bucket
    );

    // Tiny graphs can be dumped for inspection.
    let small = sample_expander(5, 8, 2, RngLabel::new(10, 0, 0)).unwrap();
    println!(
        "\nadjacency dump of a 5-vertex graph:\n{}",
        small.adjacency_dump()
    );
}
