//! Numerical-kernel checks against independent oracles.

mod common;

use common::{jacobi_eigen, seeded_matrix};
use listreg::numkit;
use listreg::rng::RngLabel;
use ndarray::{Array1, Array2};

#[test]
fn ridge_solve_matches_elimination_on_random_spd_systems() {
    let worst = common::ridge_vs_elimination_worst_gap();
    assert!(worst <= 1e-8, "worst relative gap {worst}");
}

#[test]
fn top_eigenpair_matches_jacobi_on_random_symmetric_matrices() {
    let worst = common::power_vs_jacobi_worst_gap();
    assert!(worst <= 1e-6, "worst relative eigenvalue gap {worst}");
}

#[test]
fn single_linkage_matches_bfs_components_exactly() {
    assert_eq!(common::linkage_vs_bfs_mismatches(), 0);
}

#[test]
fn pca_matches_jacobi_reconstruction() {
    let x = seeded_matrix(200, 6, 77);
    let k = 3;
    let basis = numkit::pca_fit(&x.view(), k).unwrap();

    let mean = x.mean_axis(ndarray::Axis(0)).unwrap();
    let centered = &x - &mean.view().insert_axis(ndarray::Axis(0));
    let cov = centered.t().dot(&centered) / (x.nrows() as f64 - 1.0);
    let (_, vectors) = jacobi_eigen(&cov);
    let oracle_basis = vectors.slice(ndarray::s![.., ..k]).to_owned();

    let recon = |b: &Array2<f64>| -> f64 {
        let proj = centered.dot(b).dot(&b.t());
        let resid = &centered - &proj;
        resid.iter().map(|v| v * v).sum::<f64>()
    };
    let got = recon(&basis);
    let oracle = recon(&oracle_basis);
    let rel = (got - oracle).abs() / oracle.max(1e-300);
    assert!(
        rel <= 1e-6,
        "reconstruction error {got} vs oracle {oracle} (rel {rel})"
    );

    // Basis orthonormality to 1e-8.
    let gram = basis.t().dot(&basis);
    for i in 0..k {
        for j in 0..k {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((gram[(i, j)] - expect).abs() < 1e-8);
        }
    }
}

#[test]
fn geometric_median_beats_every_input_point() {
    // The returned point's objective is no worse than the best input's.
    use rand::Rng;
    for trial in 0..25 {
        let mut rng = RngLabel::new(6000 + trial, 0, 0).rng(listreg::rng::domain::DATA);
        let n = 3 + (trial as usize % 12);
        let points: Vec<Array1<f64>> = (0..n)
            .map(|_| Array1::from_iter((0..3).map(|_| rng.random::<f64>() * 6.0 - 3.0)))
            .collect();
        let med = listreg::robust_agg::geometric_median(&points, 1e-10, 500).unwrap();
        let objective = |q: &Array1<f64>| -> f64 {
            points
                .iter()
                .map(|p| numkit::euclidean(&p.view(), &q.view()))
                .sum()
        };
        let best_input = points.iter().map(&objective).fold(f64::INFINITY, f64::min);
        assert!(objective(&med) <= best_input + 1e-9, "trial {trial}");
    }
}
