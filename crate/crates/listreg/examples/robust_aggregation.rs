//! Compare coordinate-wise median-of-means with the geometric median on
//! block means under increasing corruption.
//!
//!     cargo run --release --example robust_aggregation

use listreg::numkit;
use listreg::rng::{domain, RngLabel};
use listreg::robust_agg::{geometric_median, mom_median_vectors};
use ndarray::Array1;
use rand::Rng;

fn main() {
    let d = 8;
    let blocks = 200;
    let truth = Array1::from_iter((0..d).map(|j| (j as f64 * 0.9).sin()));
    let mut rng = RngLabel::new(11, 0, 0).rng(domain::DATA);

    println!(
        "{:>10} {:>14} {:>14} {:>14}",
        "bad frac", "plain mean", "mom median", "geo median"
    );
    for bad_tenths in [0, 1, 2, 3, 4] {
        let bad = blocks * bad_tenths / 10;
        let mut points: Vec<Array1<f64>> = Vec::new();
        for i in 0..blocks {
            if i < bad {
                // Adversarial block mean placed far away.
                points.push(Array1::from_iter(
                    (0..d).map(|_| 1.0e4 * (rng.random::<f64>() - 0.5)),
                ));
            } else {
                points.push(Array1::from_iter(
                    truth.iter().map(|t| t + 0.3 * (rng.random::<f64>() - 0.5)),
                ));
            }
        }
        let mut mean = Array1::<f64>::zeros(d);
        for p in &points {
            mean += p;
        }
        mean /= blocks as f64;
        let mom = mom_median_vectors(&points).unwrap();
        let geo = geometric_median(&points, 1e-9, 200).unwrap();
        let err = |est: &Array1<f64>| {
            let diff = est - &truth;
            numkit::norm(&diff.view())
        };
        println!(
            "{:>9}% {:>14.4} {:>14.4} {:>14.4}",
            bad_tenths * 10,
            err(&mean),
            err(&mom),
            err(&geo)
        );
    }
    println!("\nthe plain mean is destroyed by any corruption; both robust aggregates hold");
}
