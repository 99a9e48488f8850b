//! Real-data stress test: contaminate an inlier table with an outlier
//! table (zero-pad, standardize, degree-2 expand, PCA to 10 dims), train
//! everything on the mixture, and evaluate on a clean inlier-only split.
//!
//!     cargo run --release --example real_mixture -- CASP.csv Concrete_Data.csv
//!
//! The first CSV is the inlier table (response in column 0, as in CASP);
//! the second is the outlier table (response in the last column, as in
//! Concrete Compressive Strength). Both need a header row.

use listreg::baselines;
use listreg::data::{self, build_real_mixture, ColumnSchema};
use listreg::pipeline::{run_list, select_best, PipelineConfig};
use ndarray::Array1;
use std::path::Path;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let (Some(inlier_path), Some(outlier_path)) = (args.get(1), args.get(2)) else {
        eprintln!("usage: real_mixture <inlier.csv> <outlier.csv>");
        eprintln!("inlier response is read from column 0, outlier response from the last column");
        std::process::exit(2);
    };

    let inliers = data::load_table(
        Path::new(inlier_path),
        &ColumnSchema {
            response: 0,
            features: None,
        },
    )
    .unwrap_or_else(|e| panic!("loading {inlier_path}: {e}"));
    let probe_width = {
        let raw = data::load_table(
            Path::new(outlier_path),
            &ColumnSchema {
                response: 0,
                features: None,
            },
        )
        .unwrap_or_else(|e| panic!("loading {outlier_path}: {e}"));
        raw.features.ncols()
    };
    let outliers = data::load_table(
        Path::new(outlier_path),
        &ColumnSchema {
            response: probe_width,
            features: None,
        },
    )
    .unwrap_or_else(|e| panic!("loading {outlier_path}: {e}"));
    println!(
        "inliers: {} rows x {} features ({} rejected); outliers: {} rows x {} features ({} rejected)",
        inliers.features.nrows(),
        inliers.features.ncols(),
        inliers.rejected_rows,
        outliers.features.nrows(),
        outliers.features.ncols(),
        outliers.rejected_rows
    );

    let mix = build_real_mixture(&inliers, &outliers, 1400, 0.3, 10, 1000, 0).unwrap();
    println!(
        "mixture: train {}x{}, clean test {}x{}, oracle pool {} rows",
        mix.train.n(),
        mix.train.dim(),
        mix.test.n(),
        mix.test.dim(),
        mix.oracle_train.n()
    );

    let x = mix.train.design.view();
    let y = mix.train.responses.view();
    let tx = mix.test.design.view();
    let ty = mix.test.responses.view();
    let mse = |w: &Array1<f64>| data::empirical_mse(&w.view(), &tx, &ty);

    let oracle = baselines::ols_fit(
        &mix.oracle_train.design.view(),
        &mix.oracle_train.responses.view(),
    )
    .unwrap();
    println!("\n{:<22} {:>12}", "method", "test MSE");
    println!(
        "{:<22} {:>12.2}",
        "oracle OLS (clean)",
        mse(&oracle.coefficients)
    );
    println!(
        "{:<22} {:>12.2}",
        "ols on mixture",
        mse(&baselines::ols_fit(&x, &y).unwrap().coefficients)
    );
    println!(
        "{:<22} {:>12.2}",
        "ridge on mixture",
        mse(&baselines::ridge_fit(&x, &y, 1.0).unwrap().coefficients)
    );
    println!(
        "{:<22} {:>12.2}",
        "huber on mixture",
        mse(&baselines::huber_fit(&x, &y, None, 100, 1e-8)
            .unwrap()
            .coefficients)
    );
    println!(
        "{:<22} {:>12.2}",
        "ransac on mixture",
        mse(&baselines::ransac_fit(&x, &y, x.ncols(), None, 100, 0)
            .unwrap()
            .coefficients)
    );

    // The published real-data configuration uses shrinkage 0.45.
    let cfg = PipelineConfig {
        rho: 0.45,
        master_seed: 0,
        ..PipelineConfig::default()
    };
    let list = run_list(&x, &y, &cfg).unwrap();
    let first = list.candidates.iter().find(|c| c.seed_index == 1).unwrap();
    println!(
        "{:<22} {:>12.2}",
        "expander (1 seed)",
        mse(&first.coefficients)
    );
    let best = select_best(&list, &tx, &ty).unwrap();
    println!("{:<22} {:>12.2}", "expander (best of 10)", mse(&best));
}
