//! Miniature inlier-fraction sweep through the experiment harness,
//! written to CSV (rows plus a mean/std aggregate sibling).
//!
//!     cargo run --release --example alpha_sweep

use listreg::experiment::{aggregate_path, run_experiment, ExperimentKind, ExperimentSpec, Method};
use listreg::pipeline::PipelineConfig;

fn main() {
    let mut spec = ExperimentSpec::new(ExperimentKind::AlphaSweep, vec![0.5, 0.3]);
    // Scaled down so the example finishes in seconds.
    spec.synth.n = 1500;
    spec.synth.d = 10;
    spec.pipeline = PipelineConfig {
        n_buckets: 300,
        seeds: 5,
        ..PipelineConfig::default()
    };
    spec.replication_seeds = vec![0, 1, 2];
    spec.methods = vec![Method::Ols, Method::Huber, Method::ExpanderList];
    spec.n_test = 1000;
    let out = std::env::temp_dir().join("listreg_alpha_sweep.csv");
    spec.out_path = Some(out.clone());

    let table = run_experiment(&spec).unwrap();
    println!("wrote {} rows to {}", table.rows.len(), out.display());
    println!("aggregates in {}\n", aggregate_path(&out).display());
    println!(
        "{:<12} {:>6} {:>12} {:>12}",
        "method", "alpha", "mean MSE", "std MSE"
    );
    for agg in &table.aggregate {
        println!(
            "{:<12} {:>6} {:>12.3} {:>12.3}",
            agg.method,
            agg.grid_value,
            agg.mean_test_mse.unwrap_or(f64::NAN),
            agg.std_test_mse.unwrap_or(f64::NAN)
        );
    }
    assert!(table.all_ok);
}
