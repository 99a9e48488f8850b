//! Head-to-head on one contaminated instance: the expander pipeline
//! against OLS, ridge, Huber, and RANSAC, all trained on the same data
//! and scored on a clean test set.
//!
//!     cargo run --release --example single_run

use listreg::baselines;
use listreg::data::{evaluate, gen_clean_test, gen_synthetic, SynthConfig};
use listreg::pipeline::{run_list, select_best, PipelineConfig};
use ndarray::Array1;

fn main() {
    let synth = SynthConfig {
        alpha: 0.3,
        seed: 1,
        ..SynthConfig::default()
    };
    let data = gen_synthetic(&synth).unwrap();
    let truth = data.ground_truth.clone().unwrap();
    let test = gen_clean_test(&truth, 2000, synth.noise_sigma, synth.seed);
    let x = data.design.view();
    let y = data.responses.view();

    println!(
        "alpha = {}, n = {}, d = {}, outlier scale = {}",
        synth.alpha, synth.n, synth.d, synth.outlier_scale
    );
    println!("{:<12} {:>10} {:>12}", "method", "test MSE", "param error");
    let report = |name: &str, w: &Array1<f64>| {
        let m = evaluate(&w.view(), &test).unwrap();
        println!("{:<12} {:>10.3} {:>12.3}", name, m.test_mse, m.param_error);
    };

    report("ols", &baselines::ols_fit(&x, &y).unwrap().coefficients);
    report(
        "ridge",
        &baselines::ridge_fit(&x, &y, 1.0).unwrap().coefficients,
    );
    report(
        "huber",
        &baselines::huber_fit(&x, &y, None, 100, 1e-8)
            .unwrap()
            .coefficients,
    );
    report(
        "ransac",
        &baselines::ransac_fit(&x, &y, x.ncols(), None, 100, synth.seed)
            .unwrap()
            .coefficients,
    );

    let cfg = PipelineConfig {
        master_seed: synth.seed,
        ..PipelineConfig::default()
    };
    let list = run_list(&x, &y, &cfg).unwrap();
    let first = list.candidates.iter().find(|c| c.seed_index == 1).unwrap();
    report("expander_1", &first.coefficients);
    let best = select_best(&list, &test.design.view(), &test.responses.view()).unwrap();
    report("expander_l", &best);
}
