//! Generate a contaminated synthetic instance and inspect its structure:
//! inlier counts, residual scales, and what plain OLS sees.
//!
//!     cargo run --release --example synthetic_contamination

use listreg::baselines::ols_fit;
use listreg::data::{evaluate, gen_clean_test, gen_synthetic, SynthConfig};

fn main() {
    let cfg = SynthConfig {
        n: 5000,
        d: 20,
        alpha: 0.3,
        noise_sigma: 0.1,
        outlier_scale: 10.0,
        seed: 0,
    };
    let data = gen_synthetic(&cfg).unwrap();
    let mask = data.inlier_mask.as_ref().unwrap();
    let truth = data.ground_truth.as_ref().unwrap();

    let inliers = mask.iter().filter(|&&m| m).count();
    println!(
        "instance: n = {}, d = {}, inliers = {inliers} (alpha = {})",
        data.n(),
        data.dim(),
        cfg.alpha
    );
    println!("||w*||^2 = {:.2}", truth.dot(truth));

    let mut inlier_sq = 0.0;
    let mut outlier_sq = 0.0;
    for (i, &is_inlier) in mask.iter().enumerate() {
        let r = data.responses[i] - data.design.row(i).dot(truth);
        if is_inlier {
            inlier_sq += r * r;
        } else {
            outlier_sq += r * r;
        }
    }
    println!(
        "residual rms around the true model: inliers {:.3} (sigma = {}), outliers {:.3}",
        (inlier_sq / inliers as f64).sqrt(),
        cfg.noise_sigma,
        (outlier_sq / (data.n() - inliers) as f64).sqrt()
    );

    // What contamination does to an unprotected fit.
    let test = gen_clean_test(truth, 2000, cfg.noise_sigma, cfg.seed);
    let ols = ols_fit(&data.design.view(), &data.responses.view()).unwrap();
    let metrics = evaluate(&ols.coefficients.view(), &test).unwrap();
    println!(
        "OLS on the contaminated data: test MSE = {:.2}, parameter error = {:.2}",
        metrics.test_mse, metrics.param_error
    );
}
