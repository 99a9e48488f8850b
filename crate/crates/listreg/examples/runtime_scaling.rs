//! Sketching and bucket statistics run in time linear in n at fixed
//! (buckets, degree, repetitions): time them across a range of n.
//!
//!     cargo run --release --example runtime_scaling

use std::time::Instant;

use listreg::data::{gen_synthetic, SynthConfig};
use listreg::expander::sample_expander;
use listreg::pipeline::PipelineConfig;
use listreg::rng::RngLabel;
use listreg::sketch::{assign_buckets, bucket_moments};

fn main() {
    let cfg = PipelineConfig::default();
    println!(
        "B = {}, degree = {}, repetitions = {}",
        cfg.n_buckets, cfg.degree, cfg.repetitions
    );
    println!("{:>8} {:>12} {:>10}", "n", "time (ms)", "vs prev");
    let mut prev: Option<f64> = None;
    for n in [2500usize, 5000, 10_000, 20_000] {
        let data = gen_synthetic(&SynthConfig {
            n,
            d: 20,
            alpha: 0.3,
            ..SynthConfig::default()
        })
        .unwrap();
        let x = data.design.view();
        let y = data.responses.view();
        let mut best = f64::INFINITY;
        for rep in 0..5 {
            let started = Instant::now();
            let graphs: Vec<_> = (0..cfg.repetitions)
                .map(|t| {
                    sample_expander(
                        n,
                        cfg.n_buckets,
                        cfg.degree,
                        RngLabel::new(rep, 1, t as u64),
                    )
                    .unwrap()
                })
                .collect();
            let asg = assign_buckets(&x, &y, &graphs).unwrap();
            let mut checksum = 0.0;
            for key in asg.active_buckets() {
                checksum += bucket_moments(&x, &y, &asg, key.repetition, key.bucket)
                    .unwrap()
                    .count as f64;
            }
            assert_eq!(checksum as usize, n * cfg.degree * cfg.repetitions);
            best = best.min(started.elapsed().as_secs_f64());
        }
        let ratio = prev
            .map(|p| format!("{:.2}x", best / p))
            .unwrap_or_else(|| "-".into());
        println!("{:>8} {:>12.2} {:>10}", n, best * 1e3, ratio);
        prev = Some(best);
    }
    println!("\ndoubling n should roughly double the time (input-sparsity behavior)");
}
