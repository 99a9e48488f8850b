//! Scratch probe: clean-run aggregation deviation across configs.

use listreg::expander::sample_expander;
use listreg::numkit;
use listreg::rng::RngLabel;
use listreg::robust_agg::{robust_aggregate, AggregationConfig, AggregationMode};
use listreg::sketch::{assign_buckets, bucket_moments};
use ndarray::Array2;

fn main() {
    for seed in [0u64, 1, 2] {
        let data = listreg::data::gen_synthetic(&listreg::data::SynthConfig {
            n: 5000,
            d: 10,
            alpha: 1.0,
            seed,
            ..Default::default()
        })
        .unwrap();
        let truth = data.ground_truth.clone().unwrap();
        let x = data.design.view();
        let y = data.responses.view();
        let graphs: Vec<_> = (0..8)
            .map(|t| sample_expander(5000, 1000, 2, RngLabel::new(seed, 1, t as u64)).unwrap())
            .collect();
        let asg = assign_buckets(&x, &y, &graphs).unwrap();
        let stats: Vec<_> = asg
            .active_buckets()
            .iter()
            .map(|k| bucket_moments(&x, &y, &asg, k.repetition, k.bucket).unwrap())
            .collect();
        println!("seed {seed} ||w*|| = {:.2}", numkit::norm(&truth.view()));
        for (name, bs, mode) in [
            ("mom/16", 16, AggregationMode::CoordinateMedian),
            ("mom/1", 1, AggregationMode::CoordinateMedian),
            ("geo/1", 1, AggregationMode::GeometricMedian),
            ("geo/32", 32, AggregationMode::GeometricMedian),
            ("mean", 100_000, AggregationMode::CoordinateMedian),
        ] {
            let cfg = AggregationConfig { block_size: bs, mode };
            let out = robust_aggregate(&stats, &cfg, RngLabel::new(9, 0, 0)).unwrap();
            let mut dev = out.covariance.clone();
            for i in 0..10 {
                dev[(i, i)] -= 1.0;
            }
            let sig =
                numkit::top_eigenpair(&dev.view(), 1e-10, 20_000, RngLabel::new(5, 0, 0)).value.abs();
            let gd = &out.cross_moment - &truth;
            println!("  {name:>8}: ||sigma-I||_op = {sig:.3}  ||g-w*|| = {:.3}", numkit::norm(&gd.view()));
        }
    }
    // corruption shift at geo/1, seed 0
    let data = listreg::data::gen_synthetic(&listreg::data::SynthConfig {
        n: 5000, d: 10, alpha: 1.0, seed: 0, ..Default::default()
    }).unwrap();
    let x = data.design.view();
    let y = data.responses.view();
    let graphs: Vec<_> = (0..8)
        .map(|t| sample_expander(5000, 1000, 2, RngLabel::new(0, 1, t as u64)).unwrap())
        .collect();
    let asg = assign_buckets(&x, &y, &graphs).unwrap();
    let stats: Vec<_> = asg.active_buckets().iter()
        .map(|k| bucket_moments(&x, &y, &asg, k.repetition, k.bucket).unwrap())
        .collect();
    for (name, bs, mode) in [
        ("mom/1", 1, AggregationMode::CoordinateMedian),
        ("geo/1", 1, AggregationMode::GeometricMedian),
    ] {
        let cfg = AggregationConfig { block_size: bs, mode };
        let clean = robust_aggregate(&stats, &cfg, RngLabel::new(9, 0, 0)).unwrap();
        let mut corrupted = stats.clone();
        for (i, s) in corrupted.iter_mut().enumerate() {
            if i % 10 < 3 {
                s.second_moment = Array2::<f64>::eye(10) * 1.0e6;
                s.cross_moment *= 1.0e6;
            }
        }
        let dirty = robust_aggregate(&corrupted, &cfg, RngLabel::new(9, 0, 0)).unwrap();
        let shift = numkit::top_eigenpair(
            &(&dirty.covariance - &clean.covariance).view(), 1e-10, 20_000, RngLabel::new(5, 0, 0),
        ).value.abs();
        println!("corruption shift {name}: {shift:.4}");
    }
}
