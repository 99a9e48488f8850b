//! Run the multi-seed pipeline, cluster the candidates, and print the
//! JSON report (config echo, per-candidate diagnostics, cluster centers).
//!
//!     cargo run --release --example candidate_list

use listreg::data::{gen_synthetic, SynthConfig};
use listreg::numkit;
use listreg::pipeline::{run_list, PipelineConfig};

fn main() {
    let synth = SynthConfig {
        n: 2000,
        d: 10,
        alpha: 0.35,
        seed: 4,
        ..SynthConfig::default()
    };
    let data = gen_synthetic(&synth).unwrap();
    let truth = data.ground_truth.clone().unwrap();

    // A small positive clustering radius merges near-duplicate seeds.
    let cfg = PipelineConfig {
        n_buckets: 400,
        delta_radius: 0.25,
        master_seed: synth.seed,
        ..PipelineConfig::default()
    };
    let list = run_list(&data.design.view(), &data.responses.view(), &cfg).unwrap();

    println!(
        "{} candidates clustered into {} centers (radius {})",
        list.candidates.len(),
        list.centers.len(),
        cfg.delta_radius
    );
    for c in &list.candidates {
        let diff = &c.coefficients - &truth;
        println!(
            "  seed {:>2}: cluster {}, rounds used {}, active buckets {:>4}, distance to truth {:.3}",
            c.seed_index,
            list.members[list.candidates.iter().position(|x| x.seed_index == c.seed_index).unwrap()],
            c.rounds_used,
            c.active_bucket_count,
            numkit::norm(&diff.view())
        );
    }

    let report = list.report(&cfg);
    println!(
        "\nJSON report:\n{}",
        serde_json::to_string_pretty(&report).unwrap()
    );
}
