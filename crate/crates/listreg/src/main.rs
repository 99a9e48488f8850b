//! Thin command-line front end for the experiment harness.
//!
//! All logic lives in the library; this binary parses flags, builds an
//! `ExperimentSpec` (or a single pipeline run), and prints a summary.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use listreg::data::{self, ColumnSchema, SynthConfig};
use listreg::expander;
use listreg::experiment::{self, ExperimentKind, ExperimentSpec, Method, MixtureSpec, TimingMode};
use listreg::pipeline::{self, PipelineConfig};
use listreg::rng::RngLabel;

#[derive(Parser)]
#[command(name = "listreg", version, about = "List-decodable regression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PipelineFlags {
    /// Buckets per repetition.
    #[arg(long, default_value_t = 1000)]
    buckets: usize,
    /// Independent sketch repetitions.
    #[arg(long, default_value_t = 8)]
    repetitions: usize,
    /// Expander left degree.
    #[arg(long, default_value_t = 2)]
    degree: usize,
    /// Maximum spectral-filter rounds.
    #[arg(long, default_value_t = 7)]
    filter_rounds: usize,
    /// Pipeline seeds clustered into the list.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    /// Buckets per aggregation block.
    #[arg(long, default_value_t = 32)]
    block_size: usize,
    /// Ridge added before each solve.
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,
    /// Filter trigger slack.
    #[arg(long, default_value_t = 0.10)]
    eta: f64,
    /// Fraction of buckets pruned per round.
    #[arg(long, default_value_t = 0.50)]
    rho: f64,
    /// Candidate clustering radius.
    #[arg(long, default_value_t = 0.0)]
    delta_radius: f64,
    /// Aggregation mode: mom | geometric.
    #[arg(long, default_value = "geometric")]
    aggregation: String,
}

impl PipelineFlags {
    fn to_config(&self, alpha: f64, master_seed: u64) -> Result<PipelineConfig, listreg::Error> {
        let cfg = PipelineConfig {
            alpha,
            n_buckets: self.buckets,
            repetitions: self.repetitions,
            degree: self.degree,
            filter_rounds: self.filter_rounds,
            seeds: self.seeds,
            block_size: self.block_size,
            lambda: self.lambda,
            eta: self.eta,
            rho: self.rho,
            delta_radius: self.delta_radius,
            aggregation_mode: self.aggregation.parse()?,
            master_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Clone)]
struct SynthFlags {
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    d: usize,
    /// Inlier fraction.
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    /// Inlier noise standard deviation.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Outlier response scale.
    #[arg(long, default_value_t = 10.0)]
    scale: f64,
}

impl SynthFlags {
    fn to_config(&self, seed: u64) -> SynthConfig {
        SynthConfig {
            n: self.n,
            d: self.d,
            alpha: self.alpha,
            noise_sigma: self.sigma,
            outlier_scale: self.scale,
            seed,
        }
    }
}

#[derive(Args, Clone)]
struct SweepFlags {
    /// Replications per grid point (seeds master, master+1, ...).
    #[arg(long, default_value_t = 5)]
    replications: u64,
    /// Master seed: data and pipeline randomness derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Methods to run, comma separated.
    #[arg(long, default_value = "ols,ridge,huber,ransac,expander_1,expander_l")]
    methods: String,
    /// Clean test rows per cell.
    #[arg(long, default_value_t = 2000)]
    n_test: usize,
    /// Ridge-baseline lambda.
    #[arg(long, default_value_t = 1.0)]
    ridge_lambda: f64,
    /// Result CSV path (aggregates go to the *_agg sibling).
    #[arg(long)]
    out: PathBuf,
    /// Record measured wall times (breaks byte-reproducibility).
    #[arg(long, default_value_t = false)]
    timings: bool,
    /// Load the whole experiment from a spec file instead of flags.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic contaminated dataset snapshot.
    Synth {
        #[command(flatten)]
        synth: SynthFlags,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Snapshot CSV path; the ground truth goes to <out>.truth.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one method on a dataset snapshot.
    Fit {
        /// Dataset snapshot (from `synth` or the documented format).
        #[arg(long)]
        data: PathBuf,
        /// Ground-truth JSON (enables parameter-error reporting).
        #[arg(long)]
        truth: Option<PathBuf>,
        /// ols | ridge | huber | ransac | expander_1 | expander_l.
        #[arg(long, default_value = "expander_l")]
        method: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Candidate-list JSON output (expander methods).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineFlags,
    },
    /// Sweep the inlier fraction alpha.
    SweepAlpha {
        #[arg(long, default_value = "0.4,0.3,0.2,0.1")]
        grid: String,
        #[command(flatten)]
        synth: SynthFlags,
        #[command(flatten)]
        pipeline: PipelineFlags,
        #[command(flatten)]
        sweep: SweepFlags,
    },
    /// Sweep the outlier response scale.
    SweepScale {
        #[arg(long, default_value = "5,10,20,30")]
        grid: String,
        #[command(flatten)]
        synth: SynthFlags,
        #[command(flatten)]
        pipeline: PipelineFlags,
        #[command(flatten)]
        sweep: SweepFlags,
    },
    /// Sweep the dimension d.
    SweepDim {
        #[arg(long, default_value = "20,50")]
        grid: String,
        #[command(flatten)]
        synth: SynthFlags,
        #[command(flatten)]
        pipeline: PipelineFlags,
        #[command(flatten)]
        sweep: SweepFlags,
    },
    /// Ablate one pipeline field over a grid.
    Ablate {
        /// Pipeline field: seeds | filter_rounds | n_buckets | repetitions |
        /// degree | lambda | eta | rho | block_size | delta_radius.
        #[arg(long)]
        field: String,
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        synth: SynthFlags,
        #[command(flatten)]
        pipeline: PipelineFlags,
        #[command(flatten)]
        sweep: SweepFlags,
    },
    /// Real-data mixture stress test from two CSV tables.
    RealMix {
        /// Inlier table (CSV with header).
        #[arg(long)]
        inliers: PathBuf,
        /// Outlier table (CSV with header).
        #[arg(long)]
        outliers: PathBuf,
        /// Response column of the inlier table.
        #[arg(long, default_value_t = 0)]
        inlier_response: usize,
        /// Response column of the outlier table (default: last).
        #[arg(long)]
        outlier_response: Option<usize>,
        #[arg(long, default_value_t = 1400)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        alpha: f64,
        #[arg(long, default_value_t = 10)]
        pca_dim: usize,
        #[arg(long, default_value_t = 1000)]
        mix_n_test: usize,
        #[command(flatten)]
        pipeline: PipelineFlags,
        #[command(flatten)]
        sweep: SweepFlags,
    },
    /// Sample an expander graph and report its empirical diagnostics.
    AuditExpander {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        buckets: usize,
        #[arg(long, default_value_t = 4)]
        degree: usize,
        #[arg(long, default_value_t = 50)]
        max_set: usize,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        /// Also run a contamination census at this inlier fraction.
        #[arg(long)]
        alpha: Option<f64>,
        /// Outlier cap for the census.
        #[arg(long, default_value_t = 3)]
        cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_grid(grid: &str) -> Result<Vec<f64>, listreg::Error> {
    grid.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| listreg::Error::Parameter(format!("bad grid value '{s}'")))
        })
        .collect()
}

fn build_spec(
    kind: ExperimentKind,
    grid: &str,
    synth: &SynthFlags,
    pipeline: &PipelineFlags,
    sweep: &SweepFlags,
) -> Result<ExperimentSpec, listreg::Error> {
    if let Some(path) = &sweep.spec {
        let spec = experiment::parse_spec_file(path)?;
        if spec.kind != kind {
            return Err(listreg::Error::Parameter(format!(
                "spec file kind '{}' does not match subcommand",
                spec.kind.as_str()
            )));
        }
        return Ok(spec);
    }
    let mut spec = ExperimentSpec::new(kind, parse_grid(grid)?);
    spec.synth = synth.to_config(0);
    spec.pipeline = pipeline.to_config(synth.alpha, sweep.seed)?;
    spec.replication_seeds = (sweep.seed..sweep.seed + sweep.replications).collect();
    spec.methods = sweep
        .methods
        .split(',')
        .map(|s| Method::from_str(s.trim()))
        .collect::<Result<_, _>>()?;
    spec.n_test = sweep.n_test;
    spec.ridge_lambda = sweep.ridge_lambda;
    spec.out_path = Some(sweep.out.clone());
    spec.timing = if sweep.timings {
        TimingMode::Measured
    } else {
        TimingMode::Zeroed
    };
    Ok(spec)
}

fn run_spec(spec: &ExperimentSpec) -> Result<bool, listreg::Error> {
    let table = experiment::run_experiment(spec)?;
    if let Some(path) = &spec.out_path {
        eprintln!(
            "wrote {} rows to {} (aggregates: {})",
            table.rows.len(),
            path.display(),
            experiment::aggregate_path(path).display()
        );
    }
    for agg in &table.aggregate {
        println!(
            "{} {}={} {}: mean_test_mse={} mean_param_error={} ({} ok)",
            agg.experiment,
            agg.grid_param,
            agg.grid_value,
            agg.method,
            agg.mean_test_mse
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into()),
            agg.mean_param_error
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into()),
            agg.n_ok,
        );
    }
    Ok(table.all_ok)
}

fn cmd_synth(synth: &SynthFlags, seed: u64, out: &Path) -> Result<bool, listreg::Error> {
    let cfg = synth.to_config(seed);
    let dataset = data::gen_synthetic(&cfg)?;
    data::save_dataset(&dataset, out)?;
    if let Some(truth) = &dataset.ground_truth {
        let truth_path = out.with_extension("truth.json");
        std::fs::write(&truth_path, serde_json::to_string_pretty(&truth.to_vec())?)?;
        eprintln!("wrote {} and {}", out.display(), truth_path.display());
    }
    Ok(true)
}

fn cmd_fit(
    data_path: &Path,
    truth: Option<&PathBuf>,
    method: &str,
    seed: u64,
    out: Option<&PathBuf>,
    pipeline_flags: &PipelineFlags,
) -> Result<bool, listreg::Error> {
    let dataset = data::load_dataset(data_path)?;
    let x = dataset.design.view();
    let y = dataset.responses.view();
    let method: Method = method.parse()?;
    let cfg = pipeline_flags.to_config(0.3, seed)?;

    let w = match method {
        Method::Ols => listreg::baselines::ols_fit(&x, &y)?.coefficients,
        Method::Ridge => listreg::baselines::ridge_fit(&x, &y, 1.0)?.coefficients,
        Method::Huber => listreg::baselines::huber_fit(&x, &y, None, 100, 1e-8)?.coefficients,
        Method::Ransac => {
            listreg::baselines::ransac_fit(&x, &y, x.ncols(), None, 100, seed)?.coefficients
        }
        Method::OracleOls => {
            return Err(listreg::Error::Parameter(
                "oracle_ols is only meaningful inside real-mix runs".into(),
            ))
        }
        Method::ExpanderSingle | Method::ExpanderList => {
            let list = pipeline::run_list(&x, &y, &cfg)?;
            if let Some(path) = out {
                std::fs::write(path, serde_json::to_string_pretty(&list.report(&cfg))?)?;
                eprintln!("wrote candidate list to {}", path.display());
            }
            match method {
                Method::ExpanderSingle => list
                    .candidates
                    .iter()
                    .find(|c| c.seed_index == 1)
                    .map(|c| c.coefficients.clone())
                    .ok_or_else(|| listreg::Error::Parameter("seed 1 failed".into()))?,
                _ => {
                    // Without held-out data, report the largest cluster's center.
                    let mut counts = vec![0usize; list.centers.len()];
                    for &m in &list.members {
                        counts[m] += 1;
                    }
                    let best = counts
                        .iter()
                        .enumerate()
                        .max_by_key(|(_, &c)| c)
                        .map(|(i, _)| i)
                        .unwrap_or(0);
                    list.centers[best].clone()
                }
            }
        }
    };

    println!("method={} coefficients={:?}", method.as_str(), w.to_vec());
    if let Some(truth_path) = truth {
        let truth_vec: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(truth_path)?)?;
        let truth_arr = ndarray::Array1::from_vec(truth_vec);
        let diff = &w - &truth_arr;
        println!("param_error={}", listreg::numkit::norm(&diff.view()));
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_audit(
    n: usize,
    buckets: usize,
    degree: usize,
    max_set: usize,
    trials: usize,
    alpha: Option<f64>,
    cap: usize,
    seed: u64,
) -> Result<bool, listreg::Error> {
    let graph = expander::sample_expander(n, buckets, degree, RngLabel::new(seed, 0, 0))?;
    let eps = expander::audit_expansion(&graph, max_set, trials, RngLabel::new(seed, 1, 0))?;
    println!(
        "n={n} buckets={buckets} degree={degree} edges={}",
        graph.edge_count()
    );
    println!("empirical_epsilon={eps:.4} (max over {trials} subsets of size <= {max_set})");
    let all: Vec<usize> = (0..n).collect();
    let diag = expander::subset_diagnostics(&graph, &all)?;
    let mean_load = diag.bucket_loads.iter().map(|&l| l as f64).sum::<f64>() / buckets as f64;
    println!(
        "full-set: neighbors={} unique_buckets={} collision_excess={} mean_load={mean_load:.2}",
        diag.neighbor_count,
        diag.unique_neighbor_buckets.len(),
        diag.collision_excess
    );
    if let Some(alpha) = alpha {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut RngLabel::new(seed, 2, 0).rng(listreg::rng::domain::AUDIT));
        let n_in = ((alpha * n as f64).floor() as usize).max(1);
        let census =
            expander::light_contamination_census(&graph, &order[..n_in], &order[n_in..], cap)?;
        println!(
            "census alpha={alpha}: unique_buckets={} fraction_good={:.3} mean_outliers={:.3} inliers_with_good_bucket={:.3}",
            census.unique_bucket_count,
            census.fraction_good,
            census.mean_outlier_count,
            census.fraction_inliers_with_good_bucket
        );
    }
    Ok(true)
}

fn dispatch(cli: Cli) -> Result<bool, listreg::Error> {
    match cli.command {
        Command::Synth { synth, seed, out } => cmd_synth(&synth, seed, &out),
        Command::Fit {
            data,
            truth,
            method,
            seed,
            out,
            pipeline,
        } => cmd_fit(
            &data,
            truth.as_ref(),
            &method,
            seed,
            out.as_ref(),
            &pipeline,
        ),
        Command::SweepAlpha {
            grid,
            synth,
            pipeline,
            sweep,
        } => {
            let spec = build_spec(ExperimentKind::AlphaSweep, &grid, &synth, &pipeline, &sweep)?;
            run_spec(&spec)
        }
        Command::SweepScale {
            grid,
            synth,
            pipeline,
            sweep,
        } => {
            let spec = build_spec(ExperimentKind::ScaleSweep, &grid, &synth, &pipeline, &sweep)?;
            run_spec(&spec)
        }
        Command::SweepDim {
            grid,
            synth,
            pipeline,
            sweep,
        } => {
            let spec = build_spec(ExperimentKind::DimSweep, &grid, &synth, &pipeline, &sweep)?;
            run_spec(&spec)
        }
        Command::Ablate {
            field,
            grid,
            synth,
            pipeline,
            sweep,
        } => {
            let mut spec = build_spec(ExperimentKind::Ablation, &grid, &synth, &pipeline, &sweep)?;
            if spec.ablate_field.is_none() {
                spec.ablate_field = Some(field);
            }
            spec.methods = vec![Method::ExpanderList];
            let table = experiment::run_ablation(&spec)?;
            if let Some(path) = &spec.out_path {
                eprintln!("wrote {} rows to {}", table.rows.len(), path.display());
            }
            for agg in &table.aggregate {
                println!(
                    "{} {}={} {}: mean_test_mse={} ({} ok)",
                    agg.experiment,
                    agg.grid_param,
                    agg.grid_value,
                    agg.method,
                    agg.mean_test_mse
                        .map(|v| format!("{v:.4}"))
                        .unwrap_or_else(|| "-".into()),
                    agg.n_ok,
                );
            }
            Ok(table.all_ok)
        }
        Command::RealMix {
            inliers,
            outliers,
            inlier_response,
            outlier_response,
            n,
            alpha,
            pca_dim,
            mix_n_test,
            pipeline,
            sweep,
        } => {
            // Default outlier response: last column of the outlier table.
            let out_resp = match outlier_response {
                Some(c) => c,
                None => {
                    let probe = data::load_table(
                        &outliers,
                        &ColumnSchema {
                            response: 0,
                            features: None,
                        },
                    )?;
                    probe.features.ncols() // response 0 leaves k features => k is the last index
                }
            };
            let mut spec = build_spec(
                ExperimentKind::RealMixture,
                "0",
                &SynthFlags {
                    n,
                    d: pca_dim,
                    alpha,
                    sigma: 0.0,
                    scale: 0.0,
                },
                &pipeline,
                &sweep,
            )?;
            spec.grid = vec![alpha];
            spec.methods = vec![
                Method::OracleOls,
                Method::Ols,
                Method::Ridge,
                Method::Huber,
                Method::Ransac,
                Method::ExpanderSingle,
                Method::ExpanderList,
            ];
            spec.mixture = Some(MixtureSpec {
                inlier_path: inliers,
                outlier_path: outliers,
                inlier_response,
                outlier_response: out_resp,
                n,
                pca_dim,
                n_test: mix_n_test,
            });
            run_spec(&spec)
        }
        Command::AuditExpander {
            n,
            buckets,
            degree,
            max_set,
            trials,
            alpha,
            cap,
            seed,
        } => cmd_audit(n, buckets, degree, max_set, trials, alpha, cap, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some cells failed; see the status column");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
