//! Robust linear regression when inliers are a minority.
//!
//! `listreg` implements list-decodable linear regression by expander
//! sketching: every sample is hashed into a handful of buckets by random
//! signed left-regular bipartite graphs, bucket-level normal-equation
//! statistics are aggregated with median-of-means (or the geometric
//! median), adversarial buckets are pruned by spectral filtering, and the
//! candidates from independent sketch seeds are clustered into a short
//! list that contains a near-optimal regressor.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`expander`] — random signed bipartite graphs and their combinatorial
//!   diagnostics (unique neighbors, collisions, loads, empirical expansion).
//! - [`sketch`] — bucket assignment and per-bucket second moments and
//!   residual matrices, in input-sparsity time.
//! - [`robust_agg`] — block partitioning, coordinate-wise median-of-means,
//!   and Weiszfeld geometric median.
//! - [`numkit`] — small dense symmetric linear algebra: ridge solve, power
//!   iteration, PCA, single-linkage clustering.
//! - [`pipeline`] — the full estimator: per-seed sketch → aggregate →
//!   solve → filter loop, then multi-seed list generation.
//! - [`data`] — synthetic contaminated datasets, tabular ingestion, the
//!   real-data mixture builder, and evaluation metrics.
//! - [`baselines`] — OLS, ridge, Huber (IRLS), and RANSAC trained on the
//!   same contaminated data for comparison.
//! - [`experiment`] — a configuration-driven harness that reproduces the
//!   sweeps and ablations and emits machine-readable CSV tables.
//!
//! # Quick start
//!
//! ```
//! use listreg::data::{gen_synthetic, gen_clean_test, evaluate, SynthConfig};
//! use listreg::pipeline::{run_list, select_best, PipelineConfig};
//!
//! let data = gen_synthetic(&SynthConfig { n: 2000, d: 8, alpha: 0.3, ..SynthConfig::default() }).unwrap();
//! let truth = data.ground_truth.clone().unwrap();
//! let test = gen_clean_test(&truth, 500, 0.1, 99);
//!
//! let cfg = PipelineConfig { n_buckets: 400, seeds: 4, ..PipelineConfig::default() };
//! let list = run_list(&data.design.view(), &data.responses.view(), &cfg).unwrap();
//! let best = select_best(&list, &test.design.view(), &test.responses.view()).unwrap();
//! let metrics = evaluate(&best.view(), &test).unwrap();
//! assert!(metrics.test_mse.is_finite());
//! ```
//!
//! # Runnable examples
//!
//! Each major capability has a runnable example under `examples/`:
//!
//! ```text
//! cargo run --release --example expander_audit        # graph diagnostics + empirical expansion
//! cargo run --release --example synthetic_contamination
//! cargo run --release --example robust_aggregation    # MoM vs geometric median under corruption
//! cargo run --release --example spectral_filtering    # filter rounds on one contaminated instance
//! cargo run --release --example single_run            # full pipeline vs baselines
//! cargo run --release --example candidate_list        # list generation + JSON report
//! cargo run --release --example alpha_sweep           # miniature sweep written to CSV
//! cargo run --release --example runtime_scaling       # sketching cost vs n
//! cargo run --release --example real_mixture -- inliers.csv outliers.csv
//! ```
//!
//! A thin `listreg` binary exposes the same harness as subcommands
//! (`synth`, `fit`, `sweep-alpha`, `sweep-scale`, `sweep-dim`, `ablate`,
//! `real-mix`, `audit-expander`); see the README.

pub mod baselines;
pub mod data;
pub mod error;
pub mod expander;
pub mod experiment;
pub mod numkit;
pub mod pipeline;
pub mod rng;
pub mod robust_agg;
pub mod sketch;

pub use error::{Error, Result};
