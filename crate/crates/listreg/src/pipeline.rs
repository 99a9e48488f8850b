//! The full list-decodable regression estimator.
//!
//! One seed runs: sample expander sketches, form bucket moments, robustly
//! aggregate into `(sigma_hat, g_hat)`, ridge-solve for a candidate, then
//! up to `filter_rounds` spectral-filter rounds — aggregate the bucket
//! residual matrices, take the top eigenpair, stop if the top eigenvalue
//! is within `(1 + eta)` of the typical bucket's residual energy along
//! that direction, otherwise prune the highest-scoring fraction of
//! buckets and re-solve. Independent seeds are clustered into the final
//! candidate list.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit;
use crate::rng::RngLabel;
use crate::robust_agg::{self, AggregationConfig, AggregationMode};
use crate::sketch::{self, BucketKey};

/// All pipeline knobs. Defaults are the experiment configuration used
/// throughout the synthetic studies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Assumed inlier fraction in (0, 1]; advisory for parameter choices.
    pub alpha: f64,
    pub n_buckets: usize,
    pub repetitions: usize,
    /// Left degree of each expander graph.
    pub degree: usize,
    /// Maximum spectral-filter (prune) rounds.
    pub filter_rounds: usize,
    /// Independent pipeline seeds clustered into the list.
    pub seeds: usize,
    /// Buckets per aggregation block. The default (32) keeps late filter
    /// rounds down to one or two blocks, where the aggregate degenerates
    /// to a plain mean and the solve regains full noise cancellation.
    pub block_size: usize,
    /// Ridge added to the aggregated covariance before solving.
    pub lambda: f64,
    /// Filtering trigger slack: prune while `lambda_max > (1+eta) * TargetVar`.
    pub eta: f64,
    /// Fraction of active buckets pruned per round, in (0, 1).
    pub rho: f64,
    /// Single-linkage clustering radius for the candidate list.
    pub delta_radius: f64,
    pub aggregation_mode: AggregationMode,
    pub master_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            n_buckets: 1000,
            repetitions: 8,
            degree: 2,
            filter_rounds: 7,
            seeds: 10,
            block_size: 32,
            lambda: 1e-3,
            eta: 0.10,
            rho: 0.50,
            delta_radius: 0.0,
            aggregation_mode: AggregationMode::GeometricMedian,
            master_seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Parameter(
                "PipelineConfig: alpha must be in (0, 1]".into(),
            ));
        }
        if self.n_buckets == 0 || self.repetitions == 0 || self.degree == 0 || self.seeds == 0 {
            return Err(Error::Parameter(
                "PipelineConfig: counts must be >= 1".into(),
            ));
        }
        if self.degree > self.n_buckets {
            return Err(Error::Parameter(
                "PipelineConfig: degree exceeds n_buckets".into(),
            ));
        }
        if self.block_size == 0 {
            return Err(Error::Parameter(
                "PipelineConfig: block_size must be >= 1".into(),
            ));
        }
        if self.lambda < 0.0 {
            return Err(Error::Parameter(
                "PipelineConfig: lambda must be nonnegative".into(),
            ));
        }
        if self.eta <= 0.0 {
            return Err(Error::Parameter(
                "PipelineConfig: eta must be positive".into(),
            ));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Parameter(
                "PipelineConfig: rho must be in (0, 1)".into(),
            ));
        }
        if self.delta_radius < 0.0 {
            return Err(Error::Parameter(
                "PipelineConfig: delta_radius must be >= 0".into(),
            ));
        }
        Ok(())
    }

    fn aggregation(&self) -> AggregationConfig {
        AggregationConfig {
            block_size: self.block_size,
            mode: self.aggregation_mode,
        }
    }
}

/// One seed's output with diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Candidate {
    pub coefficients: Array1<f64>,
    pub seed_index: usize,
    /// Prune rounds actually executed.
    pub rounds_used: usize,
    /// Last top eigenvalue of the aggregated residual covariance, if the
    /// filter stage ran at all.
    pub final_top_eigenvalue: Option<f64>,
    /// Buckets still active when the candidate was produced.
    pub active_bucket_count: usize,
}

/// Clustered candidates from all seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateList {
    /// Successful candidates in seed order.
    pub candidates: Vec<Candidate>,
    /// Cluster centers: the emitted list.
    pub centers: Vec<Array1<f64>>,
    /// Cluster id of each candidate, aligned with `candidates`.
    pub members: Vec<usize>,
    /// `(seed_index, error tag)` for seeds that failed.
    pub failures: Vec<(usize, String)>,
}

/// JSON-serializable report: config echo plus the list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ListReport {
    pub config: PipelineConfig,
    pub candidates: Vec<Candidate>,
    pub centers: Vec<Array1<f64>>,
    pub members: Vec<usize>,
}

impl CandidateList {
    pub fn report(&self, config: &PipelineConfig) -> ListReport {
        ListReport {
            config: config.clone(),
            candidates: self.candidates.clone(),
            centers: self.centers.clone(),
            members: self.members.clone(),
        }
    }
}

/// Median bucket residual energy along `v`: the filter's stopping
/// benchmark. Adversarial buckets inflate only the upper tail, so the
/// median tracks the typical (inlier-dominated) bucket.
pub fn target_variance(
    residual_matrices: &[Array2<f64>],
    direction: &ArrayView1<f64>,
) -> Result<f64> {
    if residual_matrices.is_empty() {
        return Err(Error::Parameter(
            "target_variance: empty matrix list".into(),
        ));
    }
    let norm = numkit::norm(direction);
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::Parameter(format!(
            "target_variance: direction must be unit-norm (got {norm})"
        )));
    }
    let mut scores: Vec<f64> = residual_matrices
        .iter()
        .map(|m| direction.dot(&m.dot(direction)))
        .collect();
    scores.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let n = scores.len();
    Ok(if n % 2 == 1 {
        scores[n / 2]
    } else {
        0.5 * (scores[n / 2 - 1] + scores[n / 2])
    })
}

fn solve_with_escalation(
    sigma_hat: &Array2<f64>,
    g_hat: &Array1<f64>,
    lambda: f64,
    n_rows: usize,
) -> Result<Array1<f64>> {
    match numkit::ridge_solve(&sigma_hat.view(), &g_hat.view(), lambda) {
        Ok(solution) => Ok(solution),
        Err(Error::IndefiniteMoments { .. }) => {
            let escalated =
                lambda.max(numkit::frobenius_norm(&sigma_hat.view()) / (n_rows as f64).sqrt());
            numkit::ridge_solve(&sigma_hat.view(), &g_hat.view(), escalated)
        }
        Err(e) => Err(e),
    }
}

/// Run the full single-seed pipeline and return its candidate.
pub fn run_seed(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    cfg: &PipelineConfig,
    seed_index: usize,
) -> Result<Candidate> {
    cfg.validate()?;
    let n = x.nrows();
    let d = x.ncols();
    if n < d {
        return Err(Error::Parameter(format!(
            "run_seed: n = {n} below dimension {d}"
        )));
    }

    let graphs: Vec<_> = (0..cfg.repetitions)
        .map(|t| {
            crate::expander::sample_expander(
                n,
                cfg.n_buckets,
                cfg.degree,
                RngLabel::new(cfg.master_seed, seed_index as u64, t as u64),
            )
        })
        .collect::<Result<_>>()?;
    let assignment = sketch::assign_buckets(x, y, &graphs)?;
    let mut active: Vec<BucketKey> = assignment.active_buckets();

    let agg_cfg = cfg.aggregation();
    let mut estimate = Array1::<f64>::zeros(d);
    let mut rounds_used = 0usize;
    let mut final_top_eigenvalue = None;

    for round in 0..=cfg.filter_rounds {
        if active.is_empty() {
            return Err(Error::DegenerateState);
        }
        let stats: Vec<_> = active
            .iter()
            .map(|k| sketch::bucket_moments(x, y, &assignment, k.repetition, k.bucket))
            .collect::<Result<_>>()?;
        let round_label = RngLabel::new(cfg.master_seed, seed_index as u64, round as u64);
        let moments = robust_agg::robust_aggregate(&stats, &agg_cfg, round_label)?;
        estimate =
            solve_with_escalation(&moments.covariance, &moments.cross_moment, cfg.lambda, n)?;

        if round == cfg.filter_rounds {
            break;
        }

        let residual_matrices: Vec<Array2<f64>> = active
            .iter()
            .map(|k| {
                sketch::bucket_residual_matrix(
                    x,
                    y,
                    &assignment,
                    k.repetition,
                    k.bucket,
                    &estimate.view(),
                )
            })
            .collect::<Result<_>>()?;
        let (residual_cov, _blocks) =
            robust_agg::robust_aggregate_matrices(&residual_matrices, &agg_cfg, round_label)?;
        let eig = numkit::top_eigenpair(&residual_cov.view(), 1e-8, 1000, round_label);
        final_top_eigenvalue = Some(eig.value);
        let benchmark = target_variance(&residual_matrices, &eig.vector.view())?;
        if eig.value <= (1.0 + cfg.eta) * benchmark {
            break;
        }

        // Prune the top rho fraction by Rayleigh score; ties broken by key.
        let mut scored: Vec<(f64, usize)> = residual_matrices
            .iter()
            .enumerate()
            .map(|(i, m)| (eig.vector.dot(&m.dot(&eig.vector)), i))
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .expect("finite scores")
                .then_with(|| active[a.1].cmp(&active[b.1]))
        });
        let prune = ((cfg.rho * active.len() as f64).ceil() as usize).min(active.len());
        let mut keep: Vec<bool> = vec![true; active.len()];
        for &(_, idx) in scored.iter().take(prune) {
            keep[idx] = false;
        }
        active = active
            .iter()
            .zip(&keep)
            .filter_map(|(k, &keep)| keep.then_some(*k))
            .collect();
        if active.is_empty() {
            return Err(Error::DegenerateState);
        }
        rounds_used = round + 1;
    }

    Ok(Candidate {
        coefficients: estimate,
        seed_index,
        rounds_used,
        final_top_eigenvalue,
        active_bucket_count: active.len(),
    })
}

/// Run all seeds (in parallel) and cluster the candidates.
pub fn run_list(
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    cfg: &PipelineConfig,
) -> Result<CandidateList> {
    cfg.validate()?;
    let outcomes: Vec<(usize, Result<Candidate>)> = (1..=cfg.seeds)
        .into_par_iter()
        .map(|seed_index| (seed_index, run_seed(x, y, cfg, seed_index)))
        .collect();

    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    for (seed_index, outcome) in outcomes {
        match outcome {
            Ok(c) => candidates.push(c),
            Err(e) => failures.push((seed_index, e.tag().to_string())),
        }
    }
    if candidates.is_empty() {
        let first = failures.first().map(|(_, t)| t.clone()).unwrap_or_default();
        return Err(Error::AllSeedsFailed {
            attempted: cfg.seeds,
            first,
        });
    }
    let points: Vec<Array1<f64>> = candidates.iter().map(|c| c.coefficients.clone()).collect();
    let clusters = numkit::single_linkage_clusters(&points, cfg.delta_radius);
    Ok(CandidateList {
        candidates,
        centers: clusters.centers,
        members: clusters.assignments,
        failures,
    })
}

/// Pick the list center with the smallest mean squared prediction error
/// on held-out evaluation data. Harness-side selection only; the
/// estimator itself never sees the evaluation set.
pub fn select_best(
    list: &CandidateList,
    x_eval: &ArrayView2<f64>,
    y_eval: &ArrayView1<f64>,
) -> Result<Array1<f64>> {
    if list.centers.is_empty() {
        return Err(Error::Parameter("select_best: empty candidate list".into()));
    }
    let mut best: Option<(f64, usize)> = None;
    for (i, center) in list.centers.iter().enumerate() {
        let mse = crate::data::empirical_mse(&center.view(), x_eval, y_eval);
        if best.is_none_or(|(b, _)| mse < b) {
            best = Some((mse, i));
        }
    }
    Ok(list.centers[best.expect("nonempty").1].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SynthConfig};
    use approx::assert_abs_diff_eq;
    use ndarray::arr1;

    fn small_cfg() -> PipelineConfig {
        PipelineConfig {
            n_buckets: 200,
            repetitions: 4,
            seeds: 3,
            filter_rounds: 4,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.rho = 1.0;
        assert!(cfg.validate().is_err());
        cfg.rho = 0.5;
        cfg.degree = cfg.n_buckets + 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn target_variance_constant_matrices() {
        let m = Array2::<f64>::eye(3) * 2.0;
        let mats = vec![m.clone(), m.clone(), m];
        let v = arr1(&[1.0, 0.0, 0.0]);
        let tv = target_variance(&mats, &v.view()).unwrap();
        assert_abs_diff_eq!(tv, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn target_variance_median_breakdown() {
        let base = Array2::<f64>::eye(2);
        let mut mats = vec![base.clone(); 6];
        for _ in 0..5 {
            mats.push(&base * 1.0e6);
        }
        let v = arr1(&[1.0, 0.0]);
        let tv = target_variance(&mats, &v.view()).unwrap();
        assert!(
            (0.99..=1.01).contains(&tv),
            "median {tv} escaped the unscaled range"
        );
    }

    #[test]
    fn target_variance_tracks_clean_noise_level() {
        // At the true coefficients the residuals are pure noise, so the
        // median bucket score along any unit direction sits within 3x of
        // sigma^2 * v' Sigma v = sigma^2.
        use crate::expander::sample_expander;
        use crate::sketch::{assign_buckets, bucket_residual_matrix};
        let sigma = 0.1_f64;
        let data = gen_synthetic(&SynthConfig {
            n: 3000,
            d: 6,
            alpha: 1.0,
            noise_sigma: sigma,
            seed: 31,
            ..SynthConfig::default()
        })
        .unwrap();
        let truth = data.ground_truth.clone().unwrap();
        let graphs =
            vec![sample_expander(3000, 500, 2, RngLabel::new(31, 1, 0)).unwrap()];
        let asg =
            assign_buckets(&data.design.view(), &data.responses.view(), &graphs).unwrap();
        let mats: Vec<Array2<f64>> = asg
            .active_buckets()
            .iter()
            .map(|k| {
                bucket_residual_matrix(
                    &data.design.view(),
                    &data.responses.view(),
                    &asg,
                    k.repetition,
                    k.bucket,
                    &truth.view(),
                )
                .unwrap()
            })
            .collect();
        let mut v = arr1(&[1.0, 1.0, -1.0, 0.5, 0.0, -0.5]);
        v = &v / numkit::norm(&v.view());
        let tv = target_variance(&mats, &v.view()).unwrap();
        let level = sigma * sigma;
        assert!(
            tv >= level / 3.0 && tv <= level * 3.0,
            "target variance {tv} outside 3x band around {level}"
        );
    }

    #[test]
    fn target_variance_requires_unit_direction() {
        let mats = vec![Array2::<f64>::eye(2)];
        let v = arr1(&[2.0, 0.0]);
        assert!(target_variance(&mats, &v.view()).is_err());
        assert!(target_variance(&[], &arr1(&[1.0, 0.0]).view()).is_err());
    }

    #[test]
    fn noiseless_clean_data_fixed_point() {
        // sigma = 0, alpha = 1, single aggregation block, lambda = 0:
        // every bucket satisfies g = H w* exactly, so any linear block
        // combination does too and the solve returns w* up to solver
        // tolerance; all residual matrices are ~0.
        let data = gen_synthetic(&SynthConfig {
            n: 800,
            d: 6,
            alpha: 1.0,
            noise_sigma: 0.0,
            seed: 21,
            ..SynthConfig::default()
        })
        .unwrap();
        let truth = data.ground_truth.clone().unwrap();
        let cfg = PipelineConfig {
            block_size: 10_000,
            lambda: 0.0,
            ..small_cfg()
        };
        let cand = run_seed(&data.design.view(), &data.responses.view(), &cfg, 1).unwrap();
        let gap = numkit::euclidean(&cand.coefficients.view(), &truth.view());
        assert!(gap < 1e-10, "noiseless recovery off by {gap}");
        if let Some(top) = cand.final_top_eigenvalue {
            assert!(top < 1e-18, "residual energy should be ~0, got {top}");
        }
    }

    #[test]
    fn median_aggregation_noiseless_statistical_error() {
        // With coordinate-wise medians the noiseless estimator is close
        // to, but not exactly, w*: the median is not linear, so
        // g_hat != sigma_hat * w* at finite samples. The gap shrinks as
        // aggregation noise does.
        let data = gen_synthetic(&SynthConfig {
            n: 800,
            d: 6,
            alpha: 1.0,
            noise_sigma: 0.0,
            seed: 21,
            ..SynthConfig::default()
        })
        .unwrap();
        let truth = data.ground_truth.clone().unwrap();
        let cand = run_seed(&data.design.view(), &data.responses.view(), &small_cfg(), 1).unwrap();
        let gap = numkit::euclidean(&cand.coefficients.view(), &truth.view());
        assert!(
            gap < 0.5,
            "median-aggregated noiseless error unexpectedly large: {gap}"
        );
        assert!(gap > 0.0);
    }

    #[test]
    fn run_list_single_seed() {
        let data = gen_synthetic(&SynthConfig {
            n: 300,
            d: 5,
            alpha: 1.0,
            seed: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = PipelineConfig {
            seeds: 1,
            n_buckets: 100,
            repetitions: 3,
            ..PipelineConfig::default()
        };
        let list = run_list(&data.design.view(), &data.responses.view(), &cfg).unwrap();
        assert_eq!(list.candidates.len(), 1);
        assert_eq!(list.centers.len(), 1);
    }

    #[test]
    fn run_list_deterministic() {
        let data = gen_synthetic(&SynthConfig {
            n: 400,
            d: 5,
            alpha: 0.4,
            seed: 5,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = small_cfg();
        let a = run_list(&data.design.view(), &data.responses.view(), &cfg).unwrap();
        let b = run_list(&data.design.view(), &data.responses.view(), &cfg).unwrap();
        assert_eq!(a.candidates.len(), b.candidates.len());
        for (ca, cb) in a.candidates.iter().zip(&b.candidates) {
            assert_eq!(ca.coefficients, cb.coefficients);
            assert_eq!(ca.rounds_used, cb.rounds_used);
        }
        for (x, y) in a.centers.iter().zip(&b.centers) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn seed_order_does_not_change_candidates() {
        let data = gen_synthetic(&SynthConfig {
            n: 300,
            d: 4,
            alpha: 0.5,
            seed: 7,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = small_cfg();
        let forward: Vec<_> = (1..=3)
            .map(|s| run_seed(&data.design.view(), &data.responses.view(), &cfg, s).unwrap())
            .collect();
        let backward: Vec<_> = (1..=3)
            .rev()
            .map(|s| run_seed(&data.design.view(), &data.responses.view(), &cfg, s).unwrap())
            .collect();
        for c in &forward {
            let twin = backward
                .iter()
                .find(|b| b.seed_index == c.seed_index)
                .unwrap();
            assert_eq!(c.coefficients, twin.coefficients);
        }
    }

    #[test]
    fn pruning_schedule_counts() {
        // With rho = 0.5 each executed round removes ceil(half) of the
        // active buckets; rounds_used counts executed prune rounds.
        let data = gen_synthetic(&SynthConfig {
            n: 600,
            d: 5,
            alpha: 0.3,
            seed: 11,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = PipelineConfig {
            n_buckets: 150,
            repetitions: 2,
            filter_rounds: 3,
            eta: 1e-9, // force pruning every round
            ..PipelineConfig::default()
        };
        let cand = run_seed(&data.design.view(), &data.responses.view(), &cfg, 1).unwrap();
        assert_eq!(cand.rounds_used, 3);
        let mut expected = 300usize; // 150 buckets x 2 repetitions, all non-empty w.h.p.
        for _ in 0..3 {
            expected -= (expected as f64 * cfg.rho).ceil() as usize;
        }
        assert_eq!(cand.active_bucket_count, expected);
    }

    #[test]
    fn zero_filter_rounds_supported() {
        let data = gen_synthetic(&SynthConfig {
            n: 300,
            d: 4,
            alpha: 1.0,
            seed: 13,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = PipelineConfig {
            filter_rounds: 0,
            n_buckets: 100,
            repetitions: 2,
            ..PipelineConfig::default()
        };
        let cand = run_seed(&data.design.view(), &data.responses.view(), &cfg, 1).unwrap();
        assert_eq!(cand.rounds_used, 0);
        assert!(cand.final_top_eigenvalue.is_none());
    }

    #[test]
    fn identical_candidates_cluster_to_one() {
        // Deterministic noiseless data: different seeds produce (nearly)
        // identical candidates; a positive radius merges them.
        let data = gen_synthetic(&SynthConfig {
            n: 500,
            d: 4,
            alpha: 1.0,
            noise_sigma: 0.0,
            seed: 17,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = PipelineConfig {
            seeds: 4,
            n_buckets: 120,
            repetitions: 3,
            delta_radius: 0.05,
            ..PipelineConfig::default()
        };
        let list = run_list(&data.design.view(), &data.responses.view(), &cfg).unwrap();
        assert_eq!(list.centers.len(), 1, "noiseless candidates should merge");
        assert!(list.members.iter().all(|&m| m == 0));
    }

    #[test]
    fn select_best_prefers_truth() {
        let truth = arr1(&[1.0, -2.0, 0.5]);
        let test = crate::data::gen_clean_test(&truth, 500, 0.0, 23);
        let list = CandidateList {
            candidates: vec![],
            centers: vec![
                arr1(&[0.0, 0.0, 0.0]),
                truth.clone(),
                arr1(&[5.0, 5.0, 5.0]),
            ],
            members: vec![],
            failures: vec![],
        };
        let best = select_best(&list, &test.design.view(), &test.responses.view()).unwrap();
        assert_eq!(best, truth);
    }

    #[test]
    fn list_report_json_roundtrip() {
        let data = gen_synthetic(&SynthConfig {
            n: 200,
            d: 3,
            alpha: 1.0,
            seed: 29,
            ..SynthConfig::default()
        })
        .unwrap();
        let cfg = PipelineConfig {
            seeds: 2,
            n_buckets: 80,
            repetitions: 2,
            ..PipelineConfig::default()
        };
        let list = run_list(&data.design.view(), &data.responses.view(), &cfg).unwrap();
        let json = serde_json::to_string(&list.report(&cfg)).unwrap();
        let back: ListReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.candidates.len(), list.candidates.len());
        assert_eq!(back.centers.len(), list.centers.len());
        assert_eq!(back.config.n_buckets, cfg.n_buckets);
    }
}
