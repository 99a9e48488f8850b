//! Configuration-driven experiment harness.
//!
//! An [`ExperimentSpec`] names a sweep kind, a grid, replication seeds,
//! methods, and base configurations; [`run_experiment`] executes every
//! (grid value, seed, method) cell on an independently generated instance,
//! evaluates on a clean test set, and emits a per-cell row table plus a
//! mean/std aggregate table. Cells fail individually (tagged in the
//! status column) without aborting the run.
//!
//! Result files are byte-deterministic for a fixed spec: the wall-time
//! column is written as 0 unless timings are explicitly requested, since
//! measured times never reproduce bit-for-bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array1, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::data::{self, ColumnSchema, Dataset, SynthConfig};
use crate::error::{Error, Result};
use crate::pipeline::{self, PipelineConfig};

/// Which sweep or run an [`ExperimentSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    AlphaSweep,
    ScaleSweep,
    DimSweep,
    Ablation,
    RealMixture,
    SingleRun,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::AlphaSweep => "alpha_sweep",
            ExperimentKind::ScaleSweep => "scale_sweep",
            ExperimentKind::DimSweep => "dim_sweep",
            ExperimentKind::Ablation => "ablation",
            ExperimentKind::RealMixture => "real_mixture",
            ExperimentKind::SingleRun => "single_run",
        }
    }

    /// Name of the grid parameter in result rows.
    pub fn grid_param(&self, ablate_field: Option<&str>) -> String {
        match self {
            ExperimentKind::AlphaSweep => "alpha".into(),
            ExperimentKind::ScaleSweep => "outlier_scale".into(),
            ExperimentKind::DimSweep => "d".into(),
            ExperimentKind::Ablation => ablate_field.unwrap_or("?").into(),
            ExperimentKind::RealMixture => "alpha".into(),
            ExperimentKind::SingleRun => "alpha".into(),
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha_sweep" => Ok(ExperimentKind::AlphaSweep),
            "scale_sweep" => Ok(ExperimentKind::ScaleSweep),
            "dim_sweep" => Ok(ExperimentKind::DimSweep),
            "ablation" => Ok(ExperimentKind::Ablation),
            "real_mixture" => Ok(ExperimentKind::RealMixture),
            "single_run" => Ok(ExperimentKind::SingleRun),
            other => Err(Error::Parameter(format!(
                "unknown experiment kind '{other}'"
            ))),
        }
    }
}

/// Estimators the harness can run in a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ols,
    Ridge,
    Huber,
    Ransac,
    /// First-seed candidate of the expander pipeline.
    ExpanderSingle,
    /// Best list center on the clean evaluation set.
    ExpanderList,
    /// OLS on the clean inlier pool (real-mixture runs only).
    OracleOls,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::Ridge => "ridge",
            Method::Huber => "huber",
            Method::Ransac => "ransac",
            Method::ExpanderSingle => "expander_1",
            Method::ExpanderList => "expander_l",
            Method::OracleOls => "oracle_ols",
        }
    }

    pub fn all_synthetic() -> Vec<Method> {
        vec![
            Method::Ols,
            Method::Ridge,
            Method::Huber,
            Method::Ransac,
            Method::ExpanderSingle,
            Method::ExpanderList,
        ]
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols" => Ok(Method::Ols),
            "ridge" => Ok(Method::Ridge),
            "huber" => Ok(Method::Huber),
            "ransac" => Ok(Method::Ransac),
            "expander_1" => Ok(Method::ExpanderSingle),
            "expander_l" => Ok(Method::ExpanderList),
            "oracle_ols" => Ok(Method::OracleOls),
            other => Err(Error::Parameter(format!("unknown method '{other}'"))),
        }
    }
}

/// Whether result rows carry measured wall times (non-reproducible) or
/// deterministic zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimingMode {
    Zeroed,
    Measured,
}

/// Real-mixture construction parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub inlier_path: PathBuf,
    pub outlier_path: PathBuf,
    /// Response column of the inlier table.
    pub inlier_response: usize,
    /// Response column of the outlier table.
    pub outlier_response: usize,
    pub n: usize,
    pub pca_dim: usize,
    pub n_test: usize,
}

/// Everything one harness run needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub grid: Vec<f64>,
    /// Pipeline field swept by an ablation.
    pub ablate_field: Option<String>,
    pub replication_seeds: Vec<u64>,
    pub methods: Vec<Method>,
    /// Base synthetic-data configuration; the grid overrides one field.
    pub synth: SynthConfig,
    pub pipeline: PipelineConfig,
    pub n_test: usize,
    pub ridge_lambda: f64,
    pub out_path: Option<PathBuf>,
    pub timing: TimingMode,
    pub mixture: Option<MixtureSpec>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, grid: Vec<f64>) -> Self {
        Self {
            kind,
            grid,
            ablate_field: None,
            replication_seeds: (0..5).collect(),
            methods: Method::all_synthetic(),
            synth: SynthConfig::default(),
            pipeline: PipelineConfig::default(),
            n_test: 2000,
            ridge_lambda: 1.0,
            out_path: None,
            timing: TimingMode::Zeroed,
            mixture: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Parameter("ExperimentSpec: empty grid".into()));
        }
        if self.replication_seeds.is_empty() {
            return Err(Error::Parameter(
                "ExperimentSpec: need at least one seed".into(),
            ));
        }
        if self.kind == ExperimentKind::Ablation && self.ablate_field.is_none() {
            return Err(Error::Parameter(
                "ExperimentSpec: ablation needs a field".into(),
            ));
        }
        if self.kind == ExperimentKind::RealMixture && self.mixture.is_none() {
            return Err(Error::Parameter(
                "ExperimentSpec: real_mixture needs data paths".into(),
            ));
        }
        Ok(())
    }
}

/// One (grid value, seed, method) result.
#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub experiment: String,
    pub grid_param: String,
    pub grid_value: f64,
    pub seed: u64,
    pub method: &'static str,
    pub test_mse: Option<f64>,
    pub param_error: Option<f64>,
    pub wall_ms: u64,
    pub status: String,
}

/// Mean/std aggregate over the successful rows of one (grid value, method).
#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub experiment: String,
    pub grid_param: String,
    pub grid_value: f64,
    pub method: &'static str,
    pub n_ok: usize,
    pub mean_test_mse: Option<f64>,
    pub std_test_mse: Option<f64>,
    pub mean_param_error: Option<f64>,
    pub std_param_error: Option<f64>,
}

/// Full harness output.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub rows: Vec<CellResult>,
    pub aggregate: Vec<AggregateRow>,
    pub all_ok: bool,
}

impl ResultTable {
    /// Mean test MSE over successful rows of one (grid value, method).
    pub fn mean_test_mse(&self, grid_value: f64, method: Method) -> Option<f64> {
        self.aggregate
            .iter()
            .find(|a| a.grid_value == grid_value && a.method == method.as_str())
            .and_then(|a| a.mean_test_mse)
    }

    /// Mean parameter error over successful rows of one (grid value, method).
    pub fn mean_param_error(&self, grid_value: f64, method: Method) -> Option<f64> {
        self.aggregate
            .iter()
            .find(|a| a.grid_value == grid_value && a.method == method.as_str())
            .and_then(|a| a.mean_param_error)
    }
}

/// Set one pipeline field by name (ablation support).
pub fn apply_pipeline_override(cfg: &mut PipelineConfig, field: &str, value: f64) -> Result<()> {
    let as_count = |v: f64| -> Result<usize> {
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::Parameter(format!(
                "field '{field}' needs a nonnegative integer"
            )));
        }
        Ok(v as usize)
    };
    match field {
        "n_buckets" => cfg.n_buckets = as_count(value)?,
        "repetitions" => cfg.repetitions = as_count(value)?,
        "degree" => cfg.degree = as_count(value)?,
        "filter_rounds" => cfg.filter_rounds = as_count(value)?,
        "seeds" => cfg.seeds = as_count(value)?,
        "block_size" => cfg.block_size = as_count(value)?,
        "lambda" => cfg.lambda = value,
        "eta" => cfg.eta = value,
        "rho" => cfg.rho = value,
        "delta_radius" => cfg.delta_radius = value,
        "alpha" => cfg.alpha = value,
        other => {
            return Err(Error::Parameter(format!(
                "unknown pipeline field '{other}'"
            )));
        }
    }
    cfg.validate()
}

struct CellData {
    train: Dataset,
    test: Dataset,
    oracle: Option<Dataset>,
}

fn synth_cell_data(spec: &ExperimentSpec, grid_value: f64, seed: u64) -> Result<CellData> {
    let mut synth = SynthConfig { seed, ..spec.synth };
    match spec.kind {
        ExperimentKind::AlphaSweep => synth.alpha = grid_value,
        ExperimentKind::ScaleSweep => synth.outlier_scale = grid_value,
        ExperimentKind::DimSweep => {
            if grid_value < 1.0 || grid_value.fract() != 0.0 {
                return Err(Error::Parameter(
                    "dim_sweep grid values must be positive integers".into(),
                ));
            }
            synth.d = grid_value as usize;
        }
        ExperimentKind::SingleRun | ExperimentKind::Ablation => {}
        ExperimentKind::RealMixture => unreachable!("handled separately"),
    }
    let train = data::gen_synthetic(&synth)?;
    let truth = train
        .ground_truth
        .clone()
        .expect("synthetic data carries truth");
    let test = data::gen_clean_test(&truth, spec.n_test, synth.noise_sigma, seed);
    Ok(CellData {
        train,
        test,
        oracle: None,
    })
}

fn mixture_cell_data(spec: &ExperimentSpec, grid_value: f64, seed: u64) -> Result<CellData> {
    let mix = spec.mixture.as_ref().expect("validated");
    let inliers = data::load_table(
        &mix.inlier_path,
        &ColumnSchema {
            response: mix.inlier_response,
            features: None,
        },
    )?;
    let outliers = data::load_table(
        &mix.outlier_path,
        &ColumnSchema {
            response: mix.outlier_response,
            features: None,
        },
    )?;
    let built = data::build_real_mixture(
        &inliers,
        &outliers,
        mix.n,
        grid_value,
        mix.pca_dim,
        mix.n_test,
        seed,
    )?;
    Ok(CellData {
        train: built.train,
        test: built.test,
        oracle: Some(built.oracle_train),
    })
}

fn evaluate_estimate(w: &ArrayView1<f64>, test: &Dataset) -> (Option<f64>, Option<f64>) {
    if test.ground_truth.is_some() {
        match data::evaluate(w, test) {
            Ok(m) => (Some(m.test_mse), Some(m.param_error)),
            Err(_) => (None, None),
        }
    } else {
        let mse = data::empirical_mse(w, &test.design.view(), &test.responses.view());
        (Some(mse), None)
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_method(
    method: Method,
    x: &ArrayView2<f64>,
    y: &ArrayView1<f64>,
    cell: &CellData,
    pipeline_cfg: &PipelineConfig,
    ridge_lambda: f64,
    seed: u64,
    expander: &mut Option<Result<pipeline::CandidateList>>,
) -> Result<Array1<f64>> {
    match method {
        Method::Ols => Ok(baselines::ols_fit(x, y)?.coefficients),
        Method::Ridge => Ok(baselines::ridge_fit(x, y, ridge_lambda)?.coefficients),
        Method::Huber => Ok(baselines::huber_fit(x, y, None, 100, 1e-8)?.coefficients),
        Method::Ransac => Ok(baselines::ransac_fit(x, y, x.ncols(), None, 100, seed)?.coefficients),
        Method::OracleOls => {
            let oracle = cell
                .oracle
                .as_ref()
                .ok_or_else(|| Error::Parameter("oracle_ols needs a clean pool".into()))?;
            Ok(baselines::ols_fit(&oracle.design.view(), &oracle.responses.view())?.coefficients)
        }
        Method::ExpanderSingle | Method::ExpanderList => {
            if expander.is_none() {
                *expander = Some(pipeline::run_list(x, y, pipeline_cfg));
            }
            let list = match expander.as_ref().expect("just set") {
                Ok(list) => list,
                Err(e) => return Err(Error::Parameter(format!("pipeline failed: {e}"))),
            };
            match method {
                Method::ExpanderSingle => list
                    .candidates
                    .iter()
                    .find(|c| c.seed_index == 1)
                    .map(|c| c.coefficients.clone())
                    .ok_or_else(|| Error::Parameter("seed 1 failed".into())),
                _ => pipeline::select_best(
                    list,
                    &cell.test.design.view(),
                    &cell.test.responses.view(),
                ),
            }
        }
    }
}

fn run_cell(spec: &ExperimentSpec, grid_value: f64, seed: u64) -> Vec<CellResult> {
    let grid_param = spec.kind.grid_param(spec.ablate_field.as_deref());
    let mk_row = |method: Method, test_mse, param_error, wall_ms, status: String| CellResult {
        experiment: spec.kind.as_str().to_string(),
        grid_param: grid_param.clone(),
        grid_value,
        seed,
        method: method.as_str(),
        test_mse,
        param_error,
        wall_ms,
        status,
    };

    let mut pipeline_cfg = PipelineConfig {
        master_seed: seed,
        ..spec.pipeline.clone()
    };
    if spec.kind == ExperimentKind::Ablation {
        let field = spec.ablate_field.as_deref().expect("validated");
        if let Err(e) = apply_pipeline_override(&mut pipeline_cfg, field, grid_value) {
            return spec
                .methods
                .iter()
                .map(|&m| mk_row(m, None, None, 0, format!("error:{}", e.tag())))
                .collect();
        }
    }
    match spec.kind {
        ExperimentKind::AlphaSweep => pipeline_cfg.alpha = grid_value,
        ExperimentKind::SingleRun | ExperimentKind::RealMixture => {
            pipeline_cfg.alpha = spec.synth.alpha;
        }
        _ => {}
    }

    let cell = match spec.kind {
        ExperimentKind::RealMixture => mixture_cell_data(spec, grid_value, seed),
        _ => synth_cell_data(spec, grid_value, seed),
    };
    let cell = match cell {
        Ok(c) => c,
        Err(e) => {
            return spec
                .methods
                .iter()
                .map(|&m| mk_row(m, None, None, 0, format!("error:{}", e.tag())))
                .collect();
        }
    };

    let x = cell.train.design.view();
    let y = cell.train.responses.view();
    let mut expander: Option<Result<pipeline::CandidateList>> = None;
    let mut rows = Vec::with_capacity(spec.methods.len());
    for &method in &spec.methods {
        let started = Instant::now();
        let outcome = fit_method(
            method,
            &x,
            &y,
            &cell,
            &pipeline_cfg,
            spec.ridge_lambda,
            seed,
            &mut expander,
        );
        let wall_ms = match spec.timing {
            TimingMode::Measured => started.elapsed().as_millis() as u64,
            TimingMode::Zeroed => 0,
        };
        match outcome {
            Ok(w) => {
                let (test_mse, param_error) = evaluate_estimate(&w.view(), &cell.test);
                rows.push(mk_row(method, test_mse, param_error, wall_ms, "ok".into()));
            }
            Err(e) => rows.push(mk_row(
                method,
                None,
                None,
                wall_ms,
                format!("error:{}", e.tag()),
            )),
        }
    }
    rows
}

/// Execute every grid cell, aggregate, and (when an output path is set)
/// write the row and aggregate CSV files.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let cells: Vec<(f64, u64)> = spec
        .grid
        .iter()
        .flat_map(|&g| spec.replication_seeds.iter().map(move |&s| (g, s)))
        .collect();
    let rows: Vec<CellResult> = cells
        .par_iter()
        .map(|&(g, s)| run_cell(spec, g, s))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let aggregate = aggregate_rows(spec, &rows);
    let all_ok = rows.iter().all(|r| r.status == "ok");
    let table = ResultTable {
        rows,
        aggregate,
        all_ok,
    };
    if let Some(path) = &spec.out_path {
        write_results(&table, path)?;
    }
    Ok(table)
}

/// Ablation entry point: checks the single-field contract, then runs.
pub fn run_ablation(spec: &ExperimentSpec) -> Result<ResultTable> {
    if spec.kind != ExperimentKind::Ablation {
        return Err(Error::Parameter(
            "run_ablation: spec kind must be 'ablation'".into(),
        ));
    }
    run_experiment(spec)
}

fn aggregate_rows(spec: &ExperimentSpec, rows: &[CellResult]) -> Vec<AggregateRow> {
    let grid_param = spec.kind.grid_param(spec.ablate_field.as_deref());
    let mut out = Vec::new();
    for &g in &spec.grid {
        for &method in &spec.methods {
            let ok: Vec<&CellResult> = rows
                .iter()
                .filter(|r| r.grid_value == g && r.method == method.as_str() && r.status == "ok")
                .collect();
            let stat = |get: fn(&CellResult) -> Option<f64>| -> (Option<f64>, Option<f64>) {
                let vals: Vec<f64> = ok.iter().filter_map(|r| get(r)).collect();
                if vals.is_empty() {
                    return (None, None);
                }
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let std = if vals.len() > 1 {
                    (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                        / (vals.len() - 1) as f64)
                        .sqrt()
                } else {
                    0.0
                };
                (Some(mean), Some(std))
            };
            let (mean_test_mse, std_test_mse) = stat(|r| r.test_mse);
            let (mean_param_error, std_param_error) = stat(|r| r.param_error);
            out.push(AggregateRow {
                experiment: spec.kind.as_str().to_string(),
                grid_param: grid_param.clone(),
                grid_value: g,
                method: method.as_str(),
                n_ok: ok.len(),
                mean_test_mse,
                std_test_mse,
                mean_param_error,
                std_param_error,
            });
        }
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Render the per-cell rows as CSV text.
pub fn rows_to_csv(rows: &[CellResult]) -> String {
    let mut out = String::from(
        "experiment,grid_param,grid_value,seed,method,test_mse,param_error,wall_ms,status\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.grid_param,
            r.grid_value,
            r.seed,
            r.method,
            fmt_opt(r.test_mse),
            fmt_opt(r.param_error),
            r.wall_ms,
            r.status
        );
    }
    out
}

/// Render the aggregate rows as CSV text.
pub fn aggregate_to_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(
        "experiment,grid_param,grid_value,method,n_ok,mean_test_mse,std_test_mse,mean_param_error,std_param_error\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.grid_param,
            r.grid_value,
            r.method,
            r.n_ok,
            fmt_opt(r.mean_test_mse),
            fmt_opt(r.std_test_mse),
            fmt_opt(r.mean_param_error),
            fmt_opt(r.std_param_error)
        );
    }
    out
}

/// Sibling path for the aggregate table: `results.csv` -> `results_agg.csv`.
pub fn aggregate_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("results");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_agg.{ext}"))
}

/// Write the row table to `path` and the aggregates to the sibling file.
pub fn write_results(table: &ResultTable, path: &Path) -> Result<()> {
    std::fs::write(path, rows_to_csv(&table.rows))?;
    std::fs::write(aggregate_path(path), aggregate_to_csv(&table.aggregate))?;
    Ok(())
}

/// Parse a flat `key = value` spec file (see README for the key list).
pub fn parse_spec_file(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_spec_text(&text)
}

/// Parse spec text: one `key = value` pair per line, `#` comments.
pub fn parse_spec_text(text: &str) -> Result<ExperimentSpec> {
    let mut kind: Option<ExperimentKind> = None;
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parameter(format!(
                "spec line {}: expected key=value",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key == "kind" {
            kind = Some(value.parse()?);
        } else {
            pairs.push((key, value));
        }
    }
    let kind = kind.ok_or_else(|| Error::Parameter("spec file: missing 'kind'".into()))?;
    let mut spec = ExperimentSpec::new(kind, vec![]);
    let parse_list = |v: &str| -> Result<Vec<f64>> {
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parameter(format!("bad number '{s}' in spec")))
            })
            .collect()
    };
    for (key, value) in pairs {
        match key.as_str() {
            "grid" => spec.grid = parse_list(&value)?,
            "field" => spec.ablate_field = Some(value),
            "replications" => {
                let k: u64 = value
                    .parse()
                    .map_err(|_| Error::Parameter("bad 'replications' value".into()))?;
                spec.replication_seeds = (0..k).collect();
            }
            "rep_seeds" => {
                spec.replication_seeds = value
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<u64>()
                            .map_err(|_| Error::Parameter(format!("bad seed '{s}'")))
                    })
                    .collect::<Result<_>>()?;
            }
            "methods" => {
                spec.methods = value
                    .split(',')
                    .map(|s| s.trim().parse::<Method>())
                    .collect::<Result<_>>()?;
            }
            "n" => spec.synth.n = parse_count(&value, "n")?,
            "d" => spec.synth.d = parse_count(&value, "d")?,
            "alpha" => {
                spec.synth.alpha = parse_float(&value, "alpha")?;
                spec.pipeline.alpha = spec.synth.alpha;
            }
            "sigma" => spec.synth.noise_sigma = parse_float(&value, "sigma")?,
            "scale" => spec.synth.outlier_scale = parse_float(&value, "scale")?,
            "n_test" => spec.n_test = parse_count(&value, "n_test")?,
            "ridge_lambda" => spec.ridge_lambda = parse_float(&value, "ridge_lambda")?,
            "master_seed" => {
                // Base for replication seeds when 'replications' follows.
                let base: u64 = value
                    .parse()
                    .map_err(|_| Error::Parameter("bad 'master_seed' value".into()))?;
                let k = spec.replication_seeds.len() as u64;
                spec.replication_seeds = (base..base + k).collect();
            }
            "n_buckets" => spec.pipeline.n_buckets = parse_count(&value, "n_buckets")?,
            "repetitions" => spec.pipeline.repetitions = parse_count(&value, "repetitions")?,
            "degree" => spec.pipeline.degree = parse_count(&value, "degree")?,
            "filter_rounds" => spec.pipeline.filter_rounds = parse_count(&value, "filter_rounds")?,
            "seeds" => spec.pipeline.seeds = parse_count(&value, "seeds")?,
            "block_size" => spec.pipeline.block_size = parse_count(&value, "block_size")?,
            "lambda" => spec.pipeline.lambda = parse_float(&value, "lambda")?,
            "eta" => spec.pipeline.eta = parse_float(&value, "eta")?,
            "rho" => spec.pipeline.rho = parse_float(&value, "rho")?,
            "delta_radius" => spec.pipeline.delta_radius = parse_float(&value, "delta_radius")?,
            "aggregation" => spec.pipeline.aggregation_mode = value.parse()?,
            "out" => spec.out_path = Some(PathBuf::from(value)),
            "timings" => {
                spec.timing = if value == "true" {
                    TimingMode::Measured
                } else {
                    TimingMode::Zeroed
                };
            }
            "inliers" | "outliers" | "mix_n" | "pca_dim" | "mix_n_test" | "inlier_response"
            | "outlier_response" => {
                let mix = spec.mixture.get_or_insert(MixtureSpec {
                    inlier_path: PathBuf::new(),
                    outlier_path: PathBuf::new(),
                    inlier_response: 0,
                    outlier_response: 0,
                    n: 1400,
                    pca_dim: 10,
                    n_test: 1000,
                });
                match key.as_str() {
                    "inliers" => mix.inlier_path = PathBuf::from(value),
                    "outliers" => mix.outlier_path = PathBuf::from(value),
                    "mix_n" => mix.n = parse_count(&value, "mix_n")?,
                    "pca_dim" => mix.pca_dim = parse_count(&value, "pca_dim")?,
                    "mix_n_test" => mix.n_test = parse_count(&value, "mix_n_test")?,
                    "inlier_response" => {
                        mix.inlier_response = parse_count(&value, "inlier_response")?
                    }
                    "outlier_response" => {
                        mix.outlier_response = parse_count(&value, "outlier_response")?
                    }
                    _ => unreachable!(),
                }
            }
            other => {
                return Err(Error::Parameter(format!("unknown spec key '{other}'")));
            }
        }
    }
    if spec.kind == ExperimentKind::SingleRun && spec.grid.is_empty() {
        spec.grid = vec![spec.synth.alpha];
    }
    spec.validate()?;
    Ok(spec)
}

fn parse_count(value: &str, key: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::Parameter(format!("bad '{key}' value '{value}'")))
}

fn parse_float(value: &str, key: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Parameter(format!("bad '{key}' value '{value}'")))
}
