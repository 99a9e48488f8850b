//! Dataset generation, ingestion, and evaluation.
//!
//! Synthetic instances follow the contamination model used throughout the
//! experiments: isotropic Gaussian covariates everywhere, linear responses
//! with Gaussian noise on the inliers, and uniform responses on the
//! outliers. The real-data path embeds an inlier table and an outlier
//! table into one feature space (zero-pad, standardize, degree-2 expand,
//! PCA) and contaminates a training split while reserving a clean test
//! split and an oracle-only inlier pool.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numkit;
use crate::rng::{domain, RngLabel};

/// A (possibly contaminated) regression dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub design: Array2<f64>,
    pub responses: Array1<f64>,
    /// Which rows follow the linear model; `None` when unknown.
    pub inlier_mask: Option<Vec<bool>>,
    /// True parameter vector; synthetic data only.
    pub ground_truth: Option<Array1<f64>>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn dim(&self) -> usize {
        self.design.ncols()
    }
}

/// Synthetic contamination model parameters.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    /// Inlier fraction in (0, 1].
    pub alpha: f64,
    /// Inlier noise standard deviation.
    pub noise_sigma: f64,
    /// Outlier responses are uniform on `[-outlier_scale, outlier_scale]`.
    pub outlier_scale: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 5000,
            d: 20,
            alpha: 0.3,
            noise_sigma: 0.1,
            outlier_scale: 10.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::Parameter(
                "SynthConfig: n and d must be positive".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Parameter(
                "SynthConfig: alpha must be in (0, 1]".into(),
            ));
        }
        if self.noise_sigma < 0.0 || self.outlier_scale < 0.0 {
            return Err(Error::Parameter(
                "SynthConfig: scales must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Evaluation metrics on a clean test set with known ground truth.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EvalMetrics {
    /// `||w_hat - w_star||_2`.
    pub param_error: f64,
    /// Mean of `(<x, w_hat> - <x, w_star>)^2` over the test rows
    /// (noise-free predictions on both sides).
    pub test_mse: f64,
}

/// Generate one contaminated instance.
///
/// Draws `w_star ~ N(0, I)`, covariates `x_i ~ N(0, I)` for every row,
/// designates `floor(alpha * n)` rows (chosen by a seeded shuffle) as
/// inliers with `y = <x, w_star> + N(0, sigma^2)`, and gives the rest
/// uniform responses on `[-S, S]` while keeping their covariates.
pub fn gen_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = RngLabel::new(cfg.seed, 0, 0).rng(domain::DATA);
    let normal = StandardNormal;

    let ground_truth = Array1::from_iter((0..cfg.d).map(|_| normal.sample(&mut rng)));
    let mut design = Array2::<f64>::zeros((cfg.n, cfg.d));
    for v in design.iter_mut() {
        *v = normal.sample(&mut rng);
    }

    let mut order: Vec<usize> = (0..cfg.n).collect();
    order.shuffle(&mut rng);
    let n_inliers = ((cfg.alpha * cfg.n as f64).floor() as usize).max(1);
    let mut mask = vec![false; cfg.n];
    for &i in order.iter().take(n_inliers) {
        mask[i] = true;
    }

    let mut responses = Array1::<f64>::zeros(cfg.n);
    for i in 0..cfg.n {
        if mask[i] {
            let noise: f64 = normal.sample(&mut rng);
            responses[i] = design.row(i).dot(&ground_truth) + cfg.noise_sigma * noise;
        } else {
            responses[i] = cfg.outlier_scale * rng.random_range(-1.0..=1.0);
        }
    }

    Ok(Dataset {
        design,
        responses,
        inlier_mask: Some(mask),
        ground_truth: Some(ground_truth),
    })
}

/// Clean test set sharing a known ground truth: fresh isotropic Gaussian
/// covariates, all rows inliers.
pub fn gen_clean_test(
    ground_truth: &Array1<f64>,
    n_test: usize,
    noise_sigma: f64,
    seed: u64,
) -> Dataset {
    let d = ground_truth.len();
    let mut rng = RngLabel::new(seed, 1, 0).rng(domain::DATA);
    let normal = StandardNormal;
    let mut design = Array2::<f64>::zeros((n_test, d));
    for v in design.iter_mut() {
        *v = normal.sample(&mut rng);
    }
    let mut responses = Array1::<f64>::zeros(n_test);
    for i in 0..n_test {
        let noise: f64 = normal.sample(&mut rng);
        responses[i] = design.row(i).dot(ground_truth) + noise_sigma * noise;
    }
    Dataset {
        design,
        responses,
        inlier_mask: Some(vec![true; n_test]),
        ground_truth: Some(ground_truth.clone()),
    }
}

/// Parameter error and noise-free test MSE of `w_hat` on a clean test set.
pub fn evaluate(w_hat: &ArrayView1<f64>, test: &Dataset) -> Result<EvalMetrics> {
    let truth = test
        .ground_truth
        .as_ref()
        .ok_or_else(|| Error::Parameter("evaluate: test set has no ground truth".into()))?;
    if let Some(mask) = &test.inlier_mask {
        if mask.iter().any(|&m| !m) {
            return Err(Error::Parameter("evaluate: test set must be clean".into()));
        }
    }
    if w_hat.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "evaluate: estimate has {} coordinates, truth has {}",
            w_hat.len(),
            truth.len()
        )));
    }
    let diff = &w_hat.to_owned() - truth;
    let param_error = numkit::norm(&diff.view());
    let gaps = test.design.dot(&diff);
    let test_mse = gaps.iter().map(|g| g * g).sum::<f64>() / test.n().max(1) as f64;
    Ok(EvalMetrics {
        param_error,
        test_mse,
    })
}

/// Mean squared prediction error against observed responses.
pub fn empirical_mse(
    w: &ArrayView1<f64>,
    x: &ndarray::ArrayView2<f64>,
    y: &ArrayView1<f64>,
) -> f64 {
    let preds = x.dot(w);
    preds
        .iter()
        .zip(y.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / y.len().max(1) as f64
}

/// Which columns of a delimited file are features and which the response.
#[derive(Debug, Clone)]
pub struct ColumnSchema {
    /// Zero-based index of the response column.
    pub response: usize,
    /// Feature column indices; `None` means every non-response column.
    pub features: Option<Vec<usize>>,
}

/// A parsed numeric table.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub features: Array2<f64>,
    pub responses: Array1<f64>,
    /// Rows dropped because a needed field failed to parse.
    pub rejected_rows: usize,
}

/// Load a comma-separated numeric table with a header row.
///
/// Rows with non-numeric fields in any used column are rejected (and
/// counted); a file with no valid rows is an error.
pub fn load_table(path: &Path, schema: &ColumnSchema) -> Result<RawTable> {
    let table_err = |reason: String| Error::Table {
        path: path.display().to_string(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| table_err(format!("open failed: {e}")))?;
    let header_len = reader
        .headers()
        .map_err(|e| table_err(format!("malformed header: {e}")))?
        .len();
    if header_len == 0 {
        return Err(table_err("malformed header: empty".into()));
    }
    let feature_cols: Vec<usize> = match &schema.features {
        Some(cols) => cols.clone(),
        None => (0..header_len).filter(|&c| c != schema.response).collect(),
    };
    if schema.response >= header_len || feature_cols.iter().any(|&c| c >= header_len) {
        return Err(table_err(format!(
            "schema refers to columns beyond the {header_len}-column header"
        )));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut responses: Vec<f64> = Vec::new();
    let mut rejected = 0usize;
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        let parse = |idx: usize| -> Option<f64> {
            record
                .get(idx)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
        };
        let Some(resp) = parse(schema.response) else {
            rejected += 1;
            continue;
        };
        let mut feats = Vec::with_capacity(feature_cols.len());
        let mut ok = true;
        for &c in &feature_cols {
            match parse(c) {
                Some(v) => feats.push(v),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            rejected += 1;
            continue;
        }
        rows.push(feats);
        responses.push(resp);
    }
    if rows.is_empty() {
        return Err(table_err("no valid rows".into()));
    }
    let k = feature_cols.len();
    let mut features = Array2::<f64>::zeros((rows.len(), k));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            features[(i, j)] = v;
        }
    }
    Ok(RawTable {
        features,
        responses: Array1::from_vec(responses),
        rejected_rows: rejected,
    })
}

/// Output of [`build_real_mixture`].
#[derive(Debug, Clone)]
pub struct RealMixture {
    /// Contaminated training set (inlier mask populated).
    pub train: Dataset,
    /// Clean inlier-only test set.
    pub test: Dataset,
    /// Remaining clean inlier rows, for oracle fitting.
    pub oracle_train: Dataset,
}

/// Build a contaminated train/clean test pair from two real tables.
///
/// Outlier features are zero-padded to the inlier width; the concatenated
/// design is standardized per column, expanded to degree-2 polynomial
/// features without bias, and projected to `pca_dim` dimensions by PCA fit
/// on the full expanded design. `n_test` inlier rows become the clean test
/// set; `floor(alpha * n)` inliers plus `n - floor(alpha * n)` outliers
/// (responses permuted among themselves) form the training set; leftover
/// inliers are returned for oracle fitting.
pub fn build_real_mixture(
    inlier_table: &RawTable,
    outlier_table: &RawTable,
    n: usize,
    alpha: f64,
    pca_dim: usize,
    n_test: usize,
    seed: u64,
) -> Result<RealMixture> {
    let d_in = inlier_table.features.ncols();
    let d_out = outlier_table.features.ncols();
    if d_out > d_in {
        return Err(Error::Parameter(format!(
            "build_real_mixture: outlier width {d_out} exceeds inlier width {d_in}"
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(
            "build_real_mixture: alpha must be in (0, 1]".into(),
        ));
    }
    let n_inlier_rows = inlier_table.features.nrows();
    let n_outlier_rows = outlier_table.features.nrows();
    let n_train_in = ((alpha * n as f64).floor() as usize).max(1);
    let n_train_out = n - n_train_in.min(n);
    if n_test + n_train_in + 1 > n_inlier_rows {
        return Err(Error::Parameter(format!(
            "build_real_mixture: need {} inlier rows (test {n_test} + train {n_train_in} + oracle >= 1), have {n_inlier_rows}",
            n_test + n_train_in + 1
        )));
    }
    if n_train_out > n_outlier_rows {
        return Err(Error::Parameter(format!(
            "build_real_mixture: need {n_train_out} outlier rows, have {n_outlier_rows}"
        )));
    }

    // Common feature space: zero-pad, stack, standardize, expand, project.
    let total = n_inlier_rows + n_outlier_rows;
    let mut stacked = Array2::<f64>::zeros((total, d_in));
    for i in 0..n_inlier_rows {
        stacked.row_mut(i).assign(&inlier_table.features.row(i));
    }
    for i in 0..n_outlier_rows {
        for j in 0..d_out {
            stacked[(n_inlier_rows + i, j)] = outlier_table.features[(i, j)];
        }
    }
    standardize_columns(&mut stacked);
    let expanded = degree2_features(&stacked.view());
    if pca_dim > expanded.ncols() {
        return Err(Error::Parameter(format!(
            "build_real_mixture: pca_dim {pca_dim} exceeds expanded width {}",
            expanded.ncols()
        )));
    }
    let basis = numkit::pca_fit(&expanded.view(), pca_dim)?;
    let mean = expanded.mean_axis(Axis(0)).expect("total >= 2");
    let centered = &expanded - &mean.view().insert_axis(Axis(0));
    let projected = centered.dot(&basis);

    let inlier_x = projected.slice(ndarray::s![..n_inlier_rows, ..]).to_owned();
    let outlier_x = projected.slice(ndarray::s![n_inlier_rows.., ..]).to_owned();

    let mut rng = RngLabel::new(seed, 0, 0).rng(domain::MIXTURE);
    let mut in_order: Vec<usize> = (0..n_inlier_rows).collect();
    in_order.shuffle(&mut rng);
    let test_ids = &in_order[..n_test];
    let train_in_ids = &in_order[n_test..n_test + n_train_in];
    let oracle_ids = &in_order[n_test + n_train_in..];

    let mut out_order: Vec<usize> = (0..n_outlier_rows).collect();
    out_order.shuffle(&mut rng);
    let train_out_ids = &out_order[..n_train_out];

    // Permute the chosen outlier responses among themselves.
    let mut permuted: Vec<f64> = train_out_ids
        .iter()
        .map(|&i| outlier_table.responses[i])
        .collect();
    permuted.shuffle(&mut rng);

    let gather = |x: &Array2<f64>, y: &Array1<f64>, ids: &[usize]| -> (Array2<f64>, Array1<f64>) {
        let mut xs = Array2::<f64>::zeros((ids.len(), pca_dim));
        let mut ys = Array1::<f64>::zeros(ids.len());
        for (row, &i) in ids.iter().enumerate() {
            xs.row_mut(row).assign(&x.row(i));
            ys[row] = y[i];
        }
        (xs, ys)
    };

    let (test_x, test_y) = gather(&inlier_x, &inlier_table.responses, test_ids);
    let (oracle_x, oracle_y) = gather(&inlier_x, &inlier_table.responses, oracle_ids);
    let (in_x, in_y) = gather(&inlier_x, &inlier_table.responses, train_in_ids);

    let n_train = n_train_in + n_train_out;
    let mut train_x = Array2::<f64>::zeros((n_train, pca_dim));
    let mut train_y = Array1::<f64>::zeros(n_train);
    let mut mask = vec![false; n_train];
    for i in 0..n_train_in {
        train_x.row_mut(i).assign(&in_x.row(i));
        train_y[i] = in_y[i];
        mask[i] = true;
    }
    for (k, &i) in train_out_ids.iter().enumerate() {
        train_x.row_mut(n_train_in + k).assign(&outlier_x.row(i));
        train_y[n_train_in + k] = permuted[k];
    }
    // Shuffle the assembled training rows so inliers are not a prefix.
    let mut train_order: Vec<usize> = (0..n_train).collect();
    train_order.shuffle(&mut rng);
    let mut final_x = Array2::<f64>::zeros((n_train, pca_dim));
    let mut final_y = Array1::<f64>::zeros(n_train);
    let mut final_mask = vec![false; n_train];
    for (row, &i) in train_order.iter().enumerate() {
        final_x.row_mut(row).assign(&train_x.row(i));
        final_y[row] = train_y[i];
        final_mask[row] = mask[i];
    }

    Ok(RealMixture {
        train: Dataset {
            design: final_x,
            responses: final_y,
            inlier_mask: Some(final_mask),
            ground_truth: None,
        },
        test: Dataset {
            design: test_x,
            responses: test_y,
            inlier_mask: Some(vec![true; n_test]),
            ground_truth: None,
        },
        oracle_train: Dataset {
            design: oracle_x,
            responses: oracle_y,
            inlier_mask: Some(vec![true; oracle_ids.len()]),
            ground_truth: None,
        },
    })
}

/// Center every column; scale non-degenerate columns to unit variance.
pub fn standardize_columns(x: &mut Array2<f64>) {
    let n = x.nrows() as f64;
    for mut col in x.columns_mut() {
        let mean = col.sum() / n;
        col.mapv_inplace(|v| v - mean);
        let var = col.iter().map(|v| v * v).sum::<f64>() / n;
        if var > 1e-24 {
            let inv = 1.0 / var.sqrt();
            col.mapv_inplace(|v| v * inv);
        }
    }
}

/// Degree-2 polynomial features without bias: all `x_i` then `x_i x_j`
/// for `i <= j`. Width `k + k(k+1)/2`.
pub fn degree2_features(x: &ndarray::ArrayView2<f64>) -> Array2<f64> {
    let (n, k) = (x.nrows(), x.ncols());
    let width = k + k * (k + 1) / 2;
    let mut out = Array2::<f64>::zeros((n, width));
    for row in 0..n {
        let mut c = 0;
        for i in 0..k {
            out[(row, c)] = x[(row, i)];
            c += 1;
        }
        for i in 0..k {
            for j in i..k {
                out[(row, c)] = x[(row, i)] * x[(row, j)];
                c += 1;
            }
        }
    }
    out
}

/// Write a dataset snapshot as a comma-separated table: response column
/// `y`, features `x0..`, and an `inlier` flag column when a mask exists.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Table {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let d = dataset.dim();
    let mut header: Vec<String> = vec!["y".to_string()];
    header.extend((0..d).map(|j| format!("x{j}")));
    if dataset.inlier_mask.is_some() {
        header.push("inlier".to_string());
    }
    writer.write_record(&header).map_err(|e| Error::Table {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    for i in 0..dataset.n() {
        let mut rec: Vec<String> = vec![format!("{}", dataset.responses[i])];
        rec.extend((0..d).map(|j| format!("{}", dataset.design[(i, j)])));
        if let Some(mask) = &dataset.inlier_mask {
            rec.push(if mask[i] { "1".into() } else { "0".into() });
        }
        writer.write_record(&rec).map_err(|e| Error::Table {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
    }
    writer.flush().map_err(|e| Error::Table {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    Ok(())
}

/// Load a snapshot written by [`save_dataset`].
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let table_err = |reason: String| Error::Table {
        path: path.display().to_string(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| table_err(format!("open failed: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| table_err(e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.first() != Some(&"y") {
        return Err(table_err("expected first column 'y'".into()));
    }
    let has_mask = names.last() == Some(&"inlier");
    let d = names.len() - 1 - usize::from(has_mask);
    let mut ys = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut mask = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| table_err(e.to_string()))?;
        let get = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| table_err(format!("bad field in column {i}")))
        };
        ys.push(get(0)?);
        let mut feats = Vec::with_capacity(d);
        for j in 0..d {
            feats.push(get(1 + j)?);
        }
        rows.push(feats);
        if has_mask {
            mask.push(get(1 + d)? != 0.0);
        }
    }
    if rows.is_empty() {
        return Err(table_err("no valid rows".into()));
    }
    let mut design = Array2::<f64>::zeros((rows.len(), d));
    for (i, r) in rows.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            design[(i, j)] = v;
        }
    }
    Ok(Dataset {
        design,
        responses: Array1::from_vec(ys),
        inlier_mask: if has_mask { Some(mask) } else { None },
        ground_truth: None,
    })
}
