//! Kernel smoothing of the location and scale functions.
//!
//! `m(x)` and `sigma^2(x)` of the transformed response are estimated with
//! Nadaraya-Watson ratios, using a product kernel and one bandwidth for all
//! coordinates. Residuals are `(T(Y_j) - m(X_j)) / sigma(X_j)`.
//!
//! The kernel weights between data points do not depend on the
//! transformation parameter, so [`KernelSmoother`] computes them once and is
//! reused for every candidate parameter during estimation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::transform::{TransformFamily, TransformParam};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Above this many observations kernel rows are recomputed on demand instead
/// of being cached as an `n x n` matrix.
const MAX_CACHED_N: usize = 4096;

/// Row-major `n x p` covariate matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariates {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Covariates {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols == 0 {
            return Err(invalid("covariate matrix needs at least one column"));
        }
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "covariate data has {} entries, expected {rows} x {cols}",
                data.len()
            )));
        }
        Ok(Covariates { rows, cols, data })
    }

    /// Single covariate column.
    pub fn from_column(x: Vec<f64>) -> Self {
        Covariates {
            rows: x.len(),
            cols: 1,
            data: x,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("ragged covariate rows"));
        }
        Covariates::new(rows.len(), cols, rows.concat())
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(j).step_by(self.cols).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows `idx[0], idx[1], ...` stacked into a new matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Covariates {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Paired observations `(Y_j, X_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub y: Vec<f64>,
    pub x: Covariates,
}

impl Sample {
    pub fn new(y: Vec<f64>, x: Covariates) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(invalid(format!(
                "{} responses but {} covariate rows",
                y.len(),
                x.nrows()
            )));
        }
        if y.len() < 2 {
            return Err(invalid("a sample needs at least two observations"));
        }
        if y.iter().chain(x.as_slice()).any(|v| !v.is_finite()) {
            return Err(invalid("sample contains non-finite values"));
        }
        Ok(Sample { y, x })
    }

    pub fn univariate(y: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        Sample::new(y, Covariates::from_column(x))
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => INV_SQRT_2PI * (-0.5 * u * u).exp(),
            Kernel::Epanechnikov => {
                if u.abs() < 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// Product kernel of the scaled difference `(a - b) / h`.
    pub fn product(self, a: &[f64], b: &[f64], h: f64) -> f64 {
        match self {
            // one exp for all coordinates
            Kernel::Gaussian => {
                let d2: f64 = a.iter().zip(b).map(|(u, v)| ((u - v) / h).powi(2)).sum();
                INV_SQRT_2PI.powi(a.len() as i32) * (-0.5 * d2).exp()
            }
            Kernel::Epanechnikov => a.iter().zip(b).map(|(u, v)| self.eval((u - v) / h)).product(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    Auto,
    Fixed(f64),
}

/// Whether the scale function is estimated or held constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleModel {
    Heteroskedastic,
    Homoskedastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub kernel: Kernel,
    pub bandwidth: Bandwidth,
    pub density_floor: f64,
    pub variance_floor_factor: f64,
    pub scale: ScaleModel,
    /// Evaluate `m` and `sigma` at `X_j` without observation `j`.
    pub leave_one_out: bool,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        SmootherConfig {
            kernel: Kernel::Gaussian,
            bandwidth: Bandwidth::Auto,
            density_floor: 1e-10,
            variance_floor_factor: 1e-8,
            scale: ScaleModel::Heteroskedastic,
            leave_one_out: false,
        }
    }
}

impl SmootherConfig {
    pub fn validate(&self) -> Result<()> {
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid(format!("bandwidth must be positive, got {h}")));
            }
        }
        if !(self.density_floor > 0.0) || !(self.variance_floor_factor > 0.0) {
            return Err(invalid("smoothing floors must be positive"));
        }
        Ok(())
    }

    pub fn resolve_bandwidth(&self, x: &Covariates) -> Result<f64> {
        match self.bandwidth {
            Bandwidth::Fixed(h) => Ok(h),
            Bandwidth::Auto => bandwidth_auto(x),
        }
    }
}

/// Fitted location-scale model at a given transformation parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub family: TransformFamily,
    pub theta_hat: TransformParam,
    /// `T(Y_j)` at `theta_hat`.
    pub transformed: Vec<f64>,
    pub m_hat: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    pub residuals: Vec<f64>,
    pub bandwidth_used: f64,
    /// Evaluation points whose density estimate fell below the floor.
    pub clip_count: usize,
    pub leave_one_out: bool,
}

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Rule-of-thumb bandwidth `1.06 * s * n^(-1/(4+p))`, where `s` is the
/// geometric mean of the per-coordinate standard deviations. Coordinates
/// without spread are left out of the mean.
pub fn bandwidth_auto(x: &Covariates) -> Result<f64> {
    let n = x.nrows();
    let p = x.ncols();
    if n < 2 {
        return Err(invalid("bandwidth selection needs at least two rows"));
    }
    let mut log_sum = 0.0;
    let mut used = 0usize;
    for j in 0..p {
        let col: Vec<f64> = x.column(j).collect();
        let s = sample_variance(&col).sqrt();
        if s > 0.0 && s.is_finite() {
            log_sum += s.ln();
            used += 1;
        }
    }
    if used == 0 {
        return Err(invalid("every covariate has zero spread"));
    }
    let s_bar = (log_sum / used as f64).exp();
    Ok(1.06 * s_bar * (n as f64).powf(-1.0 / (4.0 + p as f64)))
}

/// Kernel density estimate `(1/(n h^p)) sum_v K((x0 - X_v)/h)`.
pub fn density_at(x: &Covariates, h: f64, x0: &[f64], config: &SmootherConfig) -> f64 {
    let n = x.nrows();
    let s: f64 = (0..n).map(|v| config.kernel.product(x0, x.row(v), h)).sum();
    s / (n as f64 * h.powi(x.ncols() as i32))
}

/// Weighted average of `values` with weights `K((x0 - X_v)/h)`.
/// Returns `None` when every weight vanishes.
fn nw_average(x: &Covariates, h: f64, x0: &[f64], values: &[f64], kernel: Kernel) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (v, t) in values.iter().enumerate() {
        let k = kernel.product(x0, x.row(v), h);
        num += k * t;
        den += k;
    }
    (den > 0.0).then(|| num / den)
}

fn transform_all(sample: &Sample, family: TransformFamily, theta: TransformParam) -> Result<Vec<f64>> {
    sample.y.iter().map(|&y| family.forward(theta, y)).collect()
}

/// Variance floor: a fraction of the spread of the transformed responses.
fn variance_floor(transformed: &[f64], factor: f64) -> f64 {
    let var = sample_variance(transformed);
    if var > 0.0 && var.is_finite() {
        factor * var
    } else {
        factor
    }
}

/// Nadaraya-Watson estimate of `E[T(Y) | X = x0]`.
///
/// Falls back to the unweighted mean when all weights vanish (possible only
/// with a compact kernel far from the data).
pub fn regress_mean(
    sample: &Sample,
    family: TransformFamily,
    theta: TransformParam,
    h: f64,
    x0: &[f64],
    config: &SmootherConfig,
) -> Result<f64> {
    let t = transform_all(sample, family, theta)?;
    Ok(nw_average(&sample.x, h, x0, &t, config.kernel)
        .unwrap_or_else(|| t.iter().sum::<f64>() / t.len() as f64))
}

/// Nadaraya-Watson estimate of `Var[T(Y) | X = x0]`, floored at
/// `variance_floor_factor` times the sample variance of `T(Y)`.
pub fn regress_var(
    sample: &Sample,
    family: TransformFamily,
    theta: TransformParam,
    m_hat_at_data: &[f64],
    h: f64,
    x0: &[f64],
    config: &SmootherConfig,
) -> Result<f64> {
    if m_hat_at_data.len() != sample.len() {
        return Err(invalid("m_hat length differs from the sample size"));
    }
    let t = transform_all(sample, family, theta)?;
    let sq: Vec<f64> = t.iter().zip(m_hat_at_data).map(|(a, m)| (a - m).powi(2)).collect();
    let raw = nw_average(&sample.x, h, x0, &sq, config.kernel)
        .unwrap_or_else(|| sq.iter().sum::<f64>() / sq.len() as f64);
    Ok(raw.max(variance_floor(&t, config.variance_floor_factor)))
}

/// Kernel weights between all pairs of data points for a fixed bandwidth.
#[derive(Debug, Clone)]
pub struct KernelSmoother {
    x: Covariates,
    h: f64,
    kernel: Kernel,
    leave_one_out: bool,
    weights: Option<Vec<f64>>,
    row_sums: Vec<f64>,
    density_floor: f64,
}

impl KernelSmoother {
    pub fn new(x: &Covariates, h: f64, config: &SmootherConfig) -> Result<Self> {
        config.validate()?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid(format!("bandwidth must be positive, got {h}")));
        }
        let n = x.nrows();
        let mut s = KernelSmoother {
            x: x.clone(),
            h,
            kernel: config.kernel,
            leave_one_out: config.leave_one_out,
            weights: None,
            row_sums: vec![0.0; n],
            density_floor: config.density_floor,
        };
        if n <= MAX_CACHED_N {
            let mut w = vec![0.0; n * n];
            for i in 0..n {
                w[i * n + i] = if s.leave_one_out {
                    0.0
                } else {
                    s.kernel.product(x.row(i), x.row(i), h)
                };
                for v in (i + 1)..n {
                    let k = s.kernel.product(x.row(i), x.row(v), h);
                    w[i * n + v] = k;
                    w[v * n + i] = k;
                }
            }
            for i in 0..n {
                s.row_sums[i] = w[i * n..(i + 1) * n].iter().sum();
            }
            s.weights = Some(w);
        } else {
            let mut buf = vec![0.0; n];
            for i in 0..n {
                s.compute_row(i, &mut buf);
                s.row_sums[i] = buf.iter().sum();
            }
        }
        Ok(s)
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.row_sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_sums.is_empty()
    }

    fn compute_row(&self, i: usize, buf: &mut [f64]) {
        for (v, b) in buf.iter_mut().enumerate() {
            *b = if self.leave_one_out && v == i {
                0.0
            } else {
                self.kernel.product(self.x.row(i), self.x.row(v), self.h)
            };
        }
    }

    /// `sum_v w_iv a_v / sum_v w_iv` for every data point `i`.
    fn smooth(&self, values: &[f64], out: &mut [f64]) {
        let n = self.len();
        let fallback = values.iter().sum::<f64>() / n as f64;
        let mut buf = if self.weights.is_none() { vec![0.0; n] } else { Vec::new() };
        for i in 0..n {
            let den = self.row_sums[i];
            if den <= 0.0 {
                out[i] = fallback;
                continue;
            }
            let row: &[f64] = match &self.weights {
                Some(w) => &w[i * n..(i + 1) * n],
                None => {
                    self.compute_row(i, &mut buf);
                    &buf
                }
            };
            let num: f64 = row.iter().zip(values).map(|(w, a)| w * a).sum();
            out[i] = num / den;
        }
    }

    /// Number of data points whose density estimate is below the floor.
    pub fn floored_points(&self) -> usize {
        let norm = self.len() as f64 * self.h.powi(self.x.ncols() as i32);
        self.row_sums.iter().filter(|&&s| s / norm < self.density_floor).count()
    }

    /// Location and scale estimates at the data points for given `T(Y)`.
    pub fn location_scale(
        &self,
        transformed: &[f64],
        scale: ScaleModel,
        variance_floor_factor: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut m = vec![0.0; n];
        self.smooth(transformed, &mut m);
        let sq: Vec<f64> = transformed.iter().zip(&m).map(|(t, mh)| (t - mh).powi(2)).collect();
        let floor = variance_floor(transformed, variance_floor_factor);
        let var = match scale {
            ScaleModel::Heteroskedastic => {
                let mut v = vec![0.0; n];
                self.smooth(&sq, &mut v);
                v
            }
            ScaleModel::Homoskedastic => vec![sq.iter().sum::<f64>() / n as f64; n],
        };
        let sigma = var.into_iter().map(|v| v.max(floor).sqrt()).collect();
        (m, sigma)
    }

    /// Fit the location-scale model to already transformed responses.
    pub fn fit_transformed(
        &self,
        family: TransformFamily,
        theta: TransformParam,
        transformed: Vec<f64>,
        config: &SmootherConfig,
    ) -> FittedModel {
        let (m_hat, sigma_hat) =
            self.location_scale(&transformed, config.scale, config.variance_floor_factor);
        let residuals = transformed
            .iter()
            .zip(&m_hat)
            .zip(&sigma_hat)
            .map(|((t, m), s)| (t - m) / s)
            .collect();
        FittedModel {
            family,
            theta_hat: theta,
            transformed,
            m_hat,
            sigma_hat,
            residuals,
            bandwidth_used: self.h,
            clip_count: self.floored_points(),
            leave_one_out: self.leave_one_out,
        }
    }

    pub fn fit(
        &self,
        sample: &Sample,
        family: TransformFamily,
        theta: TransformParam,
        config: &SmootherConfig,
    ) -> Result<FittedModel> {
        if sample.len() != self.len() {
            return Err(invalid("sample size differs from the smoother"));
        }
        let t = transform_all(sample, family, theta)?;
        Ok(self.fit_transformed(family, theta, t, config))
    }
}

/// Estimate `m` and `sigma` at every data point and form the residuals.
pub fn fit(
    sample: &Sample,
    family: TransformFamily,
    theta: TransformParam,
    config: &SmootherConfig,
) -> Result<FittedModel> {
    config.validate()?;
    let h = config.resolve_bandwidth(&sample.x)?;
    KernelSmoother::new(&sample.x, h, config)?.fit(sample, family, theta, config)
}
