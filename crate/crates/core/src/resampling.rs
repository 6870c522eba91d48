//! Bootstrap calibration of the test statistics.
//!
//! One bootstrap replication resamples the covariate rows, builds new errors
//! according to the [`Scheme`], maps `m(X*) + sigma(X*) e*` back through the
//! inverse of the fitted transformation, refits the whole model (including
//! the transformation parameter) and recomputes the statistic.
//!
//! * `SmoothResidual`: `e*_j = a_n xi_j + e_j`, `xi_j` standard normal.
//! * `NormalErrors`: `e*_j` standard normal (normality test).
//! * `Wild`: `e*_j = U_j e~_j`, `e~` resampled residuals, `U_j = +-1`
//!   (symmetry test).

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::ModelSpec;
use crate::rng::{map_indexed, stream, StreamRng};
use crate::smoothing::{Covariates, FittedModel, Sample};
use crate::statistics::{
    delta_stat_raw, normality_stat_raw, symmetry_stat_raw, UnivariateWeight, WeightSpec, NEGATIVE_TOLERANCE,
};

/// Relative margin kept from a finite end of the transformation range.
pub const CLAMP_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    SmoothResidual,
    NormalErrors,
    Wild,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClipPolicy {
    /// Pull arguments outside the range just inside the boundary.
    ClampToRange,
    /// Redraw the offending error up to `max_tries` times.
    Resample { max_tries: usize },
}

/// Which statistic a test or study computes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StatisticSpec {
    Independence(WeightSpec),
    Normality(UnivariateWeight),
    Symmetry(UnivariateWeight),
}

impl StatisticSpec {
    /// Value before clamping at zero.
    pub fn compute_raw(&self, residuals: &[f64], x: &Covariates) -> Result<f64> {
        match self {
            StatisticSpec::Independence(w) => delta_stat_raw(residuals, x, w),
            StatisticSpec::Normality(w) => normality_stat_raw(residuals, w),
            StatisticSpec::Symmetry(w) => symmetry_stat_raw(residuals, w),
        }
    }

    /// Bootstrap scheme that imposes the corresponding null hypothesis.
    pub fn default_scheme(&self) -> Scheme {
        match self {
            StatisticSpec::Independence(_) => Scheme::SmoothResidual,
            StatisticSpec::Normality(_) => Scheme::NormalErrors,
            StatisticSpec::Symmetry(_) => Scheme::Wild,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub scheme: Scheme,
    pub replications: usize,
    pub alpha: f64,
    /// `a_n = smoothing_coef * n^(-smoothing_exponent)`.
    pub smoothing_coef: f64,
    pub smoothing_exponent: f64,
    pub seed: u64,
    pub clip_policy: ClipPolicy,
    /// Center and scale the residuals to variance one before resampling.
    pub standardize_residuals: bool,
    /// Re-select the bandwidth on each bootstrap sample instead of reusing
    /// the one from the original data.
    pub reselect_bandwidth: bool,
    /// Failed replications that may be redrawn before giving up.
    pub max_redraws: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            scheme: Scheme::SmoothResidual,
            replications: 200,
            alpha: 0.05,
            smoothing_coef: 0.5,
            smoothing_exponent: 0.25,
            seed: 0,
            clip_policy: ClipPolicy::ClampToRange,
            standardize_residuals: true,
            reselect_bandwidth: false,
            max_redraws: 50,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(invalid("at least one bootstrap replication is required"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.smoothing_coef >= 0.0) {
            return Err(invalid("residual smoothing coefficient must be nonnegative"));
        }
        Ok(())
    }

    pub fn a_n(&self, n: usize) -> f64 {
        self.smoothing_coef * (n as f64).powf(-self.smoothing_exponent)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Bootstrap arguments moved inside the transformation range.
    pub clip_events: usize,
    /// Bootstrap replications that failed and were redrawn.
    pub refit_failures: usize,
    /// Statistic values below the negative round-off tolerance.
    pub negative_clamps: usize,
    /// Evaluation points on the original data with floored density.
    pub floored_density: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub replications: usize,
    /// `None` when no transformation parameter was estimated.
    pub theta_hat: Option<f64>,
    pub bandwidth: f64,
    pub diagnostics: Diagnostics,
}

impl TestResult {
    pub fn reject(&self) -> bool {
        self.statistic > self.critical_value
    }
}

/// Empirical `(1 - alpha)` quantile: the `ceil((1-alpha) B)`-th smallest
/// value, or minus infinity when that rank is zero.
pub fn upper_quantile(values: &[f64], alpha: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((1.0 - alpha) * sorted.len() as f64 - 1e-9).ceil();
    if rank < 1.0 {
        f64::NEG_INFINITY
    } else {
        sorted[(rank as usize).min(sorted.len()) - 1]
    }
}

/// `(1 + #{b : boot_b >= statistic}) / (B + 1)`.
pub fn p_value(statistic: f64, boot: &[f64]) -> f64 {
    let exceed = boot.iter().filter(|&&b| b >= statistic).count();
    (1 + exceed) as f64 / (boot.len() + 1) as f64
}

/// Residuals centered and scaled to unit sample variance; returned as is
/// when they have no spread.
pub fn standardize(residuals: &[f64]) -> Vec<f64> {
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let var = residuals.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        let sd = var.sqrt();
        residuals.iter().map(|e| (e - mean) / sd).collect()
    } else {
        residuals.to_vec()
    }
}

/// Bootstrap errors for one replication.
pub fn bootstrap_errors<R: Rng + ?Sized>(scheme: Scheme, residuals: &[f64], a_n: f64, rng: &mut R) -> Vec<f64> {
    match scheme {
        Scheme::SmoothResidual => residuals
            .iter()
            .map(|e| e + a_n * rng.sample::<f64, _>(StandardNormal))
            .collect(),
        Scheme::NormalErrors => (0..residuals.len()).map(|_| rng.sample(StandardNormal)).collect(),
        Scheme::Wild => (0..residuals.len())
            .map(|_| {
                let e = *residuals.choose(rng).expect("nonempty residuals");
                if rng.random::<bool>() {
                    e
                } else {
                    -e
                }
            })
            .collect(),
    }
}

/// Responses `T^{-1}(m(X_r) + sigma(X_r) e)` for resampled rows `r`.
///
/// Returns the responses and the number of clip events. With
/// [`ClipPolicy::Resample`], `redraw` supplies a fresh error for an argument
/// that fell outside the range.
pub fn bootstrap_responses<F: FnMut() -> f64>(
    fit: &FittedModel,
    rows: &[usize],
    errors: &[f64],
    policy: ClipPolicy,
    mut redraw: F,
) -> Result<(Vec<f64>, usize)> {
    if rows.len() != errors.len() {
        return Err(invalid("row indices and errors differ in length"));
    }
    let n = fit.m_hat.len();
    if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
        return Err(invalid(format!("row index {bad} out of bounds for {n} fitted points")));
    }
    let range = fit.family.range(fit.theta_hat);
    let theta = fit.theta_hat.0;
    let width = if range.lower.is_finite() && range.upper.is_finite() {
        range.upper - range.lower
    } else {
        let b = if range.upper.is_finite() { range.upper } else { range.lower };
        b.abs().max(1.0)
    };
    let mut clips = 0usize;
    let mut out = Vec::with_capacity(rows.len());
    for (&r, &e) in rows.iter().zip(errors) {
        let mut z = fit.m_hat[r] + fit.sigma_hat[r] * e;
        if !range.contains(z) {
            clips += 1;
            match policy {
                ClipPolicy::ClampToRange => {
                    z = if z >= range.upper {
                        range.upper - CLAMP_MARGIN * width
                    } else {
                        range.lower + CLAMP_MARGIN * width
                    };
                }
                ClipPolicy::Resample { max_tries } => {
                    let mut ok = false;
                    for _ in 0..max_tries {
                        z = fit.m_hat[r] + fit.sigma_hat[r] * redraw();
                        if range.contains(z) {
                            ok = true;
                            break;
                        }
                    }
                    if !ok {
                        return Err(Error::BootstrapDegeneracy(format!(
                            "no admissible bootstrap error after {max_tries} redraws"
                        )));
                    }
                }
            }
        }
        out.push(fit.family.inverse_unchecked(theta, z));
    }
    Ok((out, clips))
}

/// One bootstrap sample: resampled rows and the responses built on them.
#[derive(Debug, Clone)]
pub struct BootstrapDraw {
    pub sample: Sample,
    pub clip_events: usize,
}

/// Draw the resampled data set for one replication (steps 1-3).
pub fn draw_bootstrap_sample(
    fit: &FittedModel,
    x: &Covariates,
    resampling_residuals: &[f64],
    config: &BootstrapConfig,
    rng: &mut StreamRng,
) -> Result<BootstrapDraw> {
    let n = x.nrows();
    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let errors = bootstrap_errors(config.scheme, resampling_residuals, config.a_n(n), rng);
    let scheme = config.scheme;
    let a_n = config.a_n(n);
    let mut extra = rng.clone();
    let redraw = || match scheme {
        Scheme::SmoothResidual => {
            let e = *resampling_residuals.choose(&mut extra).expect("nonempty");
            e + a_n * extra.sample::<f64, _>(StandardNormal)
        }
        Scheme::NormalErrors => extra.sample(StandardNormal),
        Scheme::Wild => {
            let e = *resampling_residuals.choose(&mut extra).expect("nonempty");
            if extra.random::<bool>() {
                e
            } else {
                -e
            }
        }
    };
    let (y, clip_events) = bootstrap_responses(fit, &rows, &errors, config.clip_policy, redraw)?;
    let sample = Sample::new(y, x.select_rows(&rows))
        .map_err(|e| Error::BootstrapDegeneracy(format!("bootstrap sample rejected: {e}")))?;
    Ok(BootstrapDraw { sample, clip_events })
}

/// Residuals used to generate bootstrap errors.
pub fn resampling_residuals(fit: &FittedModel, config: &BootstrapConfig) -> Vec<f64> {
    if config.standardize_residuals {
        standardize(&fit.residuals)
    } else {
        fit.residuals.clone()
    }
}

/// Outcome of one bootstrap replication after any redraws.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Replication {
    pub clip_events: usize,
    pub failures: usize,
}

/// Steps 1-5 for one replication: draw, refit and evaluate every statistic.
/// Failed draws are retried on the same stream, at most `max_redraws` times.
#[allow(clippy::too_many_arguments)]
pub(crate) fn replicate(
    fit: &FittedModel,
    sample: &Sample,
    model: &ModelSpec,
    stats: &[StatisticSpec],
    config: &BootstrapConfig,
    resid: &[f64],
    rng: &mut StreamRng,
    out: &mut Vec<f64>,
) -> Result<Replication> {
    let mut failures = 0usize;
    loop {
        let attempt = (|| -> Result<(Vec<f64>, usize)> {
            let draw = draw_bootstrap_sample(fit, &sample.x, resid, config, rng)?;
            let refit = if config.reselect_bandwidth {
                model.fit(&draw.sample)?
            } else {
                model.fit_with_bandwidth(&draw.sample, fit.bandwidth_used)?
            };
            let vals = stats
                .iter()
                .map(|s| s.compute_raw(&refit.residuals, &draw.sample.x))
                .collect::<Result<Vec<f64>>>()?;
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::BootstrapDegeneracy("non-finite bootstrap statistic".into()));
            }
            Ok((vals, draw.clip_events))
        })();
        match attempt {
            Ok((vals, clips)) => {
                out.extend(vals);
                return Ok(Replication {
                    clip_events: clips,
                    failures,
                });
            }
            Err(e) => {
                failures += 1;
                if failures > config.max_redraws {
                    return Err(Error::BootstrapDegeneracy(format!(
                        "replication failed {failures} times; last error: {e}"
                    )));
                }
            }
        }
    }
}

fn run(sample: &Sample, spec: StatisticSpec, model: &ModelSpec, config: &BootstrapConfig) -> Result<TestResult> {
    config.validate()?;
    model.validate()?;
    let fit = model.fit(sample)?;
    let raw = spec.compute_raw(&fit.residuals, &sample.x)?;
    let mut diagnostics = Diagnostics {
        floored_density: fit.clip_count,
        ..Diagnostics::default()
    };
    if raw < NEGATIVE_TOLERANCE {
        diagnostics.negative_clamps += 1;
    }
    let statistic = raw.max(0.0);
    let resid = resampling_residuals(&fit, config);

    let reps = map_indexed(config.replications, |b| {
        let mut rng = stream(config.seed, b as u64);
        let mut vals = Vec::with_capacity(1);
        replicate(&fit, sample, model, &[spec], config, &resid, &mut rng, &mut vals).map(|r| (vals[0], r))
    });
    let mut boot = Vec::with_capacity(config.replications);
    for r in reps {
        let (v, rep) = r?;
        diagnostics.clip_events += rep.clip_events;
        diagnostics.refit_failures += rep.failures;
        if v < NEGATIVE_TOLERANCE {
            diagnostics.negative_clamps += 1;
        }
        boot.push(v.max(0.0));
    }
    Ok(TestResult {
        statistic,
        critical_value: upper_quantile(&boot, config.alpha),
        p_value: p_value(statistic, &boot),
        alpha: config.alpha,
        replications: boot.len(),
        theta_hat: (!fit.family.is_identity()).then_some(fit.theta_hat.0),
        bandwidth: fit.bandwidth_used,
        diagnostics,
    })
}

/// Bootstrap test of independence between the errors and the covariates,
/// using the configured scheme (smooth residual bootstrap by default).
pub fn run_test(sample: &Sample, weights: &WeightSpec, model: &ModelSpec, config: &BootstrapConfig) -> Result<TestResult> {
    run(sample, StatisticSpec::Independence(*weights), model, config)
}

/// Bootstrap test of normal errors; always draws standard normal errors.
pub fn run_normality_test(
    sample: &Sample,
    weight: &UnivariateWeight,
    model: &ModelSpec,
    config: &BootstrapConfig,
) -> Result<TestResult> {
    let cfg = BootstrapConfig {
        scheme: Scheme::NormalErrors,
        ..*config
    };
    run(sample, StatisticSpec::Normality(*weight), model, &cfg)
}

/// Bootstrap test of symmetric errors; always uses the wild bootstrap.
pub fn run_symmetry_test(
    sample: &Sample,
    weight: &UnivariateWeight,
    model: &ModelSpec,
    config: &BootstrapConfig,
) -> Result<TestResult> {
    let cfg = BootstrapConfig {
        scheme: Scheme::Wild,
        ..*config
    };
    run(sample, StatisticSpec::Symmetry(*weight), model, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{TransformFamily, TransformParam};
    use rand::SeedableRng;

    fn toy_fit(family: TransformFamily, theta: f64) -> FittedModel {
        FittedModel {
            family,
            theta_hat: TransformParam(theta),
            transformed: vec![0.0; 3],
            m_hat: vec![1.0, 2.0, 3.0],
            sigma_hat: vec![0.5, 1.0, 2.0],
            residuals: vec![-1.0, 0.0, 1.0],
            bandwidth_used: 0.3,
            clip_count: 0,
            leave_one_out: false,
        }
    }

    #[test]
    fn smooth_errors_degenerate_without_noise() {
        let mut rng = StreamRng::seed_from_u64(1);
        let r = [0.3, -1.2, 2.0];
        assert_eq!(bootstrap_errors(Scheme::SmoothResidual, &r, 0.0, &mut rng), r.to_vec());
    }

    #[test]
    fn wild_errors_are_signed_residuals() {
        let mut rng = StreamRng::seed_from_u64(2);
        let r = [0.3, -1.2, 2.0, 0.7];
        let e = bootstrap_errors(Scheme::Wild, &r, 0.1, &mut rng);
        assert!(e.iter().all(|v| r.iter().any(|x| x.abs() == v.abs())));
        let normal = bootstrap_errors(Scheme::NormalErrors, &r, 0.1, &mut rng);
        assert_eq!(normal.len(), 4);
    }

    #[test]
    fn identity_responses() {
        let fit = toy_fit(TransformFamily::YeoJohnson, 1.0);
        let (y, clips) =
            bootstrap_responses(&fit, &[2, 0, 1], &[0.5, -1.0, 2.0], ClipPolicy::ClampToRange, || 0.0).unwrap();
        assert_eq!(clips, 0);
        let expect = [3.0 + 2.0 * 0.5, 1.0 - 0.5, 2.0 + 2.0];
        for (a, b) in y.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn log_branch_responses() {
        let fit = toy_fit(TransformFamily::YeoJohnson, 0.0);
        let (y, _) = bootstrap_responses(&fit, &[1], &[0.25], ClipPolicy::ClampToRange, || 0.0).unwrap();
        assert!((y[0] - (2.25f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn clamping_counts_events() {
        let mut fit = toy_fit(TransformFamily::YeoJohnson, -0.5);
        fit.m_hat = vec![2.5];
        fit.sigma_hat = vec![1.0];
        let (y, clips) = bootstrap_responses(&fit, &[0], &[0.0], ClipPolicy::ClampToRange, || 0.0).unwrap();
        assert_eq!(clips, 1);
        let z = 2.0 - CLAMP_MARGIN * 2.0;
        let expect = TransformFamily::YeoJohnson.inverse(TransformParam(-0.5), z).unwrap();
        assert_eq!(y[0], expect);
        assert!(y[0].is_finite());

        let r = bootstrap_responses(&fit, &[0], &[0.0], ClipPolicy::Resample { max_tries: 3 }, || 5.0);
        assert!(matches!(r, Err(Error::BootstrapDegeneracy(_))));
        let (y, clips) =
            bootstrap_responses(&fit, &[0], &[0.0], ClipPolicy::Resample { max_tries: 3 }, || -1.0).unwrap();
        assert_eq!(clips, 1);
        let expect = TransformFamily::YeoJohnson.inverse(TransformParam(-0.5), 1.5).unwrap();
        assert!((y[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn bad_row_index_is_rejected() {
        let fit = toy_fit(TransformFamily::YeoJohnson, 1.0);
        assert!(bootstrap_responses(&fit, &[5], &[0.0], ClipPolicy::ClampToRange, || 0.0).is_err());
    }

    #[test]
    fn quantile_and_p_value_rules() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(upper_quantile(&v, 0.25), 3.0);
        assert_eq!(upper_quantile(&v, 0.5), 2.0);
        assert_eq!(upper_quantile(&v, 0.01), 4.0);
        assert_eq!(upper_quantile(&v, 1.0), f64::NEG_INFINITY);
        assert_eq!(p_value(2.5, &v), 3.0 / 5.0);
        assert_eq!(p_value(10.0, &v), 1.0 / 5.0);
        assert_eq!(p_value(0.0, &v), 1.0);
        assert_eq!(p_value(1.0, &[0.5]), 0.5);
        assert_eq!(p_value(1.0, &[1.5]), 1.0);
    }

    #[test]
    fn standardized_residuals() {
        let s = standardize(&[1.0, 2.0, 3.0, 6.0]);
        let m: f64 = s.iter().sum::<f64>() / 4.0;
        let v: f64 = s.iter().map(|e| e * e).sum::<f64>() / 4.0;
        assert!(m.abs() < 1e-15 && (v - 1.0).abs() < 1e-14);
        assert_eq!(standardize(&[2.0, 2.0]), vec![2.0, 2.0]);
    }

    #[test]
    fn config_validation() {
        let mut c = BootstrapConfig::default();
        c.replications = 0;
        assert!(c.validate().is_err());
        c = BootstrapConfig { alpha: 1.0, ..BootstrapConfig::default() };
        assert!(c.validate().is_err());
        let c = BootstrapConfig::default();
        assert!((c.a_n(16) - 0.25).abs() < 1e-15);
    }
}
