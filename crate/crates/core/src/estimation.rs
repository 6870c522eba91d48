//! Profile-likelihood estimation of the transformation parameter.
//!
//! For a candidate `theta` the location-scale model is refitted, the error
//! density is estimated from the residuals with a Gaussian kernel, and
//!
//! ```text
//! L(theta) = sum_j [ ln f_eps(e_j) - ln sigma(X_j) + ln T'_theta(Y_j) ]
//! ```
//!
//! is evaluated. The maximizer is located on a uniform grid and refined with
//! a golden-section search inside the neighbouring grid cells.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::smoothing::{Bandwidth, KernelSmoother, Sample, SmootherConfig};
use crate::transform::{TransformFamily, TransformParam};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const DENSITY_LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub grid_points: usize,
    pub refine_tol: f64,
    pub kde_bandwidth: Bandwidth,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            theta_lo: -2.0,
            theta_hi: 4.0,
            grid_points: 61,
            refine_tol: 1e-4,
            kde_bandwidth: Bandwidth::Auto,
        }
    }
}

impl ProfileConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_lo < self.theta_hi) || !self.theta_lo.is_finite() || !self.theta_hi.is_finite() {
            return Err(invalid(format!(
                "search box [{}, {}] is empty or unbounded",
                self.theta_lo, self.theta_hi
            )));
        }
        if self.grid_points < 5 {
            return Err(invalid("profile grid needs at least 5 points"));
        }
        if !(self.refine_tol > 0.0) {
            return Err(invalid("refinement tolerance must be positive"));
        }
        if let Bandwidth::Fixed(g) = self.kde_bandwidth {
            if !(g > 0.0) {
                return Err(invalid("residual density bandwidth must be positive"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let m = self.grid_points - 1;
        (0..=m)
            .map(|i| self.theta_lo + (self.theta_hi - self.theta_lo) * i as f64 / m as f64)
            .collect()
    }
}

/// Gaussian kernel density estimate of the residual distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDensity {
    residuals: Vec<f64>,
    g: f64,
}

impl ResidualDensity {
    pub fn eval(&self, u: f64) -> f64 {
        let s: f64 = self
            .residuals
            .iter()
            .map(|e| (-0.5 * ((u - e) / self.g).powi(2)).exp())
            .sum();
        INV_SQRT_2PI * s / (self.residuals.len() as f64 * self.g)
    }

    pub fn bandwidth(&self) -> f64 {
        self.g
    }

    /// Density at each residual itself; exploits symmetry of the pair sums.
    pub fn at_residuals(&self) -> Vec<f64> {
        let n = self.residuals.len();
        let mut acc = vec![1.0; n];
        let inv_g = 1.0 / self.g;
        for j in 0..n {
            let ej = self.residuals[j];
            for k in (j + 1)..n {
                let d = (ej - self.residuals[k]) * inv_g;
                let v = (-0.5 * d * d).exp();
                acc[j] += v;
                acc[k] += v;
            }
        }
        let norm = INV_SQRT_2PI / (n as f64 * self.g);
        acc.iter_mut().for_each(|a| *a *= norm);
        acc
    }
}

pub fn residual_density(residuals: &[f64], g: f64) -> Result<ResidualDensity> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(invalid(format!("density bandwidth must be positive, got {g}")));
    }
    if residuals.is_empty() {
        return Err(invalid("no residuals"));
    }
    Ok(ResidualDensity {
        residuals: residuals.to_vec(),
        g,
    })
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule `0.9 * min(s, IQR/1.34) * n^(-1/5)`.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let s = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = match (s > 0.0, iqr > 0.0) {
        (true, true) => s.min(iqr / 1.34),
        (true, false) => s,
        (false, true) => iqr / 1.34,
        (false, false) => 1e-6,
    };
    0.9 * spread * n.powf(-0.2)
}

/// Profile likelihood evaluator with the kernel weights precomputed.
#[derive(Debug, Clone)]
pub struct ProfileObjective<'a> {
    sample: &'a Sample,
    family: TransformFamily,
    smoother: KernelSmoother,
    smoother_config: SmootherConfig,
    kde_bandwidth: Bandwidth,
}

impl<'a> ProfileObjective<'a> {
    pub fn new(
        sample: &'a Sample,
        family: TransformFamily,
        smoother_config: &SmootherConfig,
        config: &ProfileConfig,
    ) -> Result<Self> {
        let h = smoother_config.resolve_bandwidth(&sample.x)?;
        Self::with_bandwidth(sample, family, smoother_config, config, h)
    }

    pub fn with_bandwidth(
        sample: &'a Sample,
        family: TransformFamily,
        smoother_config: &SmootherConfig,
        config: &ProfileConfig,
        h: f64,
    ) -> Result<Self> {
        config.validate()?;
        if let Some(y) = sample.y.iter().find(|&&y| !family.in_domain(y)) {
            return Err(invalid(format!("response {y} outside the domain of {family:?}")));
        }
        Ok(ProfileObjective {
            sample,
            family,
            smoother: KernelSmoother::new(&sample.x, h, smoother_config)?,
            smoother_config: *smoother_config,
            kde_bandwidth: config.kde_bandwidth,
        })
    }

    pub fn smoother(&self) -> &KernelSmoother {
        &self.smoother
    }

    /// `L(theta)`, or `None` when the fit is not finite.
    pub fn loglik(&self, theta: f64) -> Option<f64> {
        let fam = self.family;
        let t: Vec<f64> = self.sample.y.iter().map(|&y| fam.forward_unchecked(theta, y)).collect();
        if t.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let (m, sigma) = self.smoother.location_scale(
            &t,
            self.smoother_config.scale,
            self.smoother_config.variance_floor_factor,
        );
        let resid: Vec<f64> = t.iter().zip(&m).zip(&sigma).map(|((t, m), s)| (t - m) / s).collect();
        let g = match self.kde_bandwidth {
            Bandwidth::Fixed(g) => g,
            Bandwidth::Auto => silverman_bandwidth(&resid),
        };
        let dens = ResidualDensity { residuals: resid, g }.at_residuals();
        let mut total = 0.0;
        for (j, &y) in self.sample.y.iter().enumerate() {
            total += dens[j].max(DENSITY_LOG_FLOOR).ln() - sigma[j].ln() + fam.ln_d_dy_unchecked(theta, y);
        }
        total.is_finite().then_some(total)
    }
}

/// Profile log-likelihood at a single parameter value.
pub fn profile_loglik(
    sample: &Sample,
    family: TransformFamily,
    theta: TransformParam,
    smoother: &SmootherConfig,
    config: &ProfileConfig,
) -> Result<f64> {
    if !theta.0.is_finite() {
        return Err(invalid("non-finite transformation parameter"));
    }
    ProfileObjective::new(sample, family, smoother, config)?
        .loglik(theta.0)
        .ok_or_else(|| Error::EstimationFailure(format!("likelihood not finite at {}", theta.0)))
}

/// `(theta, L(theta))` over the configured grid; invalid points carry `None`.
pub fn profile_curve(
    sample: &Sample,
    family: TransformFamily,
    smoother: &SmootherConfig,
    config: &ProfileConfig,
) -> Result<Vec<(f64, Option<f64>)>> {
    let obj = ProfileObjective::new(sample, family, smoother, config)?;
    Ok(config.grid().into_iter().map(|t| (t, obj.loglik(t))).collect())
}

/// Maximizer of `f` on `[a, b]` by golden-section search; `f` returns `None`
/// where undefined, which is treated as minus infinity.
fn golden_section_max<F: Fn(f64) -> Option<f64>>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let val = |x: f64| f(x).unwrap_or(f64::NEG_INFINITY);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = val(c);
    let mut fd = val(d);
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = val(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = val(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Grid search plus golden-section refinement.
pub fn estimate_with(objective: &ProfileObjective<'_>, config: &ProfileConfig) -> Result<TransformParam> {
    let grid = config.grid();
    let mut best: Option<(usize, f64)> = None;
    for (i, &t) in grid.iter().enumerate() {
        if let Some(v) = objective.loglik(t) {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    let (i, grid_val) = best.ok_or_else(|| {
        Error::EstimationFailure("profile likelihood invalid at every grid point".into())
    })?;
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let (t_ref, v_ref) = golden_section_max(|t| objective.loglik(t), lo, hi, config.refine_tol);
    Ok(TransformParam(if v_ref > grid_val { t_ref } else { grid[i] }))
}

/// Profile-likelihood estimate of the transformation parameter.
pub fn estimate_theta(
    sample: &Sample,
    family: TransformFamily,
    smoother: &SmootherConfig,
    config: &ProfileConfig,
) -> Result<TransformParam> {
    let obj = ProfileObjective::new(sample, family, smoother, config)?;
    estimate_with(&obj, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{gen_sample, ErrorModel};
    use crate::smoothing::Covariates;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const YJ: TransformFamily = TransformFamily::YeoJohnson;

    #[test]
    fn single_residual_density() {
        let d = residual_density(&[0.0], 1.0).unwrap();
        assert!((d.eval(0.0) - INV_SQRT_2PI).abs() < 1e-15);
    }

    #[test]
    fn symmetric_residual_density() {
        let d = residual_density(&[-0.8, 0.8], 0.4).unwrap();
        for u in [0.1, 0.5, 1.3, 2.0] {
            assert!((d.eval(u) - d.eval(-u)).abs() < 1e-15);
        }
    }

    #[test]
    fn residual_density_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r: Vec<f64> = (0..10).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let g = 0.35;
        let d = residual_density(&r, g).unwrap();
        let direct = |u: f64| {
            r.iter()
                .map(|e| (-(u - e) * (u - e) / (2.0 * g * g)).exp() / (2.0 * std::f64::consts::PI).sqrt())
                .sum::<f64>()
                / (10.0 * g)
        };
        for u in [-1.5, 0.0, 0.33, 2.7] {
            assert!((d.eval(u) - direct(u)).abs() < 1e-12);
        }
        let at = d.at_residuals();
        for (j, e) in r.iter().enumerate() {
            assert!((at[j] - direct(*e)).abs() < 1e-12);
        }
        assert!(residual_density(&r, 0.0).is_err());
    }

    #[test]
    fn residual_density_integrates_to_one() {
        let d = residual_density(&[-1.0, 0.2, 0.5, 3.0], 0.3).unwrap();
        let r = crate::quadrature::integrate(|u| d.eval(u), -10.0, 15.0, 1e-13, 1e-13);
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn silverman_rule() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let s = (v.iter().map(|x| (x - 49.5f64).powi(2)).sum::<f64>() / 99.0).sqrt();
        let iqr = 74.25 - 24.75;
        let expect = 0.9 * s.min(iqr / 1.34) * 100f64.powf(-0.2);
        assert!((silverman_bandwidth(&v) - expect).abs() < 1e-12);
    }

    #[test]
    fn loglik_finite_at_branch_point_and_location_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = gen_sample(&ErrorModel::normal(), 60, &mut rng).unwrap();
        let sc = SmootherConfig::default();
        let pc = ProfileConfig::default();
        let l0 = profile_loglik(&s, YJ, TransformParam(0.0), &sc, &pc).unwrap();
        assert!(l0.is_finite());

        // identity transform: shifting the responses leaves L unchanged
        let id = TransformFamily::Identity;
        let shifted = Sample::new(s.y.iter().map(|y| y + 5.0).collect(), s.x.clone()).unwrap();
        let a = profile_loglik(&s, id, TransformParam(1.0), &sc, &pc).unwrap();
        let b = profile_loglik(&shifted, id, TransformParam(1.0), &sc, &pc).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn estimate_dominates_grid_and_stays_in_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = gen_sample(&ErrorModel::normal(), 80, &mut rng).unwrap();
        let sc = SmootherConfig::default();
        let pc = ProfileConfig::default();
        let th = estimate_theta(&s, YJ, &sc, &pc).unwrap();
        assert!(th.0 >= pc.theta_lo && th.0 <= pc.theta_hi);
        let lt = profile_loglik(&s, YJ, th, &sc, &pc).unwrap();
        for (_, v) in profile_curve(&s, YJ, &sc, &pc).unwrap() {
            assert!(lt >= v.unwrap());
        }
        let again = estimate_theta(&s, YJ, &sc, &pc).unwrap();
        assert_eq!(th.0.to_bits(), again.0.to_bits());
    }

    #[test]
    fn box_cox_rejects_nonpositive_responses() {
        let s = Sample::univariate(vec![1.0, -2.0, 3.0], vec![0.0, 1.0, 2.0]).unwrap();
        let r = estimate_theta(&s, TransformFamily::BoxCox, &SmootherConfig::default(), &ProfileConfig::default());
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn config_validation() {
        let mut c = ProfileConfig::default();
        c.grid_points = 4;
        assert!(c.validate().is_err());
        c = ProfileConfig { theta_lo: 1.0, theta_hi: 1.0, ..ProfileConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn golden_section_finds_parabola_max() {
        let (x, _) = golden_section_max(|t| Some(-(t - 0.3).powi(2)), -1.0, 2.0, 1e-8);
        assert!((x - 0.3).abs() < 1e-7);
    }

    #[test]
    fn identity_data_prefers_theta_near_one() {
        // untransformed homoskedastic linear-normal data
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 200;
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|x| 2.0 * x + rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng))
            .collect();
        let s = Sample::new(y, Covariates::from_column(x)).unwrap();
        let th = estimate_theta(&s, YJ, &SmootherConfig::default(), &ProfileConfig::default()).unwrap();
        assert!((th.0 - 1.0).abs() < 0.5, "theta_hat = {}", th.0);
    }
}
