//! Data-generating processes for the Monte Carlo models and the study runner.
//!
//! All models share `T_0(Y) = 1.5 + exp(X) + X e` with the Yeo-Johnson
//! transformation at parameter 0. The error law switches at `x = 0.5`.

mod study;

pub use study::{warp_speed_study, StudyConfig, StudyMode, StudyRow, StudyTable, TestKind};

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::smoothing::{Covariates, Sample};
use crate::transform::TransformFamily;

/// Error law of the simulation models. `nu = f64::INFINITY` is allowed
/// wherever a degrees-of-freedom parameter appears.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum ErrorModel {
    /// Standardized skew-t below `x = 0.5`, standard normal above.
    A { eta: f64, nu: f64 },
    /// Standardized chi-square below `x = 0.5`, standard normal above.
    B { nu: f64 },
    /// Standardized asymmetric Laplace below `x = 0.5`, standardized
    /// symmetric Laplace above.
    C { kappa: f64 },
    /// Errors of model A with a discrete covariate.
    D { eta: f64, nu: f64 },
}

impl ErrorModel {
    /// Model A with standard normal errors everywhere.
    pub fn normal() -> Self {
        ErrorModel::A {
            eta: 0.0,
            nu: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ErrorModel::A { eta, nu } | ErrorModel::D { eta, nu } => {
                if !eta.is_finite() {
                    return Err(invalid("skewness parameter must be finite"));
                }
                if !(nu > 2.0) {
                    return Err(invalid(format!("degrees of freedom must exceed 2, got {nu}")));
                }
            }
            ErrorModel::B { nu } => {
                if !(nu >= 1.0) {
                    return Err(invalid(format!("degrees of freedom must be at least 1, got {nu}")));
                }
            }
            ErrorModel::C { kappa } => {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return Err(invalid(format!("kappa must be positive, got {kappa}")));
                }
            }
        }
        Ok(())
    }

    /// Whether the error law does not depend on the covariate.
    pub fn is_null(&self) -> bool {
        match *self {
            ErrorModel::A { eta, nu } | ErrorModel::D { eta, nu } => eta == 0.0 && nu == f64::INFINITY,
            ErrorModel::B { nu } => nu == f64::INFINITY,
            ErrorModel::C { kappa } => kappa == 1.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ErrorModel::A { .. } => "A",
            ErrorModel::B { .. } => "B",
            ErrorModel::C { .. } => "C",
            ErrorModel::D { .. } => "D",
        }
    }

    /// Parameters as `name=value` pairs joined by `;`.
    pub fn params(&self) -> String {
        match *self {
            ErrorModel::A { eta, nu } | ErrorModel::D { eta, nu } => format!("eta={eta};nu={}", fmt_df(nu)),
            ErrorModel::B { nu } => format!("nu={}", fmt_df(nu)),
            ErrorModel::C { kappa } => format!("kappa={kappa}"),
        }
    }
}

fn fmt_df(nu: f64) -> String {
    if nu.is_infinite() {
        "inf".to_string()
    } else {
        nu.to_string()
    }
}

/// Regression function of the simulation models.
pub fn true_mean(x: f64) -> f64 {
    1.5 + x.exp()
}

/// Scale function of the simulation models.
pub fn true_scale(x: f64) -> f64 {
    x
}

/// Draw from the skew-t law `ST(0, 1, eta, nu)`.
pub fn skew_t_sample<R: Rng + ?Sized>(eta: f64, nu: f64, rng: &mut R) -> f64 {
    let delta = eta / (1.0 + eta * eta).sqrt();
    let u0: f64 = rng.sample(StandardNormal);
    let u1: f64 = rng.sample(StandardNormal);
    let z = delta * u0.abs() + (1.0 - delta * delta).sqrt() * u1;
    if nu.is_infinite() {
        z
    } else {
        let v = ChiSquared::new(nu).expect("positive degrees of freedom").sample(rng);
        z / (v / nu).sqrt()
    }
}

/// Mean and variance of `ST(0, 1, eta, nu)`.
pub fn skew_t_moments(eta: f64, nu: f64) -> Result<(f64, f64)> {
    if !(nu > 2.0) {
        return Err(invalid(format!("skew-t variance requires nu > 2, got {nu}")));
    }
    let delta = eta / (1.0 + eta * eta).sqrt();
    let b = (2.0 / std::f64::consts::PI).sqrt();
    if nu.is_infinite() {
        let mean = delta * b;
        return Ok((mean, 1.0 - mean * mean));
    }
    let ratio = (libm::lgamma((nu - 1.0) / 2.0) - libm::lgamma(nu / 2.0)).exp();
    let mean = delta * b * (nu / 2.0).sqrt() * ratio;
    Ok((mean, nu / (nu - 2.0) - mean * mean))
}

/// Draw from the asymmetric Laplace law `AL(0, 1, kappa)`.
pub fn asym_laplace_sample<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    let e1: f64 = rng.sample(Exp1);
    let e2: f64 = rng.sample(Exp1);
    e1 / kappa - kappa * e2
}

/// Precomputed standardization constants for one error model.
#[derive(Debug, Clone, Copy)]
pub struct ErrorSampler {
    model: ErrorModel,
    shift: f64,
    scale: f64,
    chi: Option<ChiSquared<f64>>,
}

impl ErrorSampler {
    pub fn new(model: ErrorModel) -> Result<Self> {
        model.validate()?;
        let (shift, scale, chi) = match model {
            ErrorModel::A { eta, nu } | ErrorModel::D { eta, nu } => {
                let (m, v) = skew_t_moments(eta, nu)?;
                (m, v.sqrt(), None)
            }
            ErrorModel::B { nu } if nu.is_finite() => {
                let chi = ChiSquared::new(nu).map_err(|e| invalid(e.to_string()))?;
                (nu, (2.0 * nu).sqrt(), Some(chi))
            }
            ErrorModel::B { .. } => (0.0, 1.0, None),
            ErrorModel::C { kappa } => ((1.0 - kappa * kappa) / kappa, (1.0 + kappa.powi(4)).sqrt() / kappa, None),
        };
        Ok(ErrorSampler {
            model,
            shift,
            scale,
            chi,
        })
    }

    /// Error at covariate value `x`.
    pub fn sample<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        if x > 0.5 {
            return match self.model {
                ErrorModel::C { .. } => asym_laplace_sample(1.0, rng) / std::f64::consts::SQRT_2,
                _ => rng.sample(StandardNormal),
            };
        }
        let w = match self.model {
            ErrorModel::A { eta, nu } | ErrorModel::D { eta, nu } => skew_t_sample(eta, nu, rng),
            ErrorModel::B { .. } => match &self.chi {
                Some(chi) => chi.sample(rng),
                None => rng.sample(StandardNormal),
            },
            ErrorModel::C { kappa } => asym_laplace_sample(kappa, rng),
        };
        (w - self.shift) / self.scale
    }

    /// Covariate draw: uniform on `(0, 1)`, or on `{0.1, ..., 1.0}` for model D.
    pub fn covariate<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.model {
            ErrorModel::D { .. } => rng.random_range(1..=10u32) as f64 / 10.0,
            _ => rng.random::<f64>(),
        }
    }
}

/// One error at covariate value `x`, mean zero and variance one.
pub fn gen_error<R: Rng + ?Sized>(model: &ErrorModel, x: f64, rng: &mut R) -> Result<f64> {
    Ok(ErrorSampler::new(*model)?.sample(x, rng))
}

/// A simulated sample together with the errors that generated it.
#[derive(Debug, Clone)]
pub struct SimulatedSample {
    pub sample: Sample,
    pub errors: Vec<f64>,
}

pub fn gen_sample_with_errors<R: Rng + ?Sized>(model: &ErrorModel, n: usize, rng: &mut R) -> Result<SimulatedSample> {
    if n == 0 {
        return Err(invalid("sample size must be positive"));
    }
    let sampler = ErrorSampler::new(*model)?;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut errors = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = sampler.covariate(rng);
        let e = sampler.sample(xi, rng);
        let z = true_mean(xi) + true_scale(xi) * e;
        let yi = TransformFamily::YeoJohnson.inverse_unchecked(0.0, z);
        debug_assert!(yi.is_finite());
        x.push(xi);
        y.push(yi);
        errors.push(e);
    }
    let sample = if n >= 2 {
        Sample::univariate(y, x)?
    } else {
        Sample {
            y,
            x: Covariates::from_column(x),
        }
    };
    Ok(SimulatedSample { sample, errors })
}

/// Sample of size `n` from the model with Yeo-Johnson parameter 0.
pub fn gen_sample<R: Rng + ?Sized>(model: &ErrorModel, n: usize, rng: &mut R) -> Result<Sample> {
    Ok(gen_sample_with_errors(model, n, rng)?.sample)
}
