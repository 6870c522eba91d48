//! Fitting recipe shared by the tests, the bootstrap and the simulations.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimation::{estimate_with, ProfileConfig, ProfileObjective};
use crate::smoothing::{FittedModel, KernelSmoother, Sample, SmootherConfig};
use crate::transform::{TransformFamily, TransformParam};

/// How a sample is turned into residuals: transformation family, smoother
/// and the parameter search, or a fixed parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: TransformFamily,
    pub smoother: SmootherConfig,
    pub profile: ProfileConfig,
    /// Skip estimation and use this parameter.
    pub fixed_theta: Option<f64>,
}

impl ModelSpec {
    pub fn new(family: TransformFamily) -> Self {
        ModelSpec {
            family,
            smoother: SmootherConfig::default(),
            profile: ProfileConfig::default(),
            fixed_theta: None,
        }
    }

    pub fn yeo_johnson() -> Self {
        Self::new(TransformFamily::YeoJohnson)
    }

    /// Whether the parameter is estimated from the data.
    pub fn estimates_theta(&self) -> bool {
        !self.family.is_identity() && self.fixed_theta.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        self.smoother.validate()?;
        if self.estimates_theta() {
            self.profile.validate()?;
        }
        Ok(())
    }

    /// Estimate the parameter (if needed) and fit with bandwidth `h`.
    pub fn fit_with_bandwidth(&self, sample: &Sample, h: f64) -> Result<FittedModel> {
        if self.estimates_theta() {
            let obj = ProfileObjective::with_bandwidth(sample, self.family, &self.smoother, &self.profile, h)?;
            let theta = estimate_with(&obj, &self.profile)?;
            obj.smoother().fit(sample, self.family, theta, &self.smoother)
        } else {
            let theta = TransformParam(self.fixed_theta.unwrap_or(1.0));
            KernelSmoother::new(&sample.x, h, &self.smoother)?.fit(sample, self.family, theta, &self.smoother)
        }
    }

    pub fn fit(&self, sample: &Sample) -> Result<FittedModel> {
        let h = self.smoother.resolve_bandwidth(&sample.x)?;
        self.fit_with_bandwidth(sample, h)
    }
}
