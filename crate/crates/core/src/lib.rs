//! Goodness-of-fit tests for heteroskedastic transformation models
//! `T(Y) = m(X) + sigma(X) e` based on empirical characteristic functions.
//!
//! The crate fits the model nonparametrically (kernel smoothing plus a
//! profile-likelihood estimate of the transformation parameter), computes
//! weighted L2 statistics for independence of the errors and the
//! covariates, for normal errors and for symmetric errors, and calibrates
//! them with bootstrap schemes. The [`simulation`] module holds the
//! data-generating processes and a Monte Carlo study runner.
//!
//! ```
//! use hetgof::prelude::*;
//! use rand::SeedableRng;
//!
//! let mut rng = hetgof::rng::StreamRng::seed_from_u64(1);
//! let sample = gen_sample(&ErrorModel::normal(), 60, &mut rng).unwrap();
//! let fit = ModelSpec::yeo_johnson().fit(&sample).unwrap();
//! let weights = WeightSpec::symmetric(CharacteristicKernel::gaussian(1.0));
//! let stat = delta_stat(&fit.residuals, &sample.x, &weights).unwrap();
//! assert!(stat >= 0.0);
//! ```

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod estimation;
pub mod model;
pub mod quadrature;
pub mod resampling;
pub mod rng;
pub mod simulation;
pub mod smoothing;
pub mod statistics;
pub mod transform;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::estimation::{estimate_theta, profile_loglik, ProfileConfig};
    pub use crate::model::ModelSpec;
    pub use crate::resampling::{
        run_normality_test, run_symmetry_test, run_test, BootstrapConfig, ClipPolicy, Scheme, StatisticSpec,
        TestResult,
    };
    pub use crate::simulation::{
        gen_error, gen_sample, warp_speed_study, ErrorModel, StudyConfig, StudyMode, TestKind,
    };
    pub use crate::smoothing::{Bandwidth, Covariates, Kernel, Sample, ScaleModel, SmootherConfig};
    pub use crate::statistics::{
        delta_stat, normality_stat, symmetry_stat, CharacteristicKernel, KernelFamily, UnivariateWeight,
        WeightFamily, WeightSpec,
    };
    pub use crate::transform::{TransformFamily, TransformParam};
}
