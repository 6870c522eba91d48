//! Parametric response transformations.
//!
//! The Yeo-Johnson family is defined on the whole real line and is the
//! identity at `theta = 1`. Box-Cox needs strictly positive responses.
//! `Identity` ignores the parameter and is used for "no transformation" fits.
//!
//! All maps are strictly increasing in `y`. The power branches are written
//! with `expm1`/`ln_1p` so that values approach the log branches smoothly as
//! `theta` tends to the branch points.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Parameters closer than this to a branch point use the log branch.
pub const BRANCH_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformFamily {
    YeoJohnson,
    BoxCox,
    Identity,
}

/// Scalar transformation parameter.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransformParam(pub f64);

impl TransformParam {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for TransformParam {
    fn from(v: f64) -> Self {
        TransformParam(v)
    }
}

/// Open interval `(lower, upper)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenInterval {
    pub lower: f64,
    pub upper: f64,
}

impl OpenInterval {
    pub const REAL_LINE: OpenInterval = OpenInterval {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn contains(&self, z: f64) -> bool {
        z > self.lower && z < self.upper
    }
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() < BRANCH_EPS
}

impl TransformFamily {
    /// Whether `theta` is irrelevant (the identity family).
    pub fn is_identity(self) -> bool {
        matches!(self, TransformFamily::Identity)
    }

    pub fn in_domain(self, y: f64) -> bool {
        match self {
            TransformFamily::BoxCox => y > 0.0 && y.is_finite(),
            _ => y.is_finite(),
        }
    }

    fn check_domain(self, y: f64) -> Result<()> {
        if self.in_domain(y) {
            Ok(())
        } else {
            Err(invalid(format!("response {y} outside the domain of {self:?}")))
        }
    }

    fn check_theta(theta: TransformParam) -> Result<f64> {
        if theta.0.is_finite() {
            Ok(theta.0)
        } else {
            Err(invalid(format!("non-finite transformation parameter {}", theta.0)))
        }
    }

    pub fn forward(self, theta: TransformParam, y: f64) -> Result<f64> {
        self.check_domain(y)?;
        let t = Self::check_theta(theta)?;
        Ok(self.forward_unchecked(t, y))
    }

    /// `forward` without domain checks, for hot loops over validated data.
    pub(crate) fn forward_unchecked(self, t: f64, y: f64) -> f64 {
        match self {
            TransformFamily::Identity => y,
            TransformFamily::BoxCox => {
                if near(t, 0.0) {
                    y.ln()
                } else {
                    (t * y.ln()).exp_m1() / t
                }
            }
            TransformFamily::YeoJohnson if t == 1.0 => y,
            TransformFamily::YeoJohnson => {
                if y >= 0.0 {
                    if near(t, 0.0) {
                        y.ln_1p()
                    } else {
                        (t * y.ln_1p()).exp_m1() / t
                    }
                } else {
                    let s = 2.0 - t;
                    if near(t, 2.0) {
                        -(-y).ln_1p()
                    } else {
                        -(s * (-y).ln_1p()).exp_m1() / s
                    }
                }
            }
        }
    }

    /// Open image of the map for this parameter.
    pub fn range(self, theta: TransformParam) -> OpenInterval {
        let t = theta.0;
        match self {
            TransformFamily::Identity => OpenInterval::REAL_LINE,
            TransformFamily::YeoJohnson => OpenInterval {
                lower: if t > 2.0 && !near(t, 2.0) {
                    1.0 / (2.0 - t)
                } else {
                    f64::NEG_INFINITY
                },
                upper: if t < 0.0 && !near(t, 0.0) {
                    -1.0 / t
                } else {
                    f64::INFINITY
                },
            },
            TransformFamily::BoxCox => {
                if near(t, 0.0) {
                    OpenInterval::REAL_LINE
                } else if t > 0.0 {
                    OpenInterval {
                        lower: -1.0 / t,
                        upper: f64::INFINITY,
                    }
                } else {
                    OpenInterval {
                        lower: f64::NEG_INFINITY,
                        upper: -1.0 / t,
                    }
                }
            }
        }
    }

    pub fn inverse(self, theta: TransformParam, z: f64) -> Result<f64> {
        let t = Self::check_theta(theta)?;
        let r = self.range(theta);
        if !r.contains(z) {
            return Err(Error::OutOfRange {
                value: z,
                lower: r.lower,
                upper: r.upper,
            });
        }
        Ok(self.inverse_unchecked(t, z))
    }

    pub(crate) fn inverse_unchecked(self, t: f64, z: f64) -> f64 {
        match self {
            TransformFamily::Identity => z,
            TransformFamily::BoxCox => {
                if near(t, 0.0) {
                    z.exp()
                } else {
                    ((t * z).ln_1p() / t).exp()
                }
            }
            TransformFamily::YeoJohnson if t == 1.0 => z,
            TransformFamily::YeoJohnson => {
                if z >= 0.0 {
                    if near(t, 0.0) {
                        z.exp_m1()
                    } else {
                        ((t * z).ln_1p() / t).exp_m1()
                    }
                } else {
                    let s = 2.0 - t;
                    if near(t, 2.0) {
                        -(-z).exp_m1()
                    } else {
                        -((-s * z).ln_1p() / s).exp_m1()
                    }
                }
            }
        }
    }

    /// Derivative of the map with respect to `y`; strictly positive.
    pub fn d_dy(self, theta: TransformParam, y: f64) -> Result<f64> {
        self.check_domain(y)?;
        let t = Self::check_theta(theta)?;
        Ok(self.d_dy_unchecked(t, y))
    }

    pub(crate) fn d_dy_unchecked(self, t: f64, y: f64) -> f64 {
        self.ln_d_dy_unchecked(t, y).exp()
    }

    /// `ln(dT/dy)`, computed without forming the power first.
    pub(crate) fn ln_d_dy_unchecked(self, t: f64, y: f64) -> f64 {
        match self {
            TransformFamily::Identity => 0.0,
            TransformFamily::BoxCox => (t - 1.0) * y.ln(),
            TransformFamily::YeoJohnson => {
                if y >= 0.0 {
                    (t - 1.0) * y.ln_1p()
                } else {
                    (1.0 - t) * (-y).ln_1p()
                }
            }
        }
    }
}
