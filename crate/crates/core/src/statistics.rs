//! Characteristic-function test statistics in pairwise form.
//!
//! With a product weight `W(t1, t2) = w1(t1) w2(t2)` built from spherical
//! densities, the weighted L2 distance between the joint empirical CF of
//! `(residual, X)` and the product of its marginals reduces to sums over
//! pairs of the characteristic kernels `Psi(|e_j - e_k|)` and
//! `Psi(||X_j - X_k||)`. The weight is taken to be the normalized density
//! whose CF is exactly `Psi`.
//!
//! The normality and symmetry statistics use an unnormalized univariate
//! weight `w(t)` and its cosine transform [`fourier_cos`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::integrate;
use crate::smoothing::Covariates;

/// Pre-clamp values below this are reported as numerical trouble.
pub const NEGATIVE_TOLERANCE: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    /// `exp(-c u^gamma)`, `0 < gamma <= 2`.
    SphericalStable,
    /// `(1 + u^2 / c)^(-gamma)`.
    GeneralizedLaplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicKernel {
    pub family: KernelFamily,
    pub gamma: f64,
    pub c: f64,
}

impl CharacteristicKernel {
    pub fn new(family: KernelFamily, gamma: f64, c: f64) -> Result<Self> {
        let k = CharacteristicKernel { family, gamma, c };
        k.validate()?;
        Ok(k)
    }

    /// `exp(-c u^2)`, the Gaussian case.
    pub fn gaussian(c: f64) -> Self {
        CharacteristicKernel {
            family: KernelFamily::SphericalStable,
            gamma: 2.0,
            c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid(format!("kernel tuning parameter must be positive, got {}", self.c)));
        }
        let ok = match self.family {
            KernelFamily::SphericalStable => self.gamma > 0.0 && self.gamma <= 2.0,
            KernelFamily::GeneralizedLaplace => self.gamma > 0.0 && self.gamma.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("kernel exponent {} not admissible for {:?}", self.gamma, self.family)))
        }
    }

    #[inline]
    pub fn psi(&self, u: f64) -> f64 {
        match self.family {
            KernelFamily::SphericalStable => {
                let p = if self.gamma == 2.0 {
                    u * u
                } else if self.gamma == 1.0 {
                    u
                } else {
                    u.powf(self.gamma)
                };
                (-self.c * p).exp()
            }
            KernelFamily::GeneralizedLaplace => {
                let base = 1.0 + u * u / self.c;
                if self.gamma == 1.0 {
                    1.0 / base
                } else {
                    base.powf(-self.gamma)
                }
            }
        }
    }
}

/// Product weight: one kernel for the residual, one for the covariates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub residual: CharacteristicKernel,
    pub covariate: CharacteristicKernel,
}

impl WeightSpec {
    /// Same kernel in both coordinates.
    pub fn symmetric(kernel: CharacteristicKernel) -> Self {
        WeightSpec {
            residual: kernel,
            covariate: kernel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightFamily {
    /// `exp(-c t^2)`
    GaussExp,
    /// `exp(-c |t|)`
    AbsExp,
    /// `(1 + t^2 / c^2)^(-1)`
    Cauchy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivariateWeight {
    pub family: WeightFamily,
    pub c: f64,
}

impl UnivariateWeight {
    pub fn new(family: WeightFamily, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("weight tuning parameter must be positive, got {c}")));
        }
        Ok(UnivariateWeight { family, c })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.family {
            WeightFamily::GaussExp => (-self.c * t * t).exp(),
            WeightFamily::AbsExp => (-self.c * t.abs()).exp(),
            WeightFamily::Cauchy => 1.0 / (1.0 + (t / self.c).powi(2)),
        }
    }
}

/// `I_w(a) = integral of cos(a t) w(t) over the real line`, in closed form.
pub fn fourier_cos(weight: &UnivariateWeight, a: f64) -> f64 {
    let c = weight.c;
    match weight.family {
        WeightFamily::GaussExp => (std::f64::consts::PI / c).sqrt() * (-a * a / (4.0 * c)).exp(),
        WeightFamily::AbsExp => 2.0 * c / (c * c + a * a),
        WeightFamily::Cauchy => std::f64::consts::PI * c * (-c * a.abs()).exp(),
    }
}

/// `integral cos(a t) exp(-t^2/2) w(t) dt`.
fn gauss_cross_term(weight: &UnivariateWeight, a: f64) -> f64 {
    match weight.family {
        WeightFamily::GaussExp => {
            let s = weight.c + 0.5;
            (std::f64::consts::PI / s).sqrt() * (-a * a / (4.0 * s)).exp()
        }
        _ => {
            // exp(-t^2/2) < 6e-32 beyond 12 and w <= 1
            2.0 * integrate(|t| (a * t).cos() * (-0.5 * t * t).exp() * weight.eval(t), 0.0, 12.0, 1e-15, 1e-12)
                .value
        }
    }
}

/// `integral exp(-t^2) w(t) dt`.
fn gauss_constant_term(weight: &UnivariateWeight) -> f64 {
    match weight.family {
        WeightFamily::GaussExp => (std::f64::consts::PI / (weight.c + 1.0)).sqrt(),
        _ => 2.0 * integrate(|t| (-t * t).exp() * weight.eval(t), 0.0, 9.0, 1e-15, 1e-13).value,
    }
}

/// Empirical characteristic function `(1/n) sum_j exp(i t v_j)`.
pub fn ecf(values: &[f64], t: f64) -> Complex64 {
    let n = values.len() as f64;
    let (re, im) = values
        .iter()
        .fold((0.0, 0.0), |(re, im), v| (re + (t * v).cos(), im + (t * v).sin()));
    Complex64::new(re / n, im / n)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

fn clamp(raw: f64) -> f64 {
    raw.max(0.0)
}

/// Independence statistic before clamping, for arbitrary pairwise values
/// `I1(|e_j - e_k|)` and `I2(||X_j - X_k||)`.
///
/// Runs in `O(n^2)` time and `O(n)` memory using
/// `sum_{j,k,l} I1_jk I2_jl = sum_j (sum_k I1_jk)(sum_l I2_jl)`.
pub fn delta_stat_with<F, G>(residuals: &[f64], x: &Covariates, i1: F, i2: G) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let n = residuals.len();
    if n != x.nrows() {
        return Err(invalid(format!("{n} residuals but {} covariate rows", x.nrows())));
    }
    if n == 0 {
        return Err(invalid("empty residual vector"));
    }
    let mut row1 = vec![0.0; n];
    let mut row2 = vec![0.0; n];
    let mut cross = 0.0;
    let d1 = i1(0.0);
    let d2 = i2(0.0);
    for j in 0..n {
        cross += d1 * d2;
        row1[j] += d1;
        row2[j] += d2;
        let xj = x.row(j);
        for k in (j + 1)..n {
            let a = i1((residuals[j] - residuals[k]).abs());
            let b = i2(euclidean(xj, x.row(k)));
            cross += 2.0 * a * b;
            row1[j] += a;
            row1[k] += a;
            row2[j] += b;
            row2[k] += b;
        }
    }
    let s1: f64 = row1.iter().sum();
    let s2: f64 = row2.iter().sum();
    let triple: f64 = row1.iter().zip(&row2).map(|(a, b)| a * b).sum();
    let nf = n as f64;
    Ok(cross / nf + s1 * s2 / (nf * nf * nf) - 2.0 * triple / (nf * nf))
}

pub fn delta_stat_raw(residuals: &[f64], x: &Covariates, weights: &WeightSpec) -> Result<f64> {
    delta_stat_with(residuals, x, |u| weights.residual.psi(u), |u| weights.covariate.psi(u))
}

/// Independence statistic `Delta_{n,W}`, clamped at zero.
pub fn delta_stat(residuals: &[f64], x: &Covariates, weights: &WeightSpec) -> Result<f64> {
    delta_stat_raw(residuals, x, weights).map(clamp)
}

pub fn normality_stat_raw(residuals: &[f64], weight: &UnivariateWeight) -> Result<f64> {
    let n = residuals.len();
    if n == 0 {
        return Err(invalid("empty residual vector"));
    }
    let mut pairs = fourier_cos(weight, 0.0) * n as f64;
    for j in 0..n {
        for k in (j + 1)..n {
            pairs += 2.0 * fourier_cos(weight, residuals[j] - residuals[k]);
        }
    }
    let cross: f64 = residuals.iter().map(|&e| gauss_cross_term(weight, e)).sum();
    let nf = n as f64;
    Ok(pairs / nf - 2.0 * cross + nf * gauss_constant_term(weight))
}

/// Normality statistic `n * integral |phi_n(t) - exp(-t^2/2)|^2 w(t) dt`.
pub fn normality_stat(residuals: &[f64], weight: &UnivariateWeight) -> Result<f64> {
    normality_stat_raw(residuals, weight).map(clamp)
}

pub fn symmetry_stat_raw(residuals: &[f64], weight: &UnivariateWeight) -> Result<f64> {
    let n = residuals.len();
    if n == 0 {
        return Err(invalid("empty residual vector"));
    }
    let mut s = 0.0;
    for j in 0..n {
        s += fourier_cos(weight, 0.0) - fourier_cos(weight, 2.0 * residuals[j]);
        for k in (j + 1)..n {
            s += 2.0
                * (fourier_cos(weight, residuals[j] - residuals[k])
                    - fourier_cos(weight, residuals[j] + residuals[k]));
        }
    }
    Ok(s / (2.0 * n as f64))
}

/// Symmetry statistic `n * integral (Im phi_n(t))^2 w(t) dt`.
pub fn symmetry_stat(residuals: &[f64], weight: &UnivariateWeight) -> Result<f64> {
    symmetry_stat_raw(residuals, weight).map(clamp)
}
