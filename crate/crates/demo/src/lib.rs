//! Browser demo: transformation curves, simulated profile likelihoods and
//! bootstrap tests, exported through `wasm-bindgen`.
//!
//! Every export returns a JSON string so the page needs no generated
//! TypeScript bindings.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use hetgof::estimation::profile_curve;
use hetgof::prelude::*;
use hetgof::rng::stream;
use serde::Serialize;
use std::result::Result;
use wasm_bindgen::prelude::*;

fn family(name: &str) -> Result<TransformFamily, String> {
    match name {
        "yeo-johnson" => Ok(TransformFamily::YeoJohnson),
        "box-cox" => Ok(TransformFamily::BoxCox),
        "identity" => Ok(TransformFamily::Identity),
        other => Err(format!("unknown transformation {other}")),
    }
}

fn error_model(model: &str, eta: f64, nu: f64, kappa: f64) -> Result<ErrorModel, String> {
    let m = match model {
        "A" => ErrorModel::A { eta, nu },
        "B" => ErrorModel::B { nu },
        "C" => ErrorModel::C { kappa },
        "D" => ErrorModel::D { eta, nu },
        other => return Err(format!("unknown model {other}")),
    };
    m.validate().map_err(|e| e.to_string())?;
    Ok(m)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curve {
    y: Vec<f64>,
    t: Vec<Option<f64>>,
}

/// `T_theta(y)` on an even grid over `[lo, hi]`; points outside the domain
/// are `null`.
pub fn transform_curve_json(name: &str, theta: f64, lo: f64, hi: f64, points: usize) -> Result<String, String> {
    let fam = family(name)?;
    if !(lo < hi) || points < 2 {
        return Err("need lo < hi and at least two points".into());
    }
    let y: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let t = y.iter().map(|&v| fam.forward(TransformParam(theta), v).ok()).collect();
    to_json(&Curve { y, t })
}

#[derive(Serialize)]
struct Profile {
    x: Vec<f64>,
    y: Vec<f64>,
    theta: Vec<f64>,
    loglik: Vec<Option<f64>>,
    theta_hat: f64,
}

/// Simulate a sample and return it with its Yeo-Johnson profile likelihood.
pub fn simulate_profile_json(model: &str, eta: f64, nu: f64, kappa: f64, n: usize, seed: u64) -> Result<String, String> {
    let m = error_model(model, eta, nu, kappa)?;
    let sample = gen_sample(&m, n, &mut stream(seed, 0)).map_err(|e| e.to_string())?;
    let smoother = SmootherConfig::default();
    let config = ProfileConfig::default();
    let curve = profile_curve(&sample, TransformFamily::YeoJohnson, &smoother, &config).map_err(|e| e.to_string())?;
    let theta_hat = estimate_theta(&sample, TransformFamily::YeoJohnson, &smoother, &config)
        .map_err(|e| e.to_string())?
        .0;
    let (theta, loglik) = curve.into_iter().unzip();
    to_json(&Profile {
        x: (0..sample.len()).map(|i| sample.x.row(i)[0]).collect(),
        y: sample.y.clone(),
        theta,
        loglik,
        theta_hat,
    })
}

#[derive(Serialize)]
struct TestSummary {
    statistic: f64,
    critical_value: f64,
    p_value: f64,
    reject: bool,
    theta_hat: Option<f64>,
    replications: usize,
}

/// Simulate a sample and run the bootstrap independence test on it with a
/// Gaussian weight of tuning parameter `c`.
#[allow(clippy::too_many_arguments)]
pub fn independence_test_json(
    model: &str,
    eta: f64,
    nu: f64,
    kappa: f64,
    n: usize,
    seed: u64,
    replications: usize,
    c: f64,
) -> Result<String, String> {
    let m = error_model(model, eta, nu, kappa)?;
    let sample = gen_sample(&m, n, &mut stream(seed, 0)).map_err(|e| e.to_string())?;
    if !(c > 0.0) {
        return Err("c must be positive".into());
    }
    let weights = WeightSpec::symmetric(CharacteristicKernel::gaussian(c));
    let boot = BootstrapConfig {
        replications,
        seed,
        ..BootstrapConfig::default()
    };
    let r = run_test(&sample, &weights, &ModelSpec::yeo_johnson(), &boot).map_err(|e| e.to_string())?;
    to_json(&TestSummary {
        statistic: r.statistic,
        critical_value: r.critical_value,
        p_value: r.p_value,
        reject: r.reject(),
        theta_hat: r.theta_hat,
        replications: r.replications,
    })
}

#[wasm_bindgen]
pub fn transform_curve(name: &str, theta: f64, lo: f64, hi: f64, points: usize) -> Result<String, String> {
    transform_curve_json(name, theta, lo, hi, points)
}

#[wasm_bindgen]
pub fn simulate_profile(model: &str, eta: f64, nu: f64, kappa: f64, n: usize, seed: u64) -> Result<String, String> {
    simulate_profile_json(model, eta, nu, kappa, n, seed)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn independence_test(
    model: &str,
    eta: f64,
    nu: f64,
    kappa: f64,
    n: usize,
    seed: u64,
    replications: usize,
    c: f64,
) -> Result<String, String> {
    independence_test_json(model, eta, nu, kappa, n, seed, replications, c)
}
