//! Command execution.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use hetgof::estimation::{estimate_with, ProfileObjective};
use hetgof::model::ModelSpec;
use hetgof::resampling::{
    run_normality_test, run_symmetry_test, run_test, BootstrapConfig, ClipPolicy, StatisticSpec, TestResult,
};
use hetgof::rng::stream;
use hetgof::simulation::{gen_sample, warp_speed_study, ErrorModel, StudyConfig, StudyMode, StudyTable, TestKind};
use hetgof::smoothing::{Bandwidth, Kernel, Sample, ScaleModel};
use hetgof::statistics::{CharacteristicKernel, KernelFamily, UnivariateWeight, WeightFamily, WeightSpec};
use hetgof::transform::TransformFamily;
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::data::{write_sample, ColumnRef, DataFile, Delimiter};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Failure of a command, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input data or configuration: exit code 2.
    Input(String),
    /// Estimation or numerical failure: exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<hetgof::Error> for CliError {
    fn from(e: hetgof::Error) -> Self {
        match e {
            hetgof::Error::InvalidInput(_) | hetgof::Error::OutOfRange { .. } => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<crate::data::DataError> for CliError {
    fn from(e: crate::data::DataError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Input(e.to_string())
}

type CliResult<T> = Result<T, CliError>;

fn unix_time() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Everything needed to repeat a run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: &'static str,
    pub started: f64,
    pub finished: f64,
    pub diagnostics: serde_json::Value,
}

fn write_manifest(path: Option<&std::path::Path>, manifest: &RunManifest) -> CliResult<()> {
    if let Some(p) = path {
        let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        std::fs::write(p, text + "\n").map_err(io_err)?;
    }
    Ok(())
}

pub fn data_file(a: &DataArgs) -> CliResult<DataFile> {
    Ok(DataFile {
        path: a.data.clone(),
        response: ColumnRef::parse(&a.response),
        covariates: a.covariates.iter().map(|c| ColumnRef::parse(c)).collect(),
        delimiter: Delimiter::parse(&a.delimiter)?,
        header: !a.no_header,
    })
}

pub fn model_spec(a: &ModelArgs) -> ModelSpec {
    let family = match a.transform {
        TransformArg::None => TransformFamily::Identity,
        TransformArg::YeoJohnson => TransformFamily::YeoJohnson,
        TransformArg::BoxCox => TransformFamily::BoxCox,
    };
    let mut m = ModelSpec::new(family);
    m.smoother.scale = if a.homoskedastic {
        ScaleModel::Homoskedastic
    } else {
        ScaleModel::Heteroskedastic
    };
    m.smoother.kernel = match a.smoothing_kernel {
        SmoothingKernelArg::Gaussian => Kernel::Gaussian,
        SmoothingKernelArg::Epanechnikov => Kernel::Epanechnikov,
    };
    m.smoother.bandwidth = a.bandwidth.map_or(Bandwidth::Auto, Bandwidth::Fixed);
    m.smoother.leave_one_out = a.leave_one_out;
    m.fixed_theta = a.theta;
    m.profile.theta_lo = a.theta_min;
    m.profile.theta_hi = a.theta_max;
    m.profile.grid_points = a.grid_points;
    m
}

pub fn bootstrap_config(a: &BootstrapArgs) -> BootstrapConfig {
    BootstrapConfig {
        replications: a.replications,
        alpha: a.alpha,
        seed: a.seed,
        smoothing_coef: a.an_coef,
        clip_policy: match a.clip {
            ClipArg::Clamp => ClipPolicy::ClampToRange,
            ClipArg::Resample => ClipPolicy::Resample { max_tries: a.max_tries },
        },
        standardize_residuals: !a.no_standardize,
        reselect_bandwidth: a.reselect_bandwidth,
        ..BootstrapConfig::default()
    }
}

pub fn weight_spec(kernel: KernelArg, c: f64, gamma: f64) -> CliResult<WeightSpec> {
    let k = match kernel {
        KernelArg::Gauss => CharacteristicKernel::new(KernelFamily::SphericalStable, 2.0, c)?,
        KernelArg::Stable => CharacteristicKernel::new(KernelFamily::SphericalStable, gamma, c)?,
        KernelArg::Laplace => CharacteristicKernel::new(KernelFamily::GeneralizedLaplace, gamma, c)?,
    };
    Ok(WeightSpec::symmetric(k))
}

pub fn univariate_weight(w: WeightArg, c: f64) -> CliResult<UnivariateWeight> {
    let family = match w {
        WeightArg::GaussExp => WeightFamily::GaussExp,
        WeightArg::AbsExp => WeightFamily::AbsExp,
        WeightArg::Cauchy => WeightFamily::Cauchy,
    };
    Ok(UnivariateWeight::new(family, c)?)
}

/// JSON form of a test result.
#[derive(Debug, Serialize)]
pub struct TestOutput {
    pub test: &'static str,
    pub statistic: f64,
    pub p_value: f64,
    /// `None` only when the critical value is minus infinity.
    pub critical_value: Option<f64>,
    pub alpha: f64,
    pub reject: bool,
    pub theta_hat: Option<f64>,
    pub transform: TransformFamily,
    pub scale: ScaleModel,
    pub weights: serde_json::Value,
    pub replications: usize,
    pub bandwidth: f64,
    pub diagnostics: hetgof::resampling::Diagnostics,
    pub seed: u64,
    pub version: &'static str,
}

impl TestOutput {
    fn new(test: &'static str, r: &TestResult, model: &ModelSpec, weights: serde_json::Value, seed: u64) -> Self {
        TestOutput {
            test,
            statistic: r.statistic,
            p_value: r.p_value,
            critical_value: r.critical_value.is_finite().then_some(r.critical_value),
            alpha: r.alpha,
            reject: r.reject(),
            theta_hat: r.theta_hat,
            transform: model.family,
            scale: model.smoother.scale,
            weights,
            replications: r.replications,
            bandwidth: r.bandwidth,
            diagnostics: r.diagnostics,
            seed,
            version: VERSION,
        }
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let theta = self.theta_hat.map_or_else(|| "n/a".to_string(), |t| format!("{t:.4}"));
        let _ = writeln!(s, "{} test ({:?}, {:?})", self.test, self.transform, self.scale);
        let _ = writeln!(s, "  theta_hat      {theta}");
        let _ = writeln!(s, "  statistic      {:.6}", self.statistic);
        let cv = self.critical_value.map_or_else(|| "-inf".to_string(), |c| format!("{c:.6}"));
        let _ = writeln!(s, "  critical value {cv} (alpha = {})", self.alpha);
        let _ = writeln!(s, "  p-value        {:.4} (B = {})", self.p_value, self.replications);
        let _ = writeln!(s, "  decision       {}", if self.reject { "reject" } else { "do not reject" });
        let d = &self.diagnostics;
        if d.clip_events + d.refit_failures + d.negative_clamps > 0 {
            let _ = writeln!(
                s,
                "  diagnostics    clip events {}, refit failures {}, negative clamps {}",
                d.clip_events, d.refit_failures, d.negative_clamps
            );
        }
        s
    }
}

fn emit(out: &mut dyn std::io::Write, json: bool, value: &TestOutput) -> CliResult<()> {
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(value).expect("serializable")).map_err(io_err)
    } else {
        write!(out, "{}", value.summary()).map_err(io_err)
    }
}

pub fn cmd_test(a: &TestArgs, argv: &[String], out: &mut dyn std::io::Write) -> CliResult<TestOutput> {
    let started = unix_time();
    let sample = data_file(&a.data)?.load()?;
    let model = model_spec(&a.model);
    let boot = bootstrap_config(&a.bootstrap);
    let weights = weight_spec(a.kernel, a.c, a.gamma)?;
    let r = run_test(&sample, &weights, &model, &boot)?;
    let o = TestOutput::new("independence", &r, &model, json!(weights), boot.seed);
    emit(out, a.output.json, &o)?;
    write_manifest(
        a.output.manifest.as_deref(),
        &RunManifest {
            command: "test".into(),
            args: argv.to_vec(),
            config: json!({ "data": data_file(&a.data)?, "model": model, "bootstrap": boot, "weights": weights }),
            seed: boot.seed,
            version: VERSION,
            started,
            finished: unix_time(),
            diagnostics: json!(r.diagnostics),
        },
    )?;
    Ok(o)
}

pub fn cmd_univariate(
    kind: TestKind,
    a: &UnivariateArgs,
    argv: &[String],
    out: &mut dyn std::io::Write,
) -> CliResult<TestOutput> {
    let started = unix_time();
    let sample = data_file(&a.data)?.load()?;
    let model = model_spec(&a.model);
    let boot = bootstrap_config(&a.bootstrap);
    let w = univariate_weight(a.weight, a.c)?;
    let (name, r) = match kind {
        TestKind::Normality => ("normality", run_normality_test(&sample, &w, &model, &boot)?),
        _ => ("symmetry", run_symmetry_test(&sample, &w, &model, &boot)?),
    };
    let o = TestOutput::new(name, &r, &model, json!(w), boot.seed);
    emit(out, a.output.json, &o)?;
    write_manifest(
        a.output.manifest.as_deref(),
        &RunManifest {
            command: name.into(),
            args: argv.to_vec(),
            config: json!({ "data": data_file(&a.data)?, "model": model, "bootstrap": boot, "weight": w }),
            seed: boot.seed,
            version: VERSION,
            started,
            finished: unix_time(),
            diagnostics: json!(r.diagnostics),
        },
    )?;
    Ok(o)
}

#[derive(Debug, Serialize)]
pub struct EstimateOutput {
    pub theta_hat: Option<f64>,
    pub loglik: Option<f64>,
    pub transform: TransformFamily,
    pub scale: ScaleModel,
    pub bandwidth: f64,
    pub n: usize,
    pub version: &'static str,
}

pub fn estimate(sample: &Sample, model: &ModelSpec) -> CliResult<(EstimateOutput, Vec<(f64, Option<f64>)>)> {
    let h = model.smoother.resolve_bandwidth(&sample.x)?;
    let base = EstimateOutput {
        theta_hat: None,
        loglik: None,
        transform: model.family,
        scale: model.smoother.scale,
        bandwidth: h,
        n: sample.len(),
        version: VERSION,
    };
    if model.family.is_identity() {
        return Ok((base, Vec::new()));
    }
    model.validate()?;
    let obj = ProfileObjective::with_bandwidth(sample, model.family, &model.smoother, &model.profile, h)?;
    let theta = match model.fixed_theta {
        Some(t) => t,
        None => estimate_with(&obj, &model.profile)?.0,
    };
    let curve = model.profile.grid().into_iter().map(|t| (t, obj.loglik(t))).collect();
    Ok((
        EstimateOutput {
            theta_hat: Some(theta),
            loglik: obj.loglik(theta),
            ..base
        },
        curve,
    ))
}

pub fn cmd_estimate(a: &EstimateArgs, argv: &[String], out: &mut dyn std::io::Write) -> CliResult<EstimateOutput> {
    let started = unix_time();
    let sample = data_file(&a.data)?.load()?;
    let model = model_spec(&a.model);
    let (o, curve) = estimate(&sample, &model)?;
    if let Some(path) = &a.curve {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Input(e.to_string()))?;
        let io = |e: csv::Error| CliError::Input(e.to_string());
        w.write_record(["theta", "loglik"]).map_err(io)?;
        for (t, l) in &curve {
            w.write_record([t.to_string(), l.map(|v| v.to_string()).unwrap_or_default()]).map_err(io)?;
        }
        w.flush().map_err(io_err)?;
    }
    if a.output.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&o).expect("serializable")).map_err(io_err)?;
    } else {
        let theta = o.theta_hat.map_or_else(|| "n/a".to_string(), |t| format!("{t:.4}"));
        writeln!(out, "theta_hat {theta} ({:?}, {:?}, n = {}, h = {:.4})", o.transform, o.scale, o.n, o.bandwidth)
            .map_err(io_err)?;
    }
    write_manifest(
        a.output.manifest.as_deref(),
        &RunManifest {
            command: "estimate".into(),
            args: argv.to_vec(),
            config: json!({ "data": data_file(&a.data)?, "model": model }),
            seed: 0,
            version: VERSION,
            started,
            finished: unix_time(),
            diagnostics: json!({}),
        },
    )?;
    Ok(o)
}

pub fn error_model(a: &SimulateArgs) -> ErrorModel {
    match a.model {
        ModelArg::A => ErrorModel::A { eta: a.eta, nu: a.nu },
        ModelArg::B => ErrorModel::B { nu: a.nu },
        ModelArg::C => ErrorModel::C { kappa: a.kappa },
        ModelArg::D => ErrorModel::D { eta: a.eta, nu: a.nu },
    }
}

pub fn study_config(a: &SimulateArgs) -> CliResult<(StudyConfig, TestKind)> {
    let kind = match a.test {
        StudyTestArg::Independence => TestKind::Independence,
        StudyTestArg::Normality => TestKind::Normality,
        StudyTestArg::Symmetry => TestKind::Symmetry,
    };
    let stats = a
        .c
        .iter()
        .map(|&c| {
            Ok(match kind {
                TestKind::Independence => StatisticSpec::Independence(weight_spec(a.kernel, c, a.gamma)?),
                TestKind::Normality => StatisticSpec::Normality(univariate_weight(a.weight, c)?),
                TestKind::Symmetry => StatisticSpec::Symmetry(univariate_weight(a.weight, c)?),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut cfg = StudyConfig::new(error_model(a), a.n, a.replications, stats, a.seed);
    cfg.alpha = a.alpha;
    cfg.model = model_spec(&a.model_opts);
    cfg.bootstrap.smoothing_coef = a.an_coef;
    if let Some(b) = a.full {
        cfg.mode = StudyMode::Full { replications: b };
    }
    Ok((cfg, kind))
}

pub fn render_table(table: &StudyTable, format: FormatArg) -> String {
    match format {
        FormatArg::Text => table.to_text(),
        FormatArg::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(StudyTable::CSV_HEADER).expect("in-memory write");
            for rec in table.csv_records() {
                w.write_record(&rec).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
    }
}

pub fn cmd_simulate(a: &SimulateArgs, argv: &[String], out: &mut dyn std::io::Write) -> CliResult<Option<StudyTable>> {
    let started = unix_time();
    let (cfg, kind) = study_config(a)?;
    if let Some(path) = &a.emit_data {
        let mut rng = stream(a.seed, 0);
        let sample = gen_sample(&cfg.error_model, a.n, &mut rng)?;
        write_sample(path, &sample).map_err(io_err)?;
        return Ok(None);
    }
    let table = warp_speed_study(&cfg, kind)?;
    let text = render_table(&table, a.format);
    match &a.output {
        Some(p) => std::fs::write(p, &text).map_err(io_err)?,
        None => write!(out, "{text}").map_err(io_err)?,
    }
    write_manifest(
        a.manifest.as_deref(),
        &RunManifest {
            command: "simulate".into(),
            args: argv.to_vec(),
            config: json!({ "study": cfg, "kind": kind }),
            seed: a.seed,
            version: VERSION,
            started,
            finished: unix_time(),
            diagnostics: json!({
                "failures": table.failures,
                "attempted": table.attempted,
                "clip_events": table.clip_events,
                "refit_failures": table.redraws,
            }),
        },
    )?;
    Ok(Some(table))
}

/// Environment variable that caps the number of worker threads.
pub const THREADS_ENV: &str = "HETGOF_THREADS";

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if a pool already exists, which is harmless here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parse `args`, run the command and return the exit code.
pub fn main_with_args(args: Vec<OsString>, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32 {
    use clap::Parser;

    let args = match crate::config::expand(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let argv: Vec<String> = args.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Test(a) => cmd_test(a, &argv, out).map(|_| ()),
        Command::Normality(a) => cmd_univariate(TestKind::Normality, a, &argv, out).map(|_| ()),
        Command::Symmetry(a) => cmd_univariate(TestKind::Symmetry, a, &argv, out).map(|_| ()),
        Command::Estimate(a) => cmd_estimate(a, &argv, out).map(|_| ()),
        Command::Simulate(a) => cmd_simulate(a, &argv, out).map(|_| ()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}
