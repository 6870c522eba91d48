use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "hetgof",
    version,
    about = "Goodness-of-fit tests for heteroskedastic transformation models",
    args_override_self = true
)]
pub struct Cli {
    /// Read additional `key = value` options from this file. Command-line
    /// flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test independence of the errors and the covariates.
    #[command(visible_alias = "gof")]
    Test(TestArgs),
    /// Test whether the errors are normal.
    Normality(UnivariateArgs),
    /// Test whether the errors are symmetric.
    Symmetry(UnivariateArgs),
    /// Estimate the transformation parameter.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo size or power study.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with the response and covariate columns.
    pub data: PathBuf,
    /// Response column, by header name or zero-based index.
    #[arg(long, default_value = "0")]
    pub response: String,
    /// Covariate columns, comma separated. Defaults to every other column.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Field delimiter; `tab` and `space` (runs of blanks) are accepted.
    #[arg(long, default_value = ",")]
    pub delimiter: String,
    /// The first line holds data, not column names.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    None,
    YeoJohnson,
    BoxCox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmoothingKernelArg {
    Gaussian,
    Epanechnikov,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "yeo-johnson")]
    pub transform: TransformArg,
    /// Use a constant scale instead of a nonparametric scale function.
    #[arg(long)]
    pub homoskedastic: bool,
    /// Smoothing bandwidth; rule of thumb when omitted.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub smoothing_kernel: SmoothingKernelArg,
    /// Leave each point out of its own smoothing estimate.
    #[arg(long)]
    pub leave_one_out: bool,
    /// Fix the transformation parameter instead of estimating it.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub theta_min: f64,
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 61)]
    pub grid_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClipArg {
    Clamp,
    Resample,
}

#[derive(Debug, Clone, Args)]
pub struct BootstrapArgs {
    /// Bootstrap replications.
    #[arg(long = "B", default_value_t = 500)]
    pub replications: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Coefficient of the residual smoothing `a_n = coef * n^(-1/4)`.
    #[arg(long, default_value_t = 0.5)]
    pub an_coef: f64,
    #[arg(long, value_enum, default_value = "clamp")]
    pub clip: ClipArg,
    /// Redraws per error under `--clip resample`.
    #[arg(long, default_value_t = 100)]
    pub max_tries: usize,
    /// Resample the raw residuals instead of standardized ones.
    #[arg(long)]
    pub no_standardize: bool,
    /// Select a new bandwidth on every bootstrap sample.
    #[arg(long)]
    pub reselect_bandwidth: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    /// `exp(-c u^2)`
    Gauss,
    /// `exp(-c u^gamma)`
    Stable,
    /// `(1 + u^2 / c)^(-gamma)`
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    GaussExp,
    AbsExp,
    Cauchy,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Print the result as JSON.
    #[arg(long)]
    pub json: bool,
    /// Write a run manifest to this path.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub bootstrap: BootstrapArgs,
    #[arg(long, value_enum, default_value = "gauss")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct UnivariateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub bootstrap: BootstrapArgs,
    #[arg(long, value_enum, default_value = "gauss-exp")]
    pub weight: WeightArg,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Write the profile likelihood on the search grid as CSV.
    #[arg(long, value_name = "FILE")]
    pub curve: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    A,
    B,
    C,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyTestArg {
    Independence,
    Normality,
    Symmetry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, ignore_case = true)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub eta: f64,
    /// Degrees of freedom; `inf` for the normal limit.
    #[arg(long, default_value = "inf")]
    pub nu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Monte Carlo replications.
    #[arg(long = "M", default_value_t = 1000)]
    pub replications: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Master seed. Required so that studies are reproducible.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "independence")]
    pub test: StudyTestArg,
    /// Kernel for independence studies.
    #[arg(long, value_enum, default_value = "gauss")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
    /// Weight for normality and symmetry studies.
    #[arg(long, value_enum, default_value = "gauss-exp")]
    pub weight: WeightArg,
    /// Tuning parameters, comma separated; one table row each.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub c: Vec<f64>,
    /// Use this many bootstrap resamples per sample instead of the
    /// warp-speed design.
    #[arg(long, value_name = "B")]
    pub full: Option<usize>,
    #[command(flatten)]
    pub model_opts: ModelArgs,
    #[arg(long, default_value_t = 0.5)]
    pub an_coef: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Write the table here instead of standard output.
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Write one generated sample as CSV and exit.
    #[arg(long, value_name = "FILE")]
    pub emit_data: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
}
