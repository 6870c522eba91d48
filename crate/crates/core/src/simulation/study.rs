//! Monte Carlo size and power studies.
//!
//! The default is the warp-speed design: each Monte Carlo sample gets a
//! single bootstrap resample, and the critical value is the pooled
//! `(1 - alpha)` quantile of the bootstrap statistics over all samples.
//! Every statistic configuration in a study is evaluated on the same samples
//! and the same bootstrap draws.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{gen_sample, ErrorModel};
use crate::error::{invalid, Error, Result};
use crate::model::ModelSpec;
use crate::resampling::{replicate, resampling_residuals, upper_quantile, BootstrapConfig, Scheme, StatisticSpec};
use crate::rng::{map_indexed, stream};
use crate::statistics::{KernelFamily, WeightFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    Independence,
    Normality,
    Symmetry,
}

impl TestKind {
    pub fn scheme(self) -> Scheme {
        match self {
            TestKind::Independence => Scheme::SmoothResidual,
            TestKind::Normality => Scheme::NormalErrors,
            TestKind::Symmetry => Scheme::Wild,
        }
    }

    fn accepts(self, spec: &StatisticSpec) -> bool {
        matches!(
            (self, spec),
            (TestKind::Independence, StatisticSpec::Independence(_))
                | (TestKind::Normality, StatisticSpec::Normality(_))
                | (TestKind::Symmetry, StatisticSpec::Symmetry(_))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyMode {
    /// One bootstrap resample per Monte Carlo sample.
    WarpSpeed,
    /// `replications` bootstrap resamples per Monte Carlo sample, each
    /// sample tested against its own critical value.
    Full { replications: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub error_model: ErrorModel,
    pub n: usize,
    /// Monte Carlo replications.
    pub replications: usize,
    pub alpha: f64,
    pub statistics: Vec<StatisticSpec>,
    pub seed: u64,
    pub model: ModelSpec,
    /// Bootstrap settings. The scheme follows the test kind; `replications`,
    /// `alpha` and `seed` are taken from the study.
    pub bootstrap: BootstrapConfig,
    pub mode: StudyMode,
}

impl StudyConfig {
    pub fn new(error_model: ErrorModel, n: usize, replications: usize, statistics: Vec<StatisticSpec>, seed: u64) -> Self {
        StudyConfig {
            error_model,
            n,
            replications,
            alpha: 0.05,
            statistics,
            seed,
            model: ModelSpec::yeo_johnson(),
            bootstrap: BootstrapConfig::default(),
            mode: StudyMode::WarpSpeed,
        }
    }

    pub fn validate(&self, kind: TestKind) -> Result<()> {
        self.error_model.validate()?;
        self.model.validate()?;
        if self.n < 50 {
            return Err(invalid(format!("study sample size must be at least 50, got {}", self.n)));
        }
        if self.replications < 100 {
            return Err(invalid(format!(
                "at least 100 Monte Carlo replications are required, got {}",
                self.replications
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.statistics.is_empty() {
            return Err(invalid("no statistic configured"));
        }
        if let Some(s) = self.statistics.iter().find(|s| !kind.accepts(s)) {
            return Err(invalid(format!("statistic {s:?} does not belong to a {kind:?} study")));
        }
        if let StudyMode::Full { replications: 0 } = self.mode {
            return Err(invalid("full bootstrap mode needs at least one resample"));
        }
        Ok(())
    }
}

/// One line of a study table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub model: String,
    pub params: String,
    pub n: usize,
    pub statistic_family: String,
    /// Kernel exponent; absent for univariate weights.
    pub gamma: Option<f64>,
    pub c: f64,
    /// Rejection rate in percent.
    pub rejection_rate: f64,
    #[serde(rename = "M")]
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub kind: TestKind,
    pub rows: Vec<StudyRow>,
    /// Critical value per statistic; for full-bootstrap studies the mean
    /// of the per-sample critical values.
    pub critical_values: Vec<f64>,
    pub failures: usize,
    pub attempted: usize,
    pub clip_events: usize,
    pub redraws: usize,
}

fn describe(spec: &StatisticSpec) -> (String, Option<f64>, f64) {
    let uni = |f: WeightFamily| match f {
        WeightFamily::GaussExp => "gauss-exp",
        WeightFamily::AbsExp => "abs-exp",
        WeightFamily::Cauchy => "cauchy",
    };
    match spec {
        StatisticSpec::Independence(w) => {
            let fam = match w.residual.family {
                KernelFamily::SphericalStable => "spherical-stable",
                KernelFamily::GeneralizedLaplace => "generalized-laplace",
            };
            (fam.to_string(), Some(w.residual.gamma), w.residual.c)
        }
        StatisticSpec::Normality(w) | StatisticSpec::Symmetry(w) => (uni(w.family).to_string(), None, w.c),
    }
}

impl StudyTable {
    pub const CSV_HEADER: [&'static str; 9] =
        ["model", "params", "n", "statistic_family", "gamma", "c", "rejection_rate", "M", "seed"];

    /// Rows as CSV records in [`Self::CSV_HEADER`] order.
    pub fn csv_records(&self) -> Vec<[String; 9]> {
        self.rows
            .iter()
            .map(|r| {
                [
                    r.model.clone(),
                    r.params.clone(),
                    r.n.to_string(),
                    r.statistic_family.clone(),
                    r.gamma.map(|g| g.to_string()).unwrap_or_default(),
                    r.c.to_string(),
                    format!("{:.1}", r.rejection_rate),
                    r.replications.to_string(),
                    r.seed.to_string(),
                ]
            })
            .collect()
    }

    /// Plain-text table, one row per statistic configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<5} {:<18} {:>5} {:<20} {:>5} {:>6} {:>8} {:>6}",
            "model", "params", "n", "weight", "gamma", "c", "reject%", "M"
        );
        for r in &self.rows {
            let gamma = r.gamma.map(|g| g.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<5} {:<18} {:>5} {:<20} {:>5} {:>6} {:>8.1} {:>6}",
                r.model, r.params, r.n, r.statistic_family, gamma, r.c, r.rejection_rate, r.replications
            );
        }
        if self.failures > 0 {
            let _ = writeln!(out, "failed replications: {} of {}", self.failures, self.attempted);
        }
        out
    }
}

struct Outcome {
    stats: Vec<f64>,
    boot: Vec<f64>,
    clips: usize,
    redraws: usize,
}

fn one_replication(config: &StudyConfig, boot_cfg: &BootstrapConfig, boot_count: usize, m: usize) -> Result<Outcome> {
    let mut rng = stream(config.seed, m as u64);
    let sample = gen_sample(&config.error_model, config.n, &mut rng)?;
    let fit = config.model.fit(&sample)?;
    let stats = config
        .statistics
        .iter()
        .map(|s| s.compute_raw(&fit.residuals, &sample.x).map(|v| v.max(0.0)))
        .collect::<Result<Vec<f64>>>()?;
    let resid = resampling_residuals(&fit, boot_cfg);
    let mut boot = Vec::with_capacity(boot_count * stats.len());
    let mut clips = 0;
    let mut redraws = 0;
    for _ in 0..boot_count {
        let rep = replicate(&fit, &sample, &config.model, &config.statistics, boot_cfg, &resid, &mut rng, &mut boot)?;
        clips += rep.clip_events;
        redraws += rep.failures;
    }
    for v in &mut boot {
        *v = v.max(0.0);
    }
    Ok(Outcome {
        stats,
        boot,
        clips,
        redraws,
    })
}

/// Run a size or power study and return one row per statistic.
///
/// Replications that fail are dropped and counted; more than 1% failures
/// abort the study.
pub fn warp_speed_study(config: &StudyConfig, kind: TestKind) -> Result<StudyTable> {
    config.validate(kind)?;
    let boot_cfg = BootstrapConfig {
        scheme: kind.scheme(),
        seed: config.seed,
        ..config.bootstrap
    };
    let boot_count = match config.mode {
        StudyMode::WarpSpeed => 1,
        StudyMode::Full { replications } => replications,
    };
    let results = map_indexed(config.replications, |m| one_replication(config, &boot_cfg, boot_count, m));
    let attempted = results.len();
    let outcomes: Vec<Outcome> = results.into_iter().filter_map(|r| r.ok()).collect();
    let failures = attempted - outcomes.len();
    if failures * 100 > attempted {
        return Err(Error::StudyAborted { failures, attempted });
    }
    let k = config.statistics.len();
    let mut rows = Vec::with_capacity(k);
    let mut critical_values = Vec::with_capacity(k);
    for (s, spec) in config.statistics.iter().enumerate() {
        let (rejections, cv) = match config.mode {
            StudyMode::WarpSpeed => {
                let pooled: Vec<f64> = outcomes.iter().map(|o| o.boot[s]).collect();
                let cv = upper_quantile(&pooled, config.alpha);
                (outcomes.iter().filter(|o| o.stats[s] > cv).count(), cv)
            }
            StudyMode::Full { .. } => {
                let mut hits = 0;
                let mut cv_sum = 0.0;
                for o in &outcomes {
                    let own: Vec<f64> = o.boot.iter().skip(s).step_by(k).copied().collect();
                    let cv = upper_quantile(&own, config.alpha);
                    cv_sum += cv;
                    hits += usize::from(o.stats[s] > cv);
                }
                (hits, cv_sum / outcomes.len() as f64)
            }
        };
        critical_values.push(cv);
        let (family, gamma, c) = describe(spec);
        rows.push(StudyRow {
            model: config.error_model.label().to_string(),
            params: config.error_model.params(),
            n: config.n,
            statistic_family: family,
            gamma,
            c,
            rejection_rate: 100.0 * rejections as f64 / outcomes.len() as f64,
            replications: config.replications,
            seed: config.seed,
        });
    }
    Ok(StudyTable {
        kind,
        rows,
        critical_values,
        failures,
        attempted,
        clip_events: outcomes.iter().map(|o| o.clips).sum(),
        redraws: outcomes.iter().map(|o| o.redraws).sum(),
    })
}
