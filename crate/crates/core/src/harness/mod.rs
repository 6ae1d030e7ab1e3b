//! Replicated Monte-Carlo comparison of the estimators.
//!
//! Replication i always works on `simulate_sample(truth, n, (seed, i))`, so
//! results do not depend on how replications are scheduled across threads.

mod report;

pub use report::{density_table, error_norms, render_raw_csv, render_report, ReportFormat, Statistic, Summary};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjustment::IsoPartitionFamily;
use crate::error::{Error, Result};
use crate::estimators::{run_estimator, Algorithm, RunConfig, Termination};
use crate::model::{simulate_sample, MixtureParams, SeedSpec};
use crate::numerics::{maximize_loglik, Tolerance};
use crate::partition::voronoi_partition;

/// Starting point of every algorithm in an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "lowercase")]
pub enum InitRegime {
    /// Any fixed starting means.
    Arbitrary { means: Vec<f64> },
    /// Start at the true means.
    True,
    /// Starting means sharing the true decision boundary.
    Boundary { means: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub replications: usize,
    pub sample_size: usize,
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub include_mle: bool,
    pub weights_known: bool,
    /// Starting weights when weights are estimated; defaults to the true ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_weights: Option<Vec<f64>>,
    /// Record wall-clock columns. Off makes reports byte-reproducible.
    #[serde(default = "default_true")]
    pub timing: bool,
    pub truth: MixtureParams,
    pub init: InitRegime,
    #[serde(default)]
    pub run: RunConfig,
}

fn default_true() -> bool {
    true
}

/// Tolerance of the reference likelihood maximiser.
pub fn mle_tolerance() -> Tolerance {
    Tolerance::new(1e-8, 0.0, 20_000).expect("valid constant tolerance")
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if self.sample_size == 0 {
            return Err(Error::InvalidConfig("sample_size must be >= 1".into()));
        }
        self.run.validate()?;
        let k = self.truth.components();
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(Error::InvalidConfig(format!("algorithm {a} listed twice")));
            }
        }
        if self.algorithms.contains(&Algorithm::Va2) && k != 2 {
            return Err(Error::Va2NeedsTwoComponents(k));
        }
        if let Some(w) = &self.init_weights {
            if w.len() != k {
                return Err(Error::ComponentMismatch(k, w.len()));
            }
        }
        let init = self.initial_params()?;
        if let InitRegime::Boundary { .. } = self.init {
            let truth = voronoi_partition(&self.truth)?;
            let start = voronoi_partition(&init)?;
            let same = truth.labels() == start.labels()
                && truth.breakpoints().iter().zip(start.breakpoints()).all(|(a, b)| (a - b).abs() <= 1e-3);
            if !same {
                return Err(Error::InvalidConfig(format!(
                    "boundary init {:?} does not reproduce the true decision boundaries {:?}",
                    init.means(),
                    truth.breakpoints()
                )));
            }
        }
        Ok(())
    }

    /// Weights used at the start of every run.
    pub fn start_weights(&self) -> Vec<f64> {
        match (&self.init_weights, self.weights_known) {
            (Some(w), false) => w.clone(),
            _ => self.truth.weights().to_vec(),
        }
    }

    pub fn initial_params(&self) -> Result<MixtureParams> {
        let means = match &self.init {
            InitRegime::True => self.truth.means().to_vec(),
            InitRegime::Arbitrary { means } | InitRegime::Boundary { means } => means.clone(),
        };
        if means.len() != self.truth.components() {
            return Err(Error::ComponentMismatch(self.truth.components(), means.len()));
        }
        MixtureParams::new(means, self.start_weights())
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig { weights_known: self.weights_known, ..self.run }
    }

    pub fn preset(preset: Preset, base_seed: u64) -> Self {
        let truth = MixtureParams::new(vec![-2.5, 0.0], vec![0.7, 0.3]).expect("valid preset");
        let init = match preset.regime_index() {
            0 => InitRegime::Arbitrary { means: vec![-1.0, 2.0] },
            1 => InitRegime::True,
            _ => InitRegime::Boundary { means: boundary_preset_means(&truth) },
        };
        let weights_known = preset.weights_known();
        Self {
            label: Some(preset.title().to_string()),
            replications: 1000,
            sample_size: 1000,
            base_seed,
            algorithms: Algorithm::ALL.to_vec(),
            include_mle: true,
            weights_known,
            init_weights: (!weights_known).then(|| truth.weights().to_vec()),
            timing: true,
            truth,
            init,
            run: RunConfig::default(),
        }
    }
}

/// The member of the true boundary's iso-partition family with means four
/// units apart: (-3.122905…, 0.877094…).
fn boundary_preset_means(truth: &MixtureParams) -> Vec<f64> {
    let partition = voronoi_partition(truth).expect("valid preset");
    let w = truth.weights();
    let family = IsoPartitionFamily::new(partition.breakpoints()[0], w[0], w[1]).expect("valid preset");
    let (m1, m2) = family.means(2.0);
    vec![m1, m2]
}

/// The six simulation-study configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Table1,
    Table2,
    Table3,
    Table4,
    Table5,
    Table6,
}

impl Preset {
    pub const ALL: [Preset; 6] =
        [Preset::Table1, Preset::Table2, Preset::Table3, Preset::Table4, Preset::Table5, Preset::Table6];

    fn regime_index(self) -> usize {
        match self {
            Preset::Table1 | Preset::Table4 => 0,
            Preset::Table2 | Preset::Table5 => 1,
            Preset::Table3 | Preset::Table6 => 2,
        }
    }

    pub fn weights_known(self) -> bool {
        matches!(self, Preset::Table1 | Preset::Table2 | Preset::Table3)
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
            Preset::Table3 => "table3",
            Preset::Table4 => "table4",
            Preset::Table5 => "table5",
            Preset::Table6 => "table6",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Preset::Table1 => "Table 1: arbitrary initial guess (-1, 2), known weights",
            Preset::Table2 => "Table 2: correct initial guess, known weights",
            Preset::Table3 => "Table 3: correct decision boundary, known weights",
            Preset::Table4 => "Table 4: unknown weights, arbitrary initial guess (-1, 2)",
            Preset::Table5 => "Table 5: unknown weights, correct initial guess",
            Preset::Table6 => "Table 6: unknown weights, correct decision boundary",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset {s:?}")))
    }
}

/// A report column: one of the iterative algorithms or the MLE reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Column {
    Algorithm(Algorithm),
    Mle,
}

impl Column {
    pub fn label(&self) -> &'static str {
        match self {
            Column::Algorithm(a) => a.label(),
            Column::Mle => "MLE",
        }
    }
}

/// Outcome of one column on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub replication: usize,
    pub column: Column,
    pub sample_checksum: u64,
    pub params: MixtureParams,
    pub l1: f64,
    pub l2: f64,
    /// Absent for the MLE column.
    pub iterations: Option<usize>,
    pub per_iter_ms: Option<f64>,
    pub total_ms: Option<f64>,
    /// False for MAX_ITER / degenerate runs and non-converged MLE fits.
    pub converged: bool,
}

/// How replications are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    /// `None` uses the global rayon pool.
    #[default]
    Parallel,
    Workers(usize),
}

/// Per-column mean ± std of every statistic over all replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub statistics: Vec<Statistic>,
    pub columns: Vec<ColumnSummary>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub column: Column,
    /// Aligned with [`ExperimentReport::statistics`]; `None` where the
    /// statistic does not apply (iterations and times of the MLE).
    pub values: Vec<Option<Summary>>,
    pub failures: usize,
}

impl ExperimentReport {
    pub fn column(&self, label: &str) -> Option<&ColumnSummary> {
        self.columns.iter().find(|c| c.column.label() == label)
    }

    /// Summary of `stat` in the column labelled `label`.
    pub fn summary(&self, label: &str, stat: Statistic) -> Option<Summary> {
        let idx = self.statistics.iter().position(|s| *s == stat)?;
        self.column(label)?.values[idx]
    }

    pub fn records_for(&self, label: &str) -> impl Iterator<Item = &RunRecord> + '_ {
        let label = label.to_string();
        self.records.iter().filter(move |r| r.column.label() == label)
    }
}

pub type Progress<'a> = &'a (dyn Fn(usize) + Sync);

/// Runs with the global thread pool and no progress reporting.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(config, Execution::Parallel, None)
}

pub fn run_experiment_with(
    config: &ExperimentConfig,
    execution: Execution,
    progress: Option<Progress<'_>>,
) -> Result<ExperimentReport> {
    config.validate()?;
    let mle = if config.include_mle { Some(mle_records(config, execution)?) } else { None };
    run_with_mle(config, execution, progress, mle)
}

/// Runs several experiments, computing the MLE reference once for every
/// group of configurations that share their samples.
pub fn run_suite(
    configs: &[ExperimentConfig],
    execution: Execution,
    progress: Option<Progress<'_>>,
) -> Result<Vec<ExperimentReport>> {
    let mut cache: HashMap<String, Vec<RunRecord>> = HashMap::new();
    let mut reports = Vec::with_capacity(configs.len());
    for config in configs {
        config.validate()?;
        let mle = if config.include_mle {
            let key = mle_key(config);
            if !cache.contains_key(&key) {
                cache.insert(key.clone(), mle_records(config, execution)?);
            }
            Some(cache[&key].clone())
        } else {
            None
        };
        reports.push(run_with_mle(config, execution, progress, mle)?);
    }
    Ok(reports)
}

fn mle_key(config: &ExperimentConfig) -> String {
    format!(
        "{:?}|{}|{}|{}|{}",
        config.truth, config.replications, config.sample_size, config.base_seed, config.weights_known
    )
}

fn schedule<T, F>(count: usize, execution: Execution, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    match execution {
        Execution::Serial => (0..count).map(work).collect(),
        Execution::Parallel => (0..count).into_par_iter().map(work).collect(),
        Execution::Workers(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| (0..count).into_par_iter().map(work).collect())
        }
    }
}

/// MLE fits, initialised at the truth so the reference does not depend on
/// the regime.
fn mle_records(config: &ExperimentConfig, execution: Execution) -> Result<Vec<RunRecord>> {
    let tol = mle_tolerance();
    schedule(config.replications, execution, |i| {
        let sample = simulate_sample(&config.truth, config.sample_size, SeedSpec::new(config.base_seed, i as u64));
        let fit = maximize_loglik(&sample, &config.truth, config.weights_known, &tol)?;
        let (l1, l2) = error_norms(&fit.params, &config.truth)?;
        Ok(RunRecord {
            replication: i,
            column: Column::Mle,
            sample_checksum: sample.checksum(),
            params: fit.params,
            l1,
            l2,
            iterations: None,
            per_iter_ms: None,
            total_ms: None,
            converged: fit.converged,
        })
    })
}

fn run_with_mle(
    config: &ExperimentConfig,
    execution: Execution,
    progress: Option<Progress<'_>>,
    mle: Option<Vec<RunRecord>>,
) -> Result<ExperimentReport> {
    let init = config.initial_params()?;
    let run = config.run_config();
    let per_replication = schedule(config.replications, execution, |i| {
        let sample = simulate_sample(&config.truth, config.sample_size, SeedSpec::new(config.base_seed, i as u64));
        let checksum = sample.checksum();
        let mut records = Vec::with_capacity(config.algorithms.len());
        for &algorithm in &config.algorithms {
            let result = run_estimator(algorithm, &init, &sample, &run)?;
            let (l1, l2) = error_norms(&result.final_params, &config.truth)?;
            let (t, total) = if config.timing {
                (Some(result.per_iter_seconds * 1e3), Some(result.total_seconds * 1e3))
            } else {
                (None, None)
            };
            records.push(RunRecord {
                replication: i,
                column: Column::Algorithm(algorithm),
                sample_checksum: checksum,
                params: result.final_params,
                l1,
                l2,
                iterations: Some(result.iterations),
                per_iter_ms: t,
                total_ms: total,
                converged: result.terminated == Termination::Converged,
            });
        }
        if let Some(p) = progress {
            p(i);
        }
        Ok(records)
    })?;

    let mut records: Vec<RunRecord> = per_replication.into_iter().flatten().collect();
    if let Some(mle) = mle {
        records.extend(mle);
    }
    Ok(report::aggregate(config, records))
}
