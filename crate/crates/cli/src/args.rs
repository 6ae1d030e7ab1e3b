use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "avt", version, about = "Viterbi training, adjusted Viterbi training and EM for Gaussian mixtures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a seeded sample from a mixture and write it as one value per line.
    Simulate(SimulateArgs),
    /// Fit one estimator to a sample file.
    Estimate(EstimateArgs),
    /// Run a replicated experiment from a preset or a config file.
    Experiment(ExperimentArgs),
    /// Re-render a JSON experiment report.
    Report(ReportArgs),
}

/// Comma-separated decimals, e.g. `-2.5,0`.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|_| format!("{t:?} is not a number"))
        })
        .collect()
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub means: ::std::vec::Vec<f64>,
    /// Defaults to equal weights.
    #[arg(long, value_parser = parse_list)]
    pub weights: Option<::std::vec::Vec<f64>>,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Replication index; selects an independent stream under the same seed.
    #[arg(long, default_value_t = 0)]
    pub replication: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the mixture density on a grid (`x density` per line).
    #[arg(long)]
    pub density: Option<PathBuf>,
    #[arg(long, default_value_t = 401)]
    pub density_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Vt,
    Va1,
    Va2,
    Em,
    Mle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    Isolated,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, value_enum)]
    pub algorithm: EstimatorArg,
    /// Starting means.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub init: ::std::vec::Vec<f64>,
    /// Starting (or known) weights; defaults to equal weights.
    #[arg(long, value_parser = parse_list)]
    pub weights: Option<::std::vec::Vec<f64>>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub weights_known: bool,
    /// Stop once consecutive means move less than this (L2); default 0.001.
    /// For `mle`, the simplex tolerance (default 1e-8).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap, default 1000. For `mle`, the evaluation budget (default 20000).
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    /// Sample file, one value per line.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Exit with status 2 unless the run converged.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// One of table1 .. table6.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// TOML experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub sample_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Restrict to these algorithms (comma-separated: vt,va1,va2,em).
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,
    /// Skip the MLE reference column.
    #[arg(long)]
    pub no_mle: bool,
    /// Leave out wall-clock columns so reports are byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
    /// Report file; format from --format or the extension, markdown on stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Additional CSV report.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Additional markdown report.
    #[arg(long)]
    pub markdown: Option<PathBuf>,
    /// Per-replication estimates as CSV.
    #[arg(long)]
    pub raw: Option<PathBuf>,
    /// Write the resolved configuration as TOML.
    #[arg(long)]
    pub save_config: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON report written by `experiment`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
