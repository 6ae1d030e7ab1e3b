use std::fs;
use std::io::{self, BufReader, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use avt_core::harness::mle_tolerance;
use avt_core::{
    density_table, log_likelihood, maximize_loglik, render_raw_csv, render_report, run_estimator, run_experiment_with,
    simulate_sample, AdjustmentMode, Algorithm, Execution, ExperimentConfig, ExperimentReport, MixtureParams, Preset,
    ReportFormat, RunConfig, Sample, SeedSpec, Termination, Tolerance,
};
use serde::Serialize;

use crate::args::{EstimateArgs, EstimatorArg, ExperimentArgs, FormatArg, ModeArg, ReportArgs, SimulateArgs};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

const CONFIG_BEGIN: &str = "# resolved configuration";
const CONFIG_END: &str = "# end of resolved configuration";

fn params_from(means: &[f64], weights: Option<&[f64]>, what: &str) -> Result<MixtureParams> {
    let k = means.len();
    let weights = match weights {
        Some(w) if w.len() != k => {
            return Err(CliError::Usage(format!("{what} has {k} values but --weights has {}", w.len())));
        }
        Some(w) => w.to_vec(),
        None => vec![1.0 / k as f64; k],
    };
    Ok(MixtureParams::new(means.to_vec(), weights)?)
}

fn echo<T: Serialize>(config: &T) -> Result<String> {
    let text = toml::to_string(config).map_err(|e| CliError::Usage(format!("cannot serialise configuration: {e}")))?;
    eprintln!("{CONFIG_BEGIN}\n{}{CONFIG_END}", text);
    Ok(text)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn write_or_stdout(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, contents),
        None => io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write to standard output: {e}"))),
    }
}

#[derive(Serialize)]
struct SimulateEcho<'a> {
    means: &'a [f64],
    weights: &'a [f64],
    n: usize,
    seed: u64,
    replication: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<&'a Path>,
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let params = params_from(&args.means, args.weights.as_deref(), "--means")?;
    echo(&SimulateEcho {
        means: params.means(),
        weights: params.weights(),
        n: args.n,
        seed: args.seed,
        replication: args.replication,
        out: args.out.as_deref(),
    })?;
    let sample = simulate_sample(&params, args.n, SeedSpec::new(args.seed, args.replication));
    let mut buf = Vec::new();
    sample.write_csv(&mut buf).expect("writing to memory");
    write_or_stdout(args.out.as_deref(), std::str::from_utf8(&buf).expect("ascii output"))?;
    if let Some(path) = &args.density {
        let lo = params.means().iter().cloned().fold(f64::INFINITY, f64::min) - 4.0;
        let hi = params.means().iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 4.0;
        write_file(path, &density_table(&params, lo, hi, args.density_points)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EstimateEcho<'a> {
    algorithm: &'static str,
    init: &'a [f64],
    weights: &'a [f64],
    weights_known: bool,
    tol: f64,
    max_iter: usize,
    mode: &'static str,
    input: &'a Path,
}

#[derive(Serialize)]
struct EstimateOutput {
    algorithm: &'static str,
    termination: &'static str,
    iterations: usize,
    means: Vec<f64>,
    weights: Vec<f64>,
    log_likelihood: f64,
    total_seconds: f64,
}

fn read_sample(path: &Path) -> Result<Sample> {
    let file = fs::File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    Sample::read_csv(BufReader::new(file)).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn estimate(args: EstimateArgs) -> Result<()> {
    let init = params_from(&args.init, args.weights.as_deref(), "--init")?;
    let (label, algorithm) = match args.algorithm {
        EstimatorArg::Vt => ("vt", Some(Algorithm::Vt)),
        EstimatorArg::Va1 => ("va1", Some(Algorithm::Va1)),
        EstimatorArg::Va2 => ("va2", Some(Algorithm::Va2)),
        EstimatorArg::Em => ("em", Some(Algorithm::Em)),
        EstimatorArg::Mle => ("mle", None),
    };
    if algorithm == Some(Algorithm::Va2) && init.components() != 2 {
        return Err(avt_core::Error::Va2NeedsTwoComponents(init.components()).into());
    }
    let mode = match args.mode {
        ModeArg::Exact => AdjustmentMode::Exact,
        ModeArg::Isolated => AdjustmentMode::Isolated,
    };
    // The likelihood maximiser reads --tol as its simplex tolerance and
    // --max-iter as its evaluation budget.
    let reference = mle_tolerance();
    let (tol, max_iter) = match algorithm {
        Some(_) => (args.tol.unwrap_or(1e-3), args.max_iter.unwrap_or(1000)),
        None => (args.tol.unwrap_or(reference.abs_tol()), args.max_iter.unwrap_or(reference.max_eval())),
    };
    echo(&EstimateEcho {
        algorithm: label,
        init: init.means(),
        weights: init.weights(),
        weights_known: args.weights_known,
        tol,
        max_iter,
        mode: match mode {
            AdjustmentMode::Exact => "exact",
            AdjustmentMode::Isolated => "isolated",
        },
        input: &args.input,
    })?;
    let sample = read_sample(&args.input)?;

    let (output, converged) = match algorithm {
        Some(alg) => {
            let config =
                RunConfig { step_tol: tol, max_iter, weights_known: args.weights_known, mode, ..RunConfig::default() };
            let r = run_estimator(alg, &init, &sample, &config)?;
            let termination = match r.terminated {
                Termination::Converged => "converged",
                Termination::MaxIter => "max_iter",
                Termination::Degenerate => "degenerate",
            };
            let ll = log_likelihood(&r.final_params, &sample)?;
            let converged = r.terminated == Termination::Converged;
            let out = EstimateOutput {
                algorithm: label,
                termination,
                iterations: r.iterations,
                means: r.final_params.means().to_vec(),
                weights: r.final_params.weights().to_vec(),
                log_likelihood: ll,
                total_seconds: r.total_seconds,
            };
            (out, converged)
        }
        None => {
            let tolerance = Tolerance::new(tol, 0.0, max_iter)?;
            let start = std::time::Instant::now();
            let fit = maximize_loglik(&sample, &init, args.weights_known, &tolerance)?;
            let out = EstimateOutput {
                algorithm: label,
                termination: if fit.converged { "converged" } else { "non_converged" },
                iterations: fit.evaluations,
                means: fit.params.means().to_vec(),
                weights: fit.params.weights().to_vec(),
                log_likelihood: fit.log_likelihood,
                total_seconds: start.elapsed().as_secs_f64(),
            };
            (out, fit.converged)
        }
    };
    let text = toml::to_string(&output).map_err(|e| CliError::Usage(e.to_string()))?;
    write_or_stdout(None, &text)?;
    if !converged {
        let msg = format!("{label} terminated as {}", output.termination);
        if args.strict {
            return Err(CliError::Numerical(msg));
        }
        eprintln!("warning: {msg}");
    }
    Ok(())
}

fn resolve_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut config = match (&args.preset, &args.config) {
        (Some(name), None) => {
            let preset: Preset = name.parse()?;
            let seed = args
                .seed
                .ok_or_else(|| CliError::Usage("--seed is required with --preset (seeds are never implicit)".into()))?;
            ExperimentConfig::preset(preset, seed)
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        _ => return Err(CliError::Usage("exactly one of --preset or --config is required".into())),
    };
    if let Some(r) = args.replications {
        config.replications = r;
    }
    if let Some(n) = args.sample_size {
        config.sample_size = n;
    }
    if let Some(s) = args.seed {
        config.base_seed = s;
    }
    if let Some(list) = &args.algorithms {
        config.algorithms = list.iter().map(|s| s.parse::<Algorithm>()).collect::<std::result::Result<_, _>>()?;
    }
    if args.no_mle {
        config.include_mle = false;
    }
    if args.no_timing {
        config.timing = false;
    }
    config.validate()?;
    Ok(config)
}

fn format_for(path: Option<&Path>, explicit: Option<FormatArg>) -> ReportFormat {
    if let Some(f) = explicit {
        return report_format(f);
    }
    match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => ReportFormat::Json,
        Some("csv") => ReportFormat::Csv,
        _ => ReportFormat::Markdown,
    }
}

fn report_format(f: FormatArg) -> ReportFormat {
    match f {
        FormatArg::Markdown => ReportFormat::Markdown,
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    }
}

pub fn experiment(args: ExperimentArgs) -> Result<()> {
    let config = resolve_config(&args)?;
    let text = echo(&config)?;
    if let Some(path) = &args.save_config {
        write_file(path, &text)?;
    }
    let execution = match args.workers {
        Some(0) => return Err(CliError::Usage("--workers must be at least 1".into())),
        Some(n) => Execution::Workers(n),
        None => Execution::Parallel,
    };

    let done = AtomicUsize::new(0);
    let total = config.replications;
    let counter = |_: usize| {
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        eprint!("\rreplication {k}/{total}");
        if k == total {
            eprintln!();
        }
    };
    let progress: Option<&(dyn Fn(usize) + Sync)> = if io::stderr().is_terminal() { Some(&counter) } else { None };
    let report = run_experiment_with(&config, execution, progress)?;

    let main_format = format_for(args.out.as_deref(), args.format);
    write_or_stdout(args.out.as_deref(), &render_report(&report, main_format))?;
    if let Some(p) = &args.csv {
        write_file(p, &render_report(&report, ReportFormat::Csv))?;
    }
    if let Some(p) = &args.markdown {
        write_file(p, &render_report(&report, ReportFormat::Markdown))?;
    }
    if let Some(p) = &args.raw {
        write_file(p, &render_raw_csv(&report))?;
    }
    Ok(())
}

pub fn report(args: ReportArgs) -> Result<()> {
    let path: &PathBuf = &args.input;
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let report: ExperimentReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: not a JSON report: {e}", path.display())))?;
    write_or_stdout(args.out.as_deref(), &render_report(&report, report_format(args.format)))
}
