use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Column, ColumnSummary, ExperimentConfig, ExperimentReport, RunRecord};
use crate::error::{Error, Result};
use crate::model::{format_decimal17, mixture_pdf, MixtureParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Estimated mean of a component (0-based).
    Theta(usize),
    /// Estimated weight of a component (0-based).
    Weight(usize),
    L1Error,
    L2Error,
    Iterations,
    PerIterMs,
    TotalMs,
}

impl Statistic {
    fn csv_name(&self, weights: usize) -> String {
        match self {
            Statistic::Theta(l) => format!("theta_{}", l + 1),
            Statistic::Weight(_) if weights == 1 => "p".into(),
            Statistic::Weight(l) => format!("p_{}", l + 1),
            Statistic::L1Error => "l1_error".into(),
            Statistic::L2Error => "l2_error".into(),
            Statistic::Iterations => "iterations".into(),
            Statistic::PerIterMs => "per_iter_ms".into(),
            Statistic::TotalMs => "total_ms".into(),
        }
    }

    fn markdown_name(&self, weights: usize) -> String {
        match self {
            Statistic::Theta(l) => format!("θ{}", l + 1),
            Statistic::Weight(_) if weights == 1 => "p".into(),
            Statistic::Weight(l) => format!("p{}", l + 1),
            Statistic::L1Error => "‖θ−θ*‖₁".into(),
            Statistic::L2Error => "‖θ−θ*‖₂".into(),
            Statistic::Iterations => "n".into(),
            Statistic::PerIterMs => "t (ms)".into(),
            Statistic::TotalMs => "T (ms)".into(),
        }
    }

    fn decimals(&self) -> usize {
        match self {
            Statistic::Iterations | Statistic::PerIterMs | Statistic::TotalMs => 2,
            _ => 4,
        }
    }

    fn extract(&self, r: &RunRecord) -> Option<f64> {
        match *self {
            Statistic::Theta(l) => Some(r.params.means()[l]),
            Statistic::Weight(l) => Some(r.params.weights()[l]),
            Statistic::L1Error => Some(r.l1),
            Statistic::L2Error => Some(r.l2),
            Statistic::Iterations => r.iterations.map(|n| n as f64),
            Statistic::PerIterMs => r.per_iter_ms,
            Statistic::TotalMs => r.total_ms,
        }
    }
}

/// Sample mean and standard deviation (n - 1 denominator; 0 for one value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(Self { mean, std })
    }
}

/// L1 and L2 distance between the estimated and true means.
pub fn error_norms(estimate: &MixtureParams, truth: &MixtureParams) -> Result<(f64, f64)> {
    if estimate.components() != truth.components() {
        return Err(Error::ComponentMismatch(truth.components(), estimate.components()));
    }
    let d = estimate.means().iter().zip(truth.means()).map(|(a, b)| a - b);
    let (l1, sq) = d.fold((0.0, 0.0), |(l1, sq), x| (l1 + x.abs(), sq + x * x));
    Ok((l1, sq.sqrt()))
}

fn statistics(config: &ExperimentConfig) -> Vec<Statistic> {
    let k = config.truth.components();
    let mut stats: Vec<Statistic> = (0..k).map(Statistic::Theta).collect();
    if !config.weights_known {
        // with two components the second weight is redundant
        let shown = if k == 2 { 1 } else { k };
        stats.extend((0..shown).map(Statistic::Weight));
    }
    stats.extend([Statistic::L1Error, Statistic::L2Error, Statistic::Iterations]);
    if config.timing {
        stats.extend([Statistic::PerIterMs, Statistic::TotalMs]);
    }
    stats
}

pub(super) fn aggregate(config: &ExperimentConfig, records: Vec<RunRecord>) -> ExperimentReport {
    let stats = statistics(config);
    let mut columns: Vec<Column> = config.algorithms.iter().map(|&a| Column::Algorithm(a)).collect();
    if config.include_mle {
        columns.push(Column::Mle);
    }
    let columns = columns
        .into_iter()
        .map(|column| {
            let rows: Vec<&RunRecord> = records.iter().filter(|r| r.column == column).collect();
            let values = stats
                .iter()
                .map(|s| {
                    let v: Option<Vec<f64>> = rows.iter().map(|r| s.extract(r)).collect();
                    v.and_then(|v| Summary::of(&v))
                })
                .collect();
            let failures = rows.iter().filter(|r| !r.converged).count();
            ColumnSummary { column, values, failures }
        })
        .collect();
    ExperimentReport { config: config.clone(), statistics: stats, columns, records }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Markdown,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::InvalidConfig(format!("unknown report format {s:?}"))),
        }
    }
}

fn weight_rows(report: &ExperimentReport) -> usize {
    report.statistics.iter().filter(|s| matches!(s, Statistic::Weight(_))).count()
}

fn cell(summary: Option<Summary>, decimals: usize) -> String {
    match summary {
        Some(s) => format!("{:.*}±{:.*}", decimals, s.mean, decimals, s.std),
        None => "N/A".into(),
    }
}

pub fn render_report(report: &ExperimentReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => render_markdown(report),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Json => serde_json_string(report),
    }
}

fn serde_json_string(report: &ExperimentReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialises");
    s.push('\n');
    s
}

fn render_markdown(report: &ExperimentReport) -> String {
    let c = &report.config;
    let w = weight_rows(report);
    let mut out = String::new();
    if let Some(label) = &c.label {
        let _ = writeln!(out, "### {label}\n");
    }
    let _ = writeln!(
        out,
        "R = {}, n = {}, seed = {}, weights {}\n",
        c.replications,
        c.sample_size,
        c.base_seed,
        if c.weights_known { "known" } else { "estimated" }
    );
    out.push_str("| |");
    for col in &report.columns {
        let _ = write!(out, " {} |", col.column.label());
    }
    out.push_str("\n|---|");
    for _ in &report.columns {
        out.push_str("---|");
    }
    out.push('\n');
    if report.columns.is_empty() {
        return out;
    }
    for (i, stat) in report.statistics.iter().enumerate() {
        let _ = write!(out, "| {} |", stat.markdown_name(w));
        for col in &report.columns {
            let _ = write!(out, " {} |", cell(col.values[i], stat.decimals()));
        }
        out.push('\n');
    }
    out.push_str("| failures |");
    for col in &report.columns {
        let _ = write!(out, " {} |", col.failures);
    }
    out.push('\n');
    out
}

fn render_csv(report: &ExperimentReport) -> String {
    let w = weight_rows(report);
    let mut out = String::from("statistic");
    for col in &report.columns {
        let l = col.column.label();
        let _ = write!(out, ",{l}_mean,{l}_std,{l}");
    }
    out.push('\n');
    for (i, stat) in report.statistics.iter().enumerate() {
        out.push_str(&stat.csv_name(w));
        for col in &report.columns {
            match col.values[i] {
                Some(s) => {
                    let _ = write!(
                        out,
                        ",{},{},{}",
                        format_decimal17(s.mean),
                        format_decimal17(s.std),
                        cell(Some(s), stat.decimals())
                    );
                }
                None => out.push_str(",,,N/A"),
            }
        }
        out.push('\n');
    }
    out.push_str("failures");
    for col in &report.columns {
        let _ = write!(out, ",{},0,{}", col.failures, col.failures);
    }
    out.push('\n');
    out
}

/// One line per (replication, column) with the full-precision estimates.
pub fn render_raw_csv(report: &ExperimentReport) -> String {
    let k = report.config.truth.components();
    let mut out = String::from("replication,column,sample_checksum");
    for l in 1..=k {
        let _ = write!(out, ",theta_{l}");
    }
    for l in 1..=k {
        let _ = write!(out, ",p_{l}");
    }
    out.push_str(",l1_error,l2_error,iterations,per_iter_ms,total_ms,converged\n");
    let opt = |v: Option<f64>| v.map(format_decimal17).unwrap_or_default();
    for r in &report.records {
        let _ = write!(out, "{},{},{:016x}", r.replication, r.column.label(), r.sample_checksum);
        for v in r.params.means().iter().chain(r.params.weights()) {
            let _ = write!(out, ",{}", format_decimal17(*v));
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{},{}",
            format_decimal17(r.l1),
            format_decimal17(r.l2),
            r.iterations.map(|n| n.to_string()).unwrap_or_default(),
            opt(r.per_iter_ms),
            opt(r.total_ms),
            r.converged
        );
    }
    out
}

/// Whitespace-separated `x density` grid, readable by gnuplot and most
/// plotting tools.
pub fn density_table(params: &MixtureParams, lo: f64, hi: f64, points: usize) -> Result<String> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInterval { lower: lo, upper: hi });
    }
    if points < 2 {
        return Err(Error::InvalidConfig("density grid needs at least 2 points".into()));
    }
    let mut out = String::from("# x density\n");
    for i in 0..points {
        let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let _ = writeln!(out, "{} {}", format_decimal17(x), format_decimal17(mixture_pdf(params, x)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_experiment, Preset};

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - 1.2909944487358056).abs() < 1e-15);
        assert_eq!(Summary::of(&[7.0]).unwrap().std, 0.0);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn norms() {
        let a = MixtureParams::new(vec![-2.0, 1.0], vec![0.5, 0.5]).unwrap();
        let b = MixtureParams::new(vec![-2.5, 0.0], vec![0.7, 0.3]).unwrap();
        let (l1, l2) = error_norms(&a, &b).unwrap();
        assert!((l1 - 1.5).abs() < 1e-15);
        assert!((l2 - 1.25f64.sqrt()).abs() < 1e-15);
        let c = MixtureParams::with_equal_weights(vec![0.0, 1.0, 2.0]).unwrap();
        assert!(error_norms(&a, &c).is_err());
    }

    fn tiny() -> ExperimentReport {
        let mut c = ExperimentConfig::preset(Preset::Table4, 3);
        c.replications = 3;
        c.sample_size = 200;
        c.timing = false;
        run_experiment(&c).unwrap()
    }

    #[test]
    fn markdown_layout() {
        let r = tiny();
        let md = render_report(&r, ReportFormat::Markdown);
        assert!(md.contains("| | VT | VA1 | VA2 | EM | MLE |"));
        let n_row = md.lines().find(|l| l.starts_with("| n |")).unwrap();
        assert!(n_row.trim_end().ends_with("N/A |"));
        assert!(md.lines().any(|l| l.starts_with("| p |")));
        let theta = md.lines().find(|l| l.starts_with("| θ1 |")).unwrap();
        let first = theta.split('|').nth(2).unwrap().trim();
        let (m, s) = first.split_once('±').unwrap();
        assert_eq!(m.split('.').nth(1).unwrap().len(), 4);
        assert_eq!(s.split('.').nth(1).unwrap().len(), 4);
    }

    #[test]
    fn empty_algorithm_list_gives_header_only() {
        let mut c = ExperimentConfig::preset(Preset::Table1, 3);
        c.replications = 2;
        c.sample_size = 50;
        c.algorithms.clear();
        c.include_mle = false;
        let r = run_experiment(&c).unwrap();
        let md = render_report(&r, ReportFormat::Markdown);
        let table: Vec<&str> = md.lines().filter(|l| l.starts_with('|')).collect();
        assert_eq!(table, ["| |", "|---|"]);
    }

    #[test]
    fn csv_round_trips_full_precision() {
        let r = tiny();
        let csv = render_report(&r, ReportFormat::Csv);
        let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
        assert_eq!(header.len(), 1 + 3 * 5);
        let row: Vec<&str> = csv.lines().find(|l| l.starts_with("theta_1,")).unwrap().split(',').collect();
        let parsed: f64 = row[1].parse().unwrap();
        assert_eq!(parsed, r.summary("VT", Statistic::Theta(0)).unwrap().mean);
        let raw = render_raw_csv(&r);
        assert_eq!(raw.lines().count(), 1 + 3 * 5);
    }

    #[test]
    fn json_round_trip() {
        let r = tiny();
        let back: ExperimentReport = serde_json::from_str(&render_report(&r, ReportFormat::Json)).unwrap();
        assert_eq!(back.columns, r.columns);
        assert_eq!(render_report(&back, ReportFormat::Markdown), render_report(&r, ReportFormat::Markdown));
    }

    #[test]
    fn density_grid() {
        let p = MixtureParams::new(vec![-2.5, 0.0], vec![0.7, 0.3]).unwrap();
        let t = density_table(&p, -6.0, 4.0, 11).unwrap();
        assert_eq!(t.lines().count(), 12);
        assert!(density_table(&p, 1.0, 0.0, 11).is_err());
    }
}
