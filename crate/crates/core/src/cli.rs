//! Command-line front end.
//!
//! Exit codes: `0` success, `1` usage or input error, `2` degenerate statistic
//! or internal error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::harness::{
    emit_table, run_experiment, simulate_null, ExperimentConfig, Preset, TableFormat,
};
use crate::moments::{moment_closed_form, to_f64, MomentId};
use crate::ranks::{Dataset, TiePolicy};
use crate::stats::{run_test, ScalingMode, TestReport};

#[derive(Debug, Parser)]
#[command(
    name = "hidim",
    version,
    about = "Rank-based tests for k-wise independence in high dimension"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a CSV sample for k-wise independence.
    Test(TestArgs),
    /// Run a Monte Carlo rejection study.
    Simulate(SimulateArgs),
    /// Simulate null quantiles of the combined statistic.
    NullQuantile(NullQuantileArgs),
    /// Print an exact moment from the catalog.
    Moments(MomentsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScalingArg {
    Exact,
    Asymptotic,
    Paper,
}

impl From<ScalingArg> for ScalingMode {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::Exact => ScalingMode::ExactFinite,
            ScalingArg::Asymptotic => ScalingMode::Asymptotic,
            ScalingArg::Paper => ScalingMode::Paper,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TiesArg {
    Error,
    ByIndex,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TableFormatArg {
    Csv,
    Json,
    Pretty,
}

impl From<TableFormatArg> for TableFormat {
    fn from(f: TableFormatArg) -> Self {
        match f {
            TableFormatArg::Csv => TableFormat::Csv,
            TableFormatArg::Json => TableFormat::Json,
            TableFormatArg::Pretty => TableFormat::Pretty,
        }
    }
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// CSV file, one observation per line, optional header.
    #[arg(long)]
    pub input: PathBuf,
    /// Highest order of dependence tested.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, value_enum, default_value = "exact")]
    pub scaling: ScalingArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "error")]
    pub ties: TiesArg,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON experiment configuration.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// One of table1, table2, table3.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormatArg,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replications per cell; 500 for presets unless given.
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NullQuantileArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, value_enum, default_value = "exact")]
    pub scaling: ScalingArg,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Comma-separated probability levels.
    #[arg(long, value_delimiter = ',', default_value = "0.95")]
    pub levels: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    /// Catalog name, e.g. B12, Ctilde_1234, Phi2_size2, Mu, Sigma2.
    #[arg(long)]
    pub id: String,
    #[arg(long)]
    pub n: usize,
    /// Order for Mu and Sigma2.
    #[arg(long)]
    pub k: Option<usize>,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InsufficientSample { .. }
        | Error::DegenerateVariance { .. }
        | Error::CapacityExceeded { .. }
        | Error::SubsetBudgetExceeded { .. }
        | Error::EnumerationTooLarge { .. }
        | Error::MismatchFound { .. } => 2,
        _ => 1,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Test(a) => cmd_test(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::NullQuantile(a) => cmd_null_quantile(a, out),
        Command::Moments(a) => cmd_moments(a, out),
    }
}

fn parse_field(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok()
}

/// Reads a numeric CSV; a first line with a non-numeric field is a header.
pub fn read_csv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidDataset(e.to_string()))?;
        let parsed: Option<Vec<f64>> = record.iter().map(parse_field).collect();
        match parsed {
            Some(row) => rows.push(row),
            None if line == 0 => continue,
            None => {
                return Err(Error::InvalidDataset(format!(
                    "non-numeric field on line {}",
                    line + 1
                )))
            }
        }
    }
    Dataset::from_rows(&rows)
}

pub fn render_report(report: &TestReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "n = {}, d = {}, m = {}, scaling = {}",
        report.n, report.d, report.m, report.scaling
    );
    let _ = writeln!(
        s,
        "{:>3} {:>16} {:>16} {:>16} {:>12}",
        "k", "T", "nu", "scale", "z"
    );
    for o in &report.orders {
        let _ = writeln!(
            s,
            "{:>3} {:>16.9e} {:>16.9e} {:>16.9e} {:>12.6}",
            o.k, o.t, o.nu, o.scale, o.z
        );
    }
    let _ = writeln!(s, "T_bar = {:.6}", report.t_bar);
    let _ = writeln!(s, "p-value = {:.6e}", report.p_value);
    if report.ties_broken {
        let _ = writeln!(s, "note: ties were broken by row index");
    }
    let decision = if report.reject {
        "reject"
    } else {
        "do not reject"
    };
    let _ = writeln!(s, "decision: {decision} (alpha = {})", report.alpha);
    s
}

fn cmd_test(a: TestArgs, out: &mut dyn Write) -> Result<()> {
    let data = read_csv(&a.input)?;
    let ties = match a.ties {
        TiesArg::Error => TiePolicy::Error,
        TiesArg::ByIndex => TiePolicy::ByRowIndex,
    };
    let report = run_test(&data, a.m, a.scaling.into(), a.alpha, ties)?;
    match a.format {
        ReportFormat::Text => out.write_all(render_report(&report).as_bytes())?,
        ReportFormat::Json => {
            let json =
                serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out, "{json}")?;
        }
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let mut config = match (&a.config, &a.preset) {
        (Some(path), _) => ExperimentConfig::from_json(
            &fs::read_to_string(path).map_err(|e| Error::InvalidConfig(e.to_string()))?,
        )?,
        (None, Some(name)) => name.parse::<Preset>()?.config(500, 0),
        (None, None) => {
            return Err(Error::InvalidConfig(
                "--config or --preset is required".into(),
            ))
        }
    };
    if let Some(seed) = a.seed {
        config.master_seed = seed;
    }
    if let Some(reps) = a.reps {
        config.replications = reps;
    }
    let table = run_experiment(&config)?;
    match &a.out {
        Some(path) => {
            let mut buf = Vec::new();
            emit_table(&table, a.format.into(), &mut buf)?;
            fs::write(path, buf)?;
        }
        None => emit_table(&table, a.format.into(), out)?,
    }
    Ok(())
}

fn cmd_null_quantile(a: NullQuantileArgs, out: &mut dyn Write) -> Result<()> {
    let cal = simulate_null(a.n, a.d, a.m, a.scaling.into(), a.reps, &a.levels, a.seed)?;
    writeln!(
        out,
        "n = {}, d = {}, m = {}, scaling = {}, replications = {}, seed = {}",
        cal.n, cal.d, cal.m, cal.scaling, cal.replications, cal.seed
    )?;
    for (level, q) in cal.levels.iter().zip(&cal.quantiles) {
        writeln!(out, "{level}\t{q:.6}")?;
    }
    Ok(())
}

/// `"<id> n=<n>: <exact> (<decimal>)"`.
pub fn format_moment(id: MomentId, n: usize) -> Result<String> {
    let value = moment_closed_form(id, n)?;
    Ok(format!("{id} n={n}: {value} ({:.6})", to_f64(&value)))
}

fn cmd_moments(a: MomentsArgs, out: &mut dyn Write) -> Result<()> {
    let id = MomentId::parse(&a.id, a.k)?;
    writeln!(out, "{}", format_moment(id, a.n)?)?;
    Ok(())
}
