//! Monte Carlo runner: rejection frequencies over a grid of models, sample
//! sizes and dimensions, and simulated null quantiles of the combined statistic.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::{Model, ModelSpec, RngStream};
use crate::ranks::{compute_ranks, RankMatrix, TiePolicy};
use crate::stats::{
    combined_statistic, decide, scale_table, t_statistic_streaming, Scaling, ScalingMode,
};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "HIDIM_THREADS";

/// Smallest replication count accepted by [`simulate_null`].
pub const MIN_NULL_REPLICATIONS: usize = 100;

const MAX_REGENERATIONS: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Statistic {
    /// A single order `k`.
    S,
    /// The combination of orders `2..=m`.
    T,
}

/// One test variant, e.g. `S2` with exact scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestSpec {
    pub statistic: Statistic,
    pub order: usize,
    pub scaling: ScalingMode,
}

impl TestSpec {
    pub fn new(statistic: Statistic, order: usize, scaling: ScalingMode) -> Self {
        TestSpec {
            statistic,
            order,
            scaling,
        }
    }

    pub fn s(order: usize, scaling: ScalingMode) -> Self {
        TestSpec::new(Statistic::S, order, scaling)
    }

    pub fn t(order: usize, scaling: ScalingMode) -> Self {
        TestSpec::new(Statistic::T, order, scaling)
    }

    pub fn label(&self) -> String {
        let prefix = match self.statistic {
            Statistic::S => "S",
            Statistic::T => "T",
        };
        format!("{prefix}{}", self.order)
    }

    fn orders(&self) -> std::ops::RangeInclusive<usize> {
        match self.statistic {
            Statistic::S => self.order..=self.order,
            Statistic::T => 2..=self.order,
        }
    }

    /// Decision from `T_n(2..)` and the scales for orders `2..=order`.
    fn reject(&self, t: &[f64], scales: &[Scaling], alpha: f64) -> bool {
        let z: Vec<f64> = self
            .orders()
            .map(|k| (t[k - 2] - scales[k - 2].nu) / scales[k - 2].delta)
            .collect();
        decide(combined_statistic(&z), alpha)
    }
}

impl fmt::Display for TestSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.label(), self.scaling)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: Vec<usize>,
    pub d: Vec<usize>,
}

fn default_replications() -> usize {
    500
}

fn default_alpha() -> f64 {
    0.05
}

/// Declarative description of a Monte Carlo study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub models: Vec<Model>,
    pub grid: Grid,
    pub tests: Vec<TestSpec>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub thread_count: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.replications == 0 {
            return bad("replications must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.models.is_empty() || self.grid.n.is_empty() || self.grid.d.is_empty() {
            return bad("models and grid must be non-empty".into());
        }
        if self.tests.is_empty() {
            return bad("at least one test is required".into());
        }
        if let Some(t) = self.tests.iter().find(|t| t.order < 2) {
            return bad(format!("test {t} has order below 2"));
        }
        if let Some(&n) = self.grid.n.iter().find(|&&n| n < 3) {
            return bad(format!("sample size {n} gives a degenerate statistic"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(json))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Seed of one grid cell, derived from the master seed and the cell key.
pub fn cell_seed(master_seed: u64, model: &Model, n: usize, d: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(model.label().as_bytes());
    h.update((n as u64).to_le_bytes());
    h.update((d as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub model: String,
    pub test: String,
    pub scaling: ScalingMode,
    pub n: usize,
    pub d: usize,
    pub d_actual: usize,
    pub replications: usize,
    pub rejections: usize,
    pub reject_rate: f64,
    pub mean_runtime_ms: f64,
    pub seed: u64,
}

/// A grid cell that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub model: String,
    pub test: String,
    pub scaling: ScalingMode,
    pub n: usize,
    pub d: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionTable {
    pub cells: Vec<Cell>,
    pub failures: Vec<CellFailure>,
    pub provenance: Provenance,
}

impl RejectionTable {
    pub fn find(
        &self,
        model: &str,
        test: &str,
        scaling: ScalingMode,
        n: usize,
        d: usize,
    ) -> Option<&Cell> {
        self.cells.iter().find(|c| {
            c.model == model && c.test == test && c.scaling == scaling && c.n == n && c.d == d
        })
    }

    /// Copy with timings zeroed, for comparing runs.
    pub fn without_timings(&self) -> RejectionTable {
        let mut t = self.clone();
        t.cells.iter_mut().for_each(|c| c.mean_runtime_ms = 0.0);
        t
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    fn sort(&mut self) {
        let key = |c: &Cell| {
            (
                c.model.clone(),
                c.test.clone(),
                c.scaling.as_str(),
                c.n,
                c.d,
            )
        };
        self.cells.sort_by(|a, b| key(a).cmp(&key(b)));
        self.failures.sort_by(|a, b| {
            (&a.model, &a.test, a.scaling.as_str(), a.n, a.d).cmp(&(
                &b.model,
                &b.test,
                b.scaling.as_str(),
                b.n,
                b.d,
            ))
        });
    }
}

/// Draws tie-free ranks for replication `rep` of a cell.
fn draw_ranks(spec: &ModelSpec, seed: u64, rep: u64) -> Result<RankMatrix> {
    for attempt in 0..MAX_REGENERATIONS {
        let data = spec.generate(RngStream::new(seed, rep + (attempt << 40)))?;
        match compute_ranks(&data, TiePolicy::Error) {
            Ok(ranks) => return Ok(ranks),
            Err(Error::TiesPresent { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::TiesPresent { column: 0 })
}

/// Worker pool sized from the environment, the config, or the machine.
pub fn thread_pool(requested: Option<usize>) -> Result<rayon::ThreadPool> {
    let from_env = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0);
    let threads = from_env.or(requested).unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

struct CellResult {
    cells: Vec<Cell>,
    failures: Vec<CellFailure>,
}

fn run_cell(config: &ExperimentConfig, model: Model, n: usize, d: usize) -> CellResult {
    let spec = ModelSpec::new(model, n, d);
    let seed = cell_seed(config.master_seed, &model, n, d);
    let mut out = CellResult {
        cells: Vec::new(),
        failures: Vec::new(),
    };
    let fail = |test: &TestSpec, e: &Error| CellFailure {
        model: model.label(),
        test: test.label(),
        scaling: test.scaling,
        n,
        d,
        error: e.to_string(),
    };
    let d_actual = match spec.d_actual() {
        Ok(d) => d,
        Err(e) => {
            out.failures = config.tests.iter().map(|t| fail(t, &e)).collect();
            return out;
        }
    };
    // scales per test; tests whose scale degenerates are reported as failures
    let mut active: Vec<(TestSpec, Vec<Scaling>)> = Vec::new();
    for test in &config.tests {
        match scale_table(n, d_actual, test.order, test.scaling) {
            Ok(scales) => active.push((*test, scales)),
            Err(e) => out.failures.push(fail(test, &e)),
        }
    }
    if active.is_empty() {
        return out;
    }
    let max_order = active.iter().map(|(t, _)| t.order).max().unwrap();
    let started = Instant::now();
    let outcomes: Vec<Result<Vec<bool>>> = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let ranks = draw_ranks(&spec, seed, rep)?;
            let t = t_statistic_streaming(&ranks, max_order)?;
            Ok(active
                .iter()
                .map(|(test, scales)| test.reject(&t, scales, config.alpha))
                .collect())
        })
        .collect();
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    let mut counts = vec![0usize; active.len()];
    for outcome in outcomes {
        match outcome {
            Ok(decisions) => {
                for (c, r) in counts.iter_mut().zip(decisions) {
                    *c += r as usize;
                }
            }
            Err(e) => {
                out.failures.extend(active.iter().map(|(t, _)| fail(t, &e)));
                return out;
            }
        }
    }
    for ((test, _), rejections) in active.iter().zip(counts) {
        out.cells.push(Cell {
            model: model.label(),
            test: test.label(),
            scaling: test.scaling,
            n,
            d,
            d_actual,
            replications: config.replications,
            rejections,
            reject_rate: rejections as f64 / config.replications as f64,
            mean_runtime_ms: elapsed_ms / config.replications as f64,
            seed,
        });
    }
    out
}

/// Runs every (model, n, d) cell of the grid and every test on shared data.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RejectionTable> {
    config.validate()?;
    let pool = thread_pool(config.thread_count)?;
    let keys: Vec<(Model, usize, usize)> = config
        .models
        .iter()
        .flat_map(|&m| {
            config
                .grid
                .n
                .iter()
                .flat_map(move |&n| config.grid.d.iter().map(move |&d| (m, n, d)))
        })
        .collect();
    let results: Vec<CellResult> = pool.install(|| {
        keys.par_iter()
            .map(|&(model, n, d)| run_cell(config, model, n, d))
            .collect()
    });
    let mut table = RejectionTable {
        cells: Vec::new(),
        failures: Vec::new(),
        provenance: Provenance {
            master_seed: config.master_seed,
            config_hash: config.hash(),
        },
    };
    for r in results {
        table.cells.extend(r.cells);
        table.failures.extend(r.failures);
    }
    table.sort();
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    #[default]
    Csv,
    Json,
    Pretty,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            "pretty" | "text" => Ok(TableFormat::Pretty),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "model",
    "test",
    "scaling",
    "n",
    "d",
    "replications",
    "reject_rate",
    "seed",
];

/// Writes the table in the requested format.
pub fn emit_table<W: Write + ?Sized>(
    table: &RejectionTable,
    format: TableFormat,
    out: &mut W,
) -> Result<()> {
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let io = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(CSV_HEADER).map_err(io)?;
            for c in &table.cells {
                w.write_record([
                    c.model.clone(),
                    c.test.clone(),
                    c.scaling.to_string(),
                    c.n.to_string(),
                    c.d.to_string(),
                    c.replications.to_string(),
                    c.reject_rate.to_string(),
                    c.seed.to_string(),
                ])
                .map_err(io)?;
            }
            w.flush()?;
        }
        TableFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, table).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out)?;
        }
        TableFormat::Pretty => out.write_all(pretty_table(table).as_bytes())?,
    }
    Ok(())
}

/// Rejection percentages laid out with one row per (model, test, scaling, n)
/// and one column per requested `d`.
pub fn pretty_table(table: &RejectionTable) -> String {
    let mut ds: Vec<usize> = table.cells.iter().map(|c| c.d).collect();
    ds.sort_unstable();
    ds.dedup();
    let mut rows: BTreeMap<(String, String, &str, usize), BTreeMap<usize, f64>> = BTreeMap::new();
    for c in &table.cells {
        rows.entry((c.model.clone(), c.test.clone(), c.scaling.as_str(), c.n))
            .or_default()
            .insert(c.d, 100.0 * c.reject_rate);
    }
    let mut s = format!("{:<20} {:<5} {:<11} {:>5}", "model", "test", "scaling", "n");
    for d in &ds {
        let _ = write!(s, " {:>7}", format!("d={d}"));
    }
    s.push('\n');
    for ((model, test, scaling, n), by_d) in &rows {
        let _ = write!(s, "{model:<20} {test:<5} {scaling:<11} {n:>5}");
        for d in &ds {
            match by_d.get(d) {
                Some(v) => {
                    let _ = write!(s, " {v:>7.1}");
                }
                None => s.push_str(&format!(" {:>7}", "-")),
            }
        }
        s.push('\n');
    }
    for f in &table.failures {
        let _ = writeln!(
            s,
            "failed: {} {} {} n={} d={}: {}",
            f.model, f.test, f.scaling, f.n, f.d, f.error
        );
    }
    s
}

/// Empirical null quantiles of the combined statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullCalibration {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub scaling: ScalingMode,
    pub replications: usize,
    pub levels: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub seed: u64,
    /// Simulated `T_bar` values in replication order.
    pub samples: Vec<f64>,
}

/// Type-7 sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * level;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Simulates the combined statistic under independent uniform data.
pub fn simulate_null(
    n: usize,
    d: usize,
    m: usize,
    mode: ScalingMode,
    replications: usize,
    levels: &[f64],
    seed: u64,
) -> Result<NullCalibration> {
    if replications < MIN_NULL_REPLICATIONS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_NULL_REPLICATIONS} replications are required, got {replications}"
        )));
    }
    if levels.is_empty() || levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::InvalidArgument("levels must lie in (0, 1)".into()));
    }
    let scales = scale_table(n, d, m, mode)?;
    let spec = ModelSpec::new(Model::Independent, n, d);
    let pool = thread_pool(None)?;
    let samples: Vec<f64> = pool.install(|| {
        (0..replications as u64)
            .into_par_iter()
            .map(|rep| {
                let ranks = draw_ranks(&spec, seed, rep)?;
                let t = t_statistic_streaming(&ranks, m)?;
                let z: Vec<f64> = t
                    .iter()
                    .zip(&scales)
                    .map(|(t, s)| (t - s.nu) / s.delta)
                    .collect();
                Ok(combined_statistic(&z))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let quantiles = levels
        .iter()
        .map(|&l| quantile_sorted(&sorted, l))
        .collect();
    Ok(NullCalibration {
        n,
        d,
        m,
        scaling: mode,
        replications,
        levels: levels.to_vec(),
        quantiles,
        seed,
        samples,
    })
}

/// Sample sizes and dimensions of the simulation study.
pub const STUDY_N: [usize; 4] = [16, 32, 64, 128];
pub const STUDY_D: [usize; 7] = [4, 8, 16, 32, 64, 128, 256];

/// `S2, S3, T3` with both scalings.
pub fn power_roster() -> Vec<TestSpec> {
    let mut tests = Vec::new();
    for scaling in [ScalingMode::ExactFinite, ScalingMode::Asymptotic] {
        tests.extend([
            TestSpec::s(2, scaling),
            TestSpec::s(3, scaling),
            TestSpec::t(3, scaling),
        ]);
    }
    tests
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Table1,
    Table2,
    Table3,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(Preset::Table1),
            "table2" => Ok(Preset::Table2),
            "table3" => Ok(Preset::Table3),
            other => Err(Error::InvalidConfig(format!("unknown preset {other:?}"))),
        }
    }
}

impl Preset {
    pub fn config(self, replications: usize, master_seed: u64) -> ExperimentConfig {
        let (models, tests) = match self {
            Preset::Table1 => {
                let mut tests = power_roster();
                tests.extend([
                    TestSpec::s(4, ScalingMode::Asymptotic),
                    TestSpec::t(4, ScalingMode::Asymptotic),
                ]);
                (vec![Model::Independent], tests)
            }
            Preset::Table2 => (
                [0.1, 0.3, 0.7]
                    .into_iter()
                    .map(|tau_norm2| Model::GaussianEquicorr { tau_norm2 })
                    .collect(),
                power_roster(),
            ),
            Preset::Table3 => (
                vec![Model::Inductive, Model::GeisserMantel, Model::RomanoSiegel],
                power_roster(),
            ),
        };
        ExperimentConfig {
            models,
            grid: Grid {
                n: STUDY_N.to_vec(),
                d: STUDY_D.to_vec(),
            },
            tests,
            replications,
            alpha: 0.05,
            master_seed,
            thread_count: None,
        }
    }
}
