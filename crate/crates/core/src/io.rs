//! CSV ingestion, result files and the `lpep` command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{LpepError, Result};
use crate::glm::{detect_separation, Dataset};
use crate::inference::{amse, amse_with_intercept, selection_metrics, summarize};
use crate::oracle::{exact_model_posterior_with, OracleOptions, DEFAULT_QUAD_ORDER};
use crate::priors::{DeltaPrior, DeltaPriorKind, ModelPrior};
use crate::sampler::{parallel_map, run_chain, run_chains, McmcConfig};
use crate::simgen::Scenario;
use crate::RngStream;

/// Which CSV column holds the response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ResponseColumn {
    Name(String),
    Index(usize),
}

impl ResponseColumn {
    /// A bare integer is read as a 0-based index, anything else as a name.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => ResponseColumn::Index(i),
            Err(_) => ResponseColumn::Name(s.to_string()),
        }
    }
}

fn data_err(msg: impl Into<String>) -> LpepError {
    LpepError::Data(msg.into())
}

/// Loads a CSV with a header row. The response column must be 0/1; every
/// other column becomes a covariate. With `response = None` a column named
/// `y` is used if present, otherwise the first column.
pub fn load_csv(path: &Path, response: Option<&ResponseColumn>, standardize: bool) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| data_err(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if headers.len() < 2 {
        return Err(data_err(format!("{}: need a response and at least one covariate column", path.display())));
    }
    let resp_idx = match response {
        Some(ResponseColumn::Index(i)) if *i < headers.len() => *i,
        Some(ResponseColumn::Index(i)) => {
            return Err(data_err(format!("response column index {i} out of range ({} columns)", headers.len())))
        }
        Some(ResponseColumn::Name(name)) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(format!("no column named {name:?}")))?,
        None => headers.iter().position(|h| h == "y").unwrap_or(0),
    };
    let cov_idx: Vec<usize> = (0..headers.len()).filter(|&j| j != resp_idx).collect();

    let mut y = Vec::new();
    let mut cells: Vec<f64> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 2;
        let rec = rec.map_err(|e| data_err(format!("row {row}: {e}")))?;
        if rec.len() != headers.len() {
            return Err(data_err(format!("row {row}: expected {} fields, found {}", headers.len(), rec.len())));
        }
        let parse = |j: usize| -> Result<f64> {
            let v: f64 = rec[j]
                .parse()
                .map_err(|_| data_err(format!("row {row}, column {:?}: non-numeric value {:?}", headers[j], &rec[j])))?;
            if !v.is_finite() {
                return Err(data_err(format!("row {row}, column {:?}: non-finite value", headers[j])));
            }
            Ok(v)
        };
        let yv = parse(resp_idx)?;
        if yv != 0.0 && yv != 1.0 {
            return Err(data_err(format!(
                "row {row}, column {:?}: response must be 0 or 1, found {}",
                headers[resp_idx], &rec[resp_idx]
            )));
        }
        y.push(yv);
        for &j in &cov_idx {
            cells.push(parse(j)?);
        }
    }
    let n = y.len();
    let mut cov = DMatrix::from_row_slice(n, cov_idx.len(), &cells);
    if standardize {
        standardize_columns(&mut cov)?;
    }
    let names = cov_idx.iter().map(|&j| headers[j].clone()).collect();
    Dataset::new(y, cov, names).map_err(|e| match e {
        LpepError::Argument(m) => data_err(m),
        other => other,
    })
}

/// Centres each column and scales it to unit sample standard deviation.
pub fn standardize_columns(cov: &mut DMatrix<f64>) -> Result<()> {
    let n = cov.nrows() as f64;
    for mut col in cov.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / (n - 1.0)).sqrt();
        if !(sd > 0.0) {
            return Err(data_err("cannot standardize a constant column"));
        }
        col /= sd;
    }
    Ok(())
}

/// Writes `y` followed by the covariates (no intercept column).
pub fn write_dataset_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["y".to_string()];
    header.extend(data.column_names()[1..].iter().cloned());
    w.write_record(&header).map_err(io_err)?;
    for i in 0..data.n() {
        let mut rec = vec![format!("{}", data.y()[i])];
        rec.extend((1..=data.p()).map(|j| format!("{}", data.x()[(i, j)])));
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

fn io_err(e: csv::Error) -> LpepError {
    LpepError::Io(io::Error::other(e))
}

/// Everything needed to reproduce a `fit` run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub response_column: Option<ResponseColumn>,
    pub delta_prior: DeltaPriorKind,
    pub model_prior: ModelPrior,
    pub iterations: usize,
    pub burn_in: usize,
    pub chains: usize,
    pub seed: u64,
    pub standardize: bool,
    pub output_path: Option<PathBuf>,
    pub draw_log: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(LpepError::Argument("iterations must exceed burn-in".into()));
        }
        if self.chains == 0 {
            return Err(LpepError::Argument("at least one chain is required".into()));
        }
        Ok(())
    }

    pub fn mcmc_config(&self, data: &Dataset) -> McmcConfig {
        let mut c = McmcConfig::for_data(data, self.delta_prior).with_seed(self.seed);
        c.iterations = self.iterations;
        c.burn_in = self.burn_in;
        c.model_prior = self.model_prior;
        c
    }
}

/// Loads the data, runs the chains and writes the JSON summary (and the
/// draw log when requested). Returns the summary.
pub fn run_fit(cfg: &RunConfig) -> Result<serde_json::Value> {
    cfg.validate()?;
    let data = load_csv(&cfg.input_path, cfg.response_column.as_ref(), cfg.standardize)?;
    let mcmc = cfg.mcmc_config(&data);
    let draws = run_chains(&data, &mcmc, cfg.chains)?;
    let summary = summarize(&draws)?;
    let mut json = summary.to_json();
    json["columns"] = serde_json::json!(data.column_names());
    json["acceptance"] = serde_json::json!({
        "model_delta": draws.stats.model_delta.rate(),
        "ystar_local": draws.stats.ystar_local.rate(),
        "ystar_global": draws.stats.ystar_global.rate(),
        "delta_extra": draws.stats.delta_extra.rate(),
    });
    json["failures"] = serde_json::json!(draws.failures);
    if let Some(path) = &cfg.draw_log {
        draws.write_csv(BufWriter::new(File::create(path)?))?;
    }
    let text = serde_json::to_string_pretty(&json).expect("summary serializes");
    match &cfg.output_path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => print_stdout(&text)?,
    }
    Ok(json)
}

/// One row of the `replicate` metrics table.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicationMetrics {
    pub rep: usize,
    pub map_match: bool,
    /// Empty when the true model is null.
    pub f1: Option<f64>,
    pub model_size: usize,
    pub amse: f64,
    pub amse_with_intercept: f64,
}

/// Simulates `reps` datasets from `scenario` (seed `scenario.seed + rep`) and
/// fits each with one chain.
pub fn replicate(scenario: &Scenario, reps: usize, mcmc: &McmcConfig) -> Result<Vec<ReplicationMetrics>> {
    scenario.validate()?;
    let truth = scenario.true_model()?;
    let results = parallel_map(reps, |rep| -> Result<ReplicationMetrics> {
        let sc = Scenario { seed: scenario.seed.wrapping_add(rep as u64), ..scenario.clone() };
        let (data, beta) = sc.generate()?;
        let mut cfg = mcmc.clone();
        cfg.delta_prior.n_star = data.n();
        let mut rng = RngStream::new(mcmc.seed.wrapping_add(rep as u64), 0);
        let draws = run_chain(&data, &cfg, &mut rng)?;
        let s = summarize(&draws)?;
        let sel = selection_metrics(&s.map_model, &truth)?;
        Ok(ReplicationMetrics {
            rep,
            map_match: sel.exact_match,
            f1: sel.f1,
            model_size: sel.size,
            amse: amse(&s.bma_mean, beta.as_slice())?,
            amse_with_intercept: amse_with_intercept(&s.bma_mean, beta.as_slice())?,
        })
    });
    results.into_iter().collect()
}

pub fn write_metrics_csv<W: Write>(rows: &[ReplicationMetrics], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rep", "map_match", "f1", "model_size", "amse", "amse_with_intercept"]).map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.rep.to_string(),
            (r.map_match as u8).to_string(),
            r.f1.map(|v| v.to_string()).unwrap_or_default(),
            r.model_size.to_string(),
            r.amse.to_string(),
            r.amse_with_intercept.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DeltaArg {
    Fixed,
    HyperGn,
    Robust,
}

impl From<DeltaArg> for DeltaPriorKind {
    fn from(d: DeltaArg) -> Self {
        match d {
            DeltaArg::Fixed => DeltaPriorKind::FixedUnitInfo,
            DeltaArg::HyperGn => DeltaPriorKind::HyperGOverN,
            DeltaArg::Robust => DeltaPriorKind::Robust,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    /// No active covariates.
    Null,
    /// Five active covariates.
    Sparse,
    /// Ten active covariates.
    Medium,
    /// Twenty active covariates.
    Dense,
}

#[derive(Debug, Parser)]
#[command(name = "lpep", version, about = "Bayesian variable selection for logistic regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DataArgs {
    csv: PathBuf,
    /// Response column name or 0-based index [default: "y", else the first column]
    #[arg(long)]
    response: Option<String>,
    /// Centre and scale covariates
    #[arg(long)]
    standardize: bool,
}

#[derive(Debug, Args)]
struct ChainArgs {
    #[arg(long, value_enum, default_value = "fixed")]
    delta: DeltaArg,
    /// Total iterations including burn-in
    #[arg(long, default_value_t = 131_072)]
    iterations: usize,
    #[arg(long, default_value_t = 10_000)]
    burn_in: usize,
    /// Beta-Binomial model prior parameters
    #[arg(long, default_value_t = 1.0)]
    prior_a: f64,
    #[arg(long, default_value_t = 1.0)]
    prior_b: f64,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Named sparsity level; overrides --p-true
    #[arg(long, value_enum)]
    scenario: Option<Preset>,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    p_true: usize,
    #[arg(long, default_value_t = 0.0)]
    r: f64,
}

impl ScenarioArgs {
    fn scenario(&self, seed: u64) -> Scenario {
        let p_true = match self.scenario {
            Some(Preset::Null) => 0,
            Some(Preset::Sparse) => 5,
            Some(Preset::Medium) => 10,
            Some(Preset::Dense) => 20,
            None => self.p_true,
        };
        Scenario { n: self.n, p: self.p, p_true, r: self.r, seed }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the sampler on a CSV file and write a JSON summary
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 1)]
        chains: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON output file [default: stdout]
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// CSV file for the retained draws
        #[arg(long)]
        draw_log: Option<PathBuf>,
    },
    /// Write a simulated dataset as CSV
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Simulate and fit repeatedly; write per-replication metrics as CSV
    Replicate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Exact model posteriors by enumeration (tiny problems only)
    Oracle {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value = "fixed")]
        delta: DeltaArg,
        #[arg(long, default_value_t = DEFAULT_QUAD_ORDER)]
        quad_order: usize,
        /// Allow n > 12 or p > 3
        #[arg(long)]
        allow_large: bool,
    },
    /// Report whether the response is separated by the covariates
    CheckSeparation {
        #[command(flatten)]
        data: DataArgs,
    },
}

/// A closed pipe on stdout (`lpep ... | head`) is not an error.
fn print_stdout(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn out_writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn model_prior(chain: &ChainArgs) -> Result<ModelPrior> {
    ModelPrior::new(chain.prior_a, chain.prior_b)
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Fit { data, chain, chains, seed, output, draw_log } => {
            let cfg = RunConfig {
                input_path: data.csv,
                response_column: data.response.as_deref().map(ResponseColumn::parse),
                delta_prior: chain.delta.into(),
                model_prior: model_prior(&chain)?,
                iterations: chain.iterations,
                burn_in: chain.burn_in,
                chains,
                seed,
                standardize: data.standardize,
                output_path: output,
                draw_log,
            };
            run_fit(&cfg)?;
        }
        Command::Simulate { scenario, seed, output } => {
            let (data, _) = scenario.scenario(seed).generate()?;
            write_dataset_csv(&data, out_writer(&output)?)?;
        }
        Command::Replicate { scenario, chain, reps, seed, output } => {
            let sc = scenario.scenario(seed);
            let mut mcmc = McmcConfig::new(DeltaPrior::new(chain.delta.into(), sc.n)?).with_seed(seed);
            mcmc.iterations = chain.iterations;
            mcmc.burn_in = chain.burn_in;
            mcmc.model_prior = model_prior(&chain)?;
            let rows = replicate(&sc, reps, &mcmc)?;
            write_metrics_csv(&rows, out_writer(&output)?)?;
        }
        Command::Oracle { data: d, delta, quad_order, allow_large } => {
            let data = load_csv(&d.csv, d.response.as_deref().map(ResponseColumn::parse).as_ref(), d.standardize)?;
            let prior = DeltaPrior::new(delta.into(), data.n())?;
            let opts = OracleOptions { quad_order, allow_large, ..OracleOptions::default() };
            let res = exact_model_posterior_with(&data, &prior, &opts)?;
            let models: Vec<_> = res
                .model_posteriors
                .iter()
                .map(|(m, p)| {
                    serde_json::json!({ "bits": m.bit_string(), "prob": p, "log_marginal": res.model_log_marginals[m] })
                })
                .collect();
            let json = serde_json::json!({ "models": models, "ystar_normalizer": res.ystar_normalizer });
            print_stdout(&serde_json::to_string_pretty(&json).expect("serializes"))?;
        }
        Command::CheckSeparation { data: d } => {
            let data = load_csv(&d.csv, d.response.as_deref().map(ResponseColumn::parse).as_ref(), d.standardize)?;
            let report = detect_separation(&data);
            print_stdout(&serde_json::to_string_pretty(&report).expect("serializes"))?;
        }
    }
    Ok(())
}

/// Exit status for an error: 2 usage, 3 data, 4 numeric.
pub fn exit_code(err: &LpepError) -> i32 {
    match err {
        LpepError::Argument(_) => 2,
        LpepError::Data(_) | LpepError::Config(_) | LpepError::Io(_) => 3,
        LpepError::Numeric(_) | LpepError::FailureBudget { .. } => 4,
    }
}

fn error_kind(err: &LpepError) -> &'static str {
    match err {
        LpepError::Argument(_) => "argument",
        LpepError::Data(_) => "data",
        LpepError::Config(_) => "config",
        LpepError::Io(_) => "io",
        LpepError::Numeric(_) => "numeric",
        LpepError::FailureBudget { .. } => "failure_budget",
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Runs the command line and returns the process exit code. Errors are
/// reported on stderr as a single `lpep-error code=<c> kind=<k> msg=<text>` line.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            eprintln!("lpep-error code=2 kind=usage msg={}", one_line(&first));
            return 2;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("lpep-error code={code} kind={} msg={}", error_kind(&e), one_line(&e.to_string()));
            code
        }
    }
}
