//! Experiment runner: parses an [`ExperimentConfig`], dispatches to
//! `rmf-core`, and renders a self-describing CSV or JSON table.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rmf_core::ballot::{scaling_table, ScalingRow, ScalingSpec};
use rmf_core::characters::{build_character_table, char_avg_abs_power, compare_to_steinhaus};
use rmf_core::euler::{expected_sq_closed_form, mc_expected_sq, parseval_check, ExpectationForm, ExpectationSpec, ParsevalOptions};
use rmf_core::interval::{theta_scan, threshold_g, ThetaRow};
use rmf_core::model::evaluate_unchecked;
use rmf_core::sieve::{factor_interval, generate_primes};
use rmf_core::{Exec, McConfig, ModelKind, PrimeValueStream};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Full description of one run; echoed into every output header.
#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "rmf", version, about = "Random multiplicative function experiments")]
pub struct ExperimentConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1000)]
    pub trials: u64,
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: u32,
    /// Output file, written atomically; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Primes up to a limit, or the factorization of (x, x+y].
    Primes(PrimesArgs),
    /// Moments of the interval sum along x/y = (log x)^theta.
    MomentScan(MomentScanArgs),
    /// Monte Carlo check of an Euler product expectation.
    EulerCheck(EulerCheckArgs),
    /// Both sides of the Parseval identity for Dirichlet polynomials.
    Parseval(ParsevalArgs),
    /// Average of |sum chi(n)|^{2q} over characters modulo r.
    CharAvg(CharArgs),
    /// Character average beside the Steinhaus estimate.
    CharModelGap(CharArgs),
    /// Probability that a Gaussian walk stays below a + 2 log j + c.
    Ballot(BallotArgs),
    /// Moment ratios against theta sqrt(log log x) for several x.
    ThresholdScan(ThresholdScanArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PrimesArgs {
    #[arg(long, conflicts_with_all = ["x", "y"], required_unless_present = "y")]
    pub limit: Option<u64>,
    #[arg(long, requires = "y")]
    pub x: Option<u64>,
    #[arg(long, requires = "x")]
    pub y: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MomentScanArgs {
    #[arg(long)]
    pub x: u64,
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2")]
    pub theta: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, default_value_t = ModelKind::Steinhaus)]
    pub model: ModelKind,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EulerCheckArgs {
    #[arg(long)]
    pub p_lo: u64,
    #[arg(long)]
    pub p_hi: u64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, default_value_t = ModelKind::Steinhaus)]
    pub model: ModelKind,
    /// `squared-modulus` or `two-point`.
    #[arg(long, default_value = "squared-modulus")]
    pub form: ExpectationForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coefficients {
    /// `a_n = f(n)` from a Steinhaus stream.
    Steinhaus,
    /// `a_n = f(n)` from a Rademacher stream.
    Rademacher,
    /// `a_n = 1`.
    Ones,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ParsevalArgs {
    /// Number of coefficients `a_1..a_n`.
    #[arg(long, default_value_t = 30)]
    pub n: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,1")]
    pub sigma: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Coefficients::Steinhaus)]
    pub coeffs: Coefficients,
    /// Integration half-width; chosen from the tolerance when absent.
    #[arg(long)]
    pub window: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CharArgs {
    #[arg(long)]
    pub r: u64,
    #[arg(long)]
    pub x: u64,
    #[arg(long)]
    pub y: u64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BallotArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub a: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ThresholdScanArgs {
    #[arg(long, value_delimiter = ',', default_value = "10000,100000,1000000")]
    pub x: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1")]
    pub theta: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, default_value_t = ModelKind::Steinhaus)]
    pub model: ModelKind,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rmf_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// 2 usage, 3 capacity, 4 numerical singularity, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use rmf_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Contract(_)) | CliError::Core(E::Window { .. }) => 2,
            CliError::Core(E::Capacity(_)) => 3,
            CliError::Core(E::Singularity { .. }) | CliError::Core(E::Numerical(_)) => 4,
            CliError::Io(_) | CliError::Pool(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// A rendered experiment: column names and typed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

impl ExperimentConfig {
    /// The canonical single-line JSON echoed in output headers.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn mc(&self) -> McConfig {
        McConfig { trials: self.trials, seed: self.seed, exec: Exec::Parallel }
    }
}

/// Parses the config back out of a rendered CSV header.
pub fn config_from_header(text: &str) -> Option<ExperimentConfig> {
    let line = text.lines().next()?.strip_prefix("# config: ")?;
    serde_json::from_str(line).ok()
}

fn row_from<T: Serialize>(value: &T, columns: &[&str]) -> Vec<Value> {
    let v = serde_json::to_value(value).expect("row serializes");
    columns.iter().map(|c| v.get(*c).cloned().unwrap_or(Value::Null)).collect()
}

/// Runs the experiment on a pool of `config.threads` workers.
pub fn run(config: &ExperimentConfig) -> CliResult<Table> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.threads as usize).build()?;
    pool.install(|| dispatch(config))
}

fn dispatch(config: &ExperimentConfig) -> CliResult<Table> {
    match &config.command {
        Command::Primes(a) => primes(a),
        Command::MomentScan(a) => moment_scan(config, a),
        Command::EulerCheck(a) => euler_check(config, a),
        Command::Parseval(a) => parseval(config, a),
        Command::CharAvg(a) => char_avg(a),
        Command::CharModelGap(a) => char_model_gap(config, a),
        Command::Ballot(a) => ballot(config, a),
        Command::ThresholdScan(a) => threshold_scan(config, a),
    }
}

fn primes(a: &PrimesArgs) -> CliResult<Table> {
    match (a.limit, a.x, a.y) {
        (Some(limit), _, _) => {
            let table = generate_primes(limit)?;
            let mut out = Table::new(&["index", "prime"]);
            for (i, &p) in table.primes().iter().enumerate() {
                out.push(vec![json!(i + 1), json!(p)]);
            }
            Ok(out)
        }
        (None, Some(x), Some(y)) => {
            let fact = factor_interval(x, y)?;
            let mut out = Table::new(&["n", "prime", "exponent"]);
            for e in fact.entries() {
                for (p, k) in e.factors() {
                    out.push(vec![json!(e.n), json!(p), json!(k)]);
                }
            }
            Ok(out)
        }
        _ => Err(CliError::Usage("give either --limit or both --x and --y".into())),
    }
}

fn moment_scan(config: &ExperimentConfig, a: &MomentScanArgs) -> CliResult<Table> {
    let scan = theta_scan(a.x, &a.theta, a.q, a.model, &config.mc())?;
    for theta in &scan.skipped {
        eprintln!("skipping theta = {theta}: interval length rounds below 1");
    }
    let mut out = Table::new(&ThetaRow::COLUMNS);
    for row in &scan.rows {
        out.push(row_from(row, &ThetaRow::COLUMNS));
    }
    Ok(out)
}

fn euler_check(config: &ExperimentConfig, a: &EulerCheckArgs) -> CliResult<Table> {
    let spec = ExpectationSpec { p_lo: a.p_lo, p_hi: a.p_hi, sigma: a.sigma, t: a.t, model: a.model, form: a.form };
    let closed = expected_sq_closed_form(&spec)?;
    let est = mc_expected_sq(&spec, &config.mc())?;
    let z = if est.stderr > 0.0 { closed.distance(est.mean) / est.stderr } else { 0.0 };
    let mut out = Table::new(&["p_lo", "p_hi", "sigma", "t", "model", "trials", "mc_mean", "mc_stderr", "closed_form", "z_score"]);
    out.push(vec![
        json!(a.p_lo),
        json!(a.p_hi),
        json!(a.sigma),
        json!(a.t),
        json!(a.model.name()),
        json!(est.trials),
        json!(est.mean),
        json!(est.stderr),
        json!(closed.value),
        json!(z),
    ]);
    Ok(out)
}

fn parseval(config: &ExperimentConfig, a: &ParsevalArgs) -> CliResult<Table> {
    let coeffs: Vec<Complex64> = match a.coeffs {
        Coefficients::Ones => vec![Complex64::new(1.0, 0.0); a.n as usize],
        Coefficients::Steinhaus | Coefficients::Rademacher => {
            let model = if a.coeffs == Coefficients::Steinhaus { ModelKind::Steinhaus } else { ModelKind::Rademacher };
            let f = PrimeValueStream::new(model, config.seed, 0);
            if a.n == 0 {
                Vec::new()
            } else {
                factor_interval(0, a.n)?.entries().map(|e| evaluate_unchecked(&e, &f)).collect()
            }
        }
    };
    let opts = ParsevalOptions { window: a.window, ..ParsevalOptions::default() };
    let mut out = Table::new(&["n_coeffs", "sigma", "lhs", "rhs", "gap"]);
    for &sigma in &a.sigma {
        let r = parseval_check(&coeffs, sigma, &opts)?;
        out.push(vec![json!(coeffs.len()), json!(sigma), json!(r.lhs), json!(r.rhs), json!(r.gap)]);
    }
    Ok(out)
}

fn char_avg(a: &CharArgs) -> CliResult<Table> {
    let start = Instant::now();
    let table = build_character_table(a.r)?;
    let r = char_avg_abs_power(&table, a.x, a.y, a.q)?;
    if r.wraps {
        eprintln!("note: x + y > r, residues wrap around");
    }
    let mut out = Table::new(&["r", "x", "y", "q", "average", "L", "bound", "runtime_ms"]);
    out.push(vec![
        json!(r.r),
        json!(r.x),
        json!(r.y),
        json!(r.q),
        json!(r.average),
        json!(r.l),
        json!(r.bound),
        json!(start.elapsed().as_millis() as u64),
    ]);
    Ok(out)
}

fn char_model_gap(config: &ExperimentConfig, a: &CharArgs) -> CliResult<Table> {
    let table = build_character_table(a.r)?;
    let g = compare_to_steinhaus(&table, a.x, a.y, a.q, &config.mc())?;
    let mut out = Table::new(&["r", "x", "y", "q", "char_avg", "model_mean", "model_stderr", "gap"]);
    out.push(vec![
        json!(a.r),
        json!(a.x),
        json!(a.y),
        json!(a.q),
        json!(g.char_avg),
        json!(g.model.mean),
        json!(g.model.stderr),
        json!(g.gap),
    ]);
    Ok(out)
}

fn ballot(config: &ExperimentConfig, a: &BallotArgs) -> CliResult<Table> {
    let spec = ScalingSpec { a_values: a.a.clone(), n_values: a.n.clone(), c: a.c, variances: None, mc: config.mc() };
    let mut out = Table::new(&ScalingRow::COLUMNS);
    for row in scaling_table(&spec)? {
        out.push(row_from(&row, &ScalingRow::COLUMNS));
    }
    Ok(out)
}

fn threshold_scan(config: &ExperimentConfig, a: &ThresholdScanArgs) -> CliResult<Table> {
    let mut out = Table::new(&["x", "theta", "y", "theta_sqrt_log2x", "G", "ratio", "ratio_stderr"]);
    for &x in &a.x {
        let scan = theta_scan(x, &a.theta, a.q, a.model, &config.mc())?;
        let root = (x as f64).ln().ln().sqrt();
        for row in &scan.rows {
            out.push(vec![
                json!(x),
                json!(row.theta),
                json!(row.y),
                json!(row.theta * root),
                json!(threshold_g(x as f64, row.theta, a.q)),
                json!(row.ratio),
                json!(row.ratio_stderr()),
            ]);
        }
    }
    Ok(out)
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// CSV: `# config: <json>`, the column row, then data rows. JSON: one object
/// with `config`, `columns` and `rows`.
pub fn render(config: &ExperimentConfig, table: &Table) -> String {
    match config.format {
        Format::Csv => {
            let mut s = format!("# config: {}\n{}\n", config.canonical_json(), table.columns.join(","));
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(csv_cell).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let doc = json!({ "config": config, "columns": table.columns, "rows": table.rows });
            let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
            s.push('\n');
            s
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Runs, renders and writes; the caller maps errors to exit codes.
pub fn execute(config: &ExperimentConfig) -> CliResult<()> {
    let table = run(config)?;
    let text = render(config, &table);
    match &config.out {
        Some(path) => write_atomic(path, &text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
