//! The `corebudget` command line: `select`, `coverage`, `theory` and `simulate`.
//!
//! Every report embeds a [`RunManifest`]. JSON reports carry it inline; CSV
//! reports get a `<out>.manifest.json` sidecar, or a leading `# ` comment line
//! when written to stdout. Exit codes: 0 success, 1 internal failure, 2 bad input.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::coverage::{self, BRUTE_FORCE_MAX_K, BRUTE_FORCE_MAX_N};
use crate::dataset::{self, Dataset};
use crate::distillsim::{run_experiment, ExperimentGrid, ExperimentName};
use crate::error::{Error, Result};
use crate::select::{self, SelectionConfig};
use crate::theory::{self, TheoryParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "COREBUDGET_THREADS";

#[derive(Debug, Parser)]
#[command(name = "corebudget", version, about = "Budget-aware coverage-guided selection and distillation analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pick a budgeted subset from an embedding file.
    Select(SelectArgs),
    /// Coverage radii of a subset and of a farthest-first subset.
    Coverage(CoverageArgs),
    /// Evaluate the two-stage versus direct bound decomposition.
    Theory(TheoryArgs),
    /// Run a simulator experiment and write its curve table.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub metadata: PathBuf,
    /// JSON selection config; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub m0: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub metadata: PathBuf,
    /// Ids to evaluate: a JSON array, a `select` report, or one id per line.
    #[arg(long)]
    pub selected: Option<PathBuf>,
    /// Size of the farthest-first subset to build and evaluate.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Picks the farthest-first starting point.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// JSON file of bound parameters.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub budget: u64,
    /// Dataset size for a single breakdown.
    #[arg(long)]
    pub n: Option<u64>,
    /// `lo:hi` range of n for a sweep, e.g. `10:1e9`.
    #[arg(long = "sweep-n")]
    pub sweep_n: Option<String>,
    /// Defaults to csv for sweeps and json otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Upper end of the crossover search.
    #[arg(long, default_value_t = 1_000_000_000_000)]
    pub n_max: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub experiment: String,
    /// Number of paired seeds, counted up from `--seed`.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON experiment grid; omitted fields take their defaults.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Enough to re-run a command: version, resolved config, seed and input digests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub subcommand: String,
    pub config: Value,
    pub seed: u64,
    /// Input path -> lowercase hex SHA-256 of its bytes.
    pub input_digests: BTreeMap<String, String>,
    /// RFC 3339, UTC. The only field that differs between identical runs.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &impl Serialize, seed: u64, inputs: &[&Path]) -> Result<Self> {
        let mut input_digests = BTreeMap::new();
        for path in inputs {
            input_digests.insert(path.display().to_string(), file_digest(path)?);
        }
        Ok(Self {
            version: crate::VERSION.to_string(),
            subcommand: subcommand.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            input_digests,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Parses `args` (program name first), runs the command and returns the exit code.
/// Diagnostics go to stderr, reports to `--out` or stdout.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_VALIDATION;
    }
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_INTERNAL
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Select(a) => cmd_select(a),
        Command::Coverage(a) => cmd_coverage(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_output(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| Error::io(path, e)),
        None => io::stdout().lock().write_all(body.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn json_report(manifest: &RunManifest, key: &str, payload: impl Serialize) -> Result<String> {
    let mut map = serde_json::Map::new();
    map.insert("manifest".into(), serde_json::to_value(manifest)?);
    map.insert(key.into(), serde_json::to_value(payload)?);
    Ok(serde_json::to_string_pretty(&Value::Object(map))? + "\n")
}

/// CSV body to `out` plus a manifest sidecar, or to stdout behind a `# ` manifest line.
fn write_csv_report(out: Option<&Path>, manifest: &RunManifest, extra: Option<Value>, csv: &str) -> Result<()> {
    let mut sidecar = serde_json::Map::new();
    sidecar.insert("manifest".into(), serde_json::to_value(manifest)?);
    if let Some(extra) = extra {
        sidecar.insert("summary".into(), extra);
    }
    match out {
        Some(path) => {
            let side = sidecar_path(path);
            let body = serde_json::to_string_pretty(&Value::Object(sidecar))? + "\n";
            fs::write(&side, body).map_err(|e| Error::io(&side, e))?;
            write_output(Some(path), csv)
        }
        None => {
            let line = serde_json::to_string(&Value::Object(sidecar))?;
            write_output(None, &format!("# {line}\n{csv}"))
        }
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn load_dataset(embeddings: &Path, metadata: &Path) -> Result<Dataset> {
    dataset::load_embeddings(embeddings, metadata)
}

pub fn cmd_select(a: &SelectArgs) -> Result<()> {
    let mut config: Value = match &a.config {
        Some(path) => read_json(path)?,
        None => Value::Object(Default::default()),
    };
    let obj = config.as_object_mut().ok_or_else(|| Error::invalid("selection config must be a JSON object"))?;
    if let Some(b) = a.budget {
        obj.insert("budget".into(), b.into());
    }
    if let Some(v) = a.alpha {
        obj.insert("alpha".into(), v.into());
    }
    if let Some(v) = a.clusters {
        obj.insert("clusters".into(), v.into());
    }
    if let Some(v) = a.m0 {
        obj.insert("m0".into(), v.into());
    }
    if let Some(v) = a.seed {
        obj.insert("seed".into(), v.into());
    }
    if !obj.contains_key("budget") {
        return Err(Error::invalid("a budget is required (--budget or \"budget\" in --config)"));
    }
    let config: SelectionConfig = serde_json::from_value(config)?;
    config.validate()?;
    let data = load_dataset(&a.embeddings, &a.metadata)?;
    let outcome = select::run_pipeline(&data, &config)?;
    let mut inputs = vec![a.embeddings.as_path(), a.metadata.as_path()];
    if let Some(c) = &a.config {
        inputs.push(c);
    }
    let manifest = RunManifest::new("select", &config, config.seed, &inputs)?;
    let body = json_report(&manifest, "result", &outcome.result)?;
    write_output(a.out.as_deref(), &body)
}

/// Accepts a JSON array of ids, a `select` report, or plain text with one id per line.
pub fn parse_id_list(text: &str) -> Result<Vec<String>> {
    match serde_json::from_str::<Value>(text) {
        Ok(Value::Array(items)) => items
            .into_iter()
            .map(|v| match v {
                Value::String(s) => Ok(s),
                other => Err(Error::invalid(format!("expected an id string, got {other}"))),
            })
            .collect(),
        Ok(Value::Object(map)) => {
            let ids = map
                .get("result")
                .and_then(|r| r.get("selected_ids"))
                .or_else(|| map.get("selected_ids"))
                .ok_or_else(|| Error::invalid("JSON id file has no selected_ids"))?;
            Ok(serde_json::from_value(ids.clone())?)
        }
        _ => Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect()),
    }
}

#[derive(Debug, Serialize)]
struct SubsetCoverage {
    ids: Vec<String>,
    mean_radius: f64,
    maxmin_radius: f64,
}

#[derive(Debug, Serialize)]
struct CoverageOutput {
    points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    selected: Option<SubsetCoverage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    farthest_first: Option<SubsetCoverage>,
    /// Exact k-center radius, present for instances small enough to enumerate.
    #[serde(skip_serializing_if = "Option::is_none")]
    optimal_maxmin_radius: Option<f64>,
}

#[derive(Debug, Serialize)]
struct CoverageConfig<'a> {
    selected: Option<&'a Path>,
    budget: Option<usize>,
}

pub fn cmd_coverage(a: &CoverageArgs) -> Result<()> {
    if a.selected.is_none() && a.budget.is_none() {
        return Err(Error::invalid("give --selected, --budget, or both"));
    }
    let data = load_dataset(&a.embeddings, &a.metadata)?;
    let points = &data.embeddings;
    let mut inputs = vec![a.embeddings.as_path(), a.metadata.as_path()];
    let selected = match &a.selected {
        Some(path) => {
            inputs.push(path);
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let ids = parse_id_list(&text)?;
            let report = coverage::coverage_radius_ids(points, ids.iter().map(String::as_str))?;
            Some(SubsetCoverage { ids, mean_radius: report.mean_radius, maxmin_radius: report.maxmin_radius })
        }
        None => None,
    };
    let (farthest_first, optimal) = match a.budget {
        Some(k) => {
            if k == 0 || k > points.len() {
                return Err(Error::invalid(format!("budget {k} must lie in 1..={}", points.len())));
            }
            let start = (a.seed % points.len() as u64) as usize;
            let rows = coverage::gonzalez(points, k, start)?;
            let report = coverage::coverage_radius(points, &rows)?;
            let optimal = (points.len() <= BRUTE_FORCE_MAX_N && k <= BRUTE_FORCE_MAX_K)
                .then(|| coverage::optimal_kcenter_bruteforce(points, k))
                .transpose()?
                .map(|s| s.radius);
            let ff = SubsetCoverage {
                ids: rows.iter().map(|&r| points.id(r).to_string()).collect(),
                mean_radius: report.mean_radius,
                maxmin_radius: report.maxmin_radius,
            };
            (Some(ff), optimal)
        }
        None => (None, None),
    };
    let config = CoverageConfig { selected: a.selected.as_deref(), budget: a.budget };
    let manifest = RunManifest::new("coverage", &config, a.seed, &inputs)?;
    let output = CoverageOutput { points: points.len(), selected, farthest_first, optimal_maxmin_radius: optimal };
    write_output(a.out.as_deref(), &json_report(&manifest, "coverage", output)?)
}

/// Parses `lo:hi`; both ends may use exponent notation (`1e9`).
pub fn parse_range(text: &str) -> Result<(u64, u64)> {
    let bad = || Error::invalid(format!("expected lo:hi with positive integers, got {text:?}"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let parse = |s: &str| -> Result<u64> {
        let v: f64 = s.trim().parse().map_err(|_| bad())?;
        if !(v >= 1.0 && v.fract() == 0.0 && v < 1.8e19) {
            return Err(bad());
        }
        Ok(v as u64)
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if hi < lo {
        return Err(bad());
    }
    Ok((lo, hi))
}

#[derive(Debug, Serialize)]
struct TheoryConfig<'a> {
    params: &'a TheoryParams,
    budget: u64,
    n: Option<u64>,
    sweep_n: Option<&'a str>,
    n_max: u64,
}

#[derive(Debug, Serialize)]
struct TheoryOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    breakdown: Option<theory::AdvantageBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<Vec<theory::SweepRow>>,
    preconditions_hold: bool,
    crossover_n0: Option<u64>,
    warnings: Vec<String>,
}

pub fn cmd_theory(a: &TheoryArgs) -> Result<()> {
    let params: TheoryParams = read_json(&a.config)?;
    params.validate()?;
    if a.n.is_none() && a.sweep_n.is_none() {
        return Err(Error::invalid("give --n, --sweep-n, or both"));
    }
    let breakdown = a.n.map(|n| theory::advantage(&params, a.budget, n)).transpose()?;
    let sweep = a
        .sweep_n
        .as_deref()
        .map(|r| {
            let (lo, hi) = parse_range(r)?;
            theory::sweep_n(&params, a.budget, lo, hi)
        })
        .transpose()?;
    let crossover = theory::crossover_n0(&params, a.budget, a.n_max)?;
    let config =
        TheoryConfig { params: &params, budget: a.budget, n: a.n, sweep_n: a.sweep_n.as_deref(), n_max: a.n_max };
    let manifest = RunManifest::new("theory", &config, a.seed, &[&a.config])?;
    let format = a.format.unwrap_or(if sweep.is_some() { Format::Csv } else { Format::Json });
    let output = TheoryOutput {
        breakdown,
        sweep,
        preconditions_hold: theory::corollary_preconditions(&params, a.budget),
        crossover_n0: crossover,
        warnings: params.warnings(),
    };
    match (format, &output.sweep) {
        (Format::Csv, Some(rows)) => {
            let body = sweep_csv(rows)?;
            let extra = serde_json::json!({
                "breakdown": output.breakdown,
                "preconditions_hold": output.preconditions_hold,
                "crossover_n0": output.crossover_n0,
                "warnings": output.warnings,
            });
            write_csv_report(a.out.as_deref(), &manifest, Some(extra), &body)
        }
        (Format::Csv, None) => Err(Error::invalid("csv output needs --sweep-n")),
        (Format::Json, _) => write_output(a.out.as_deref(), &json_report(&manifest, "theory", &output)?),
    }
}

const SWEEP_COLUMNS: [&str; 11] = [
    "n",
    "budget",
    "gamma_budget",
    "gamma_full",
    "delta_struct",
    "delta_sample",
    "delta_overhead",
    "delta_adv",
    "bridge_bound_rhs",
    "direct_bound_rhs",
    "is_crossover",
];

pub fn sweep_csv(rows: &[theory::SweepRow]) -> Result<String> {
    let report = |e: csv::Error| Error::Report(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_COLUMNS).map_err(report)?;
    for row in rows {
        let b = &row.breakdown;
        let floats = [
            b.gamma_budget,
            b.gamma_full,
            b.delta_struct,
            b.delta_sample,
            b.delta_overhead,
            b.delta_adv,
            b.bridge_bound_rhs,
            b.direct_bound_rhs,
        ];
        let mut record = vec![b.n.to_string(), b.budget.to_string()];
        record.extend(floats.iter().map(f64::to_string));
        record.push(row.is_crossover.to_string());
        w.write_record(&record).map_err(report)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

#[derive(Debug, Serialize)]
struct SimulateConfig<'a> {
    experiment: ExperimentName,
    seeds: &'a [u64],
    grid: &'a ExperimentGrid,
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let name: ExperimentName = a.experiment.parse()?;
    if a.seeds == 0 {
        return Err(Error::invalid("--seeds must be at least 1"));
    }
    let grid: ExperimentGrid = match &a.grid {
        Some(path) => read_json(path)?,
        None => ExperimentGrid::default(),
    };
    let seeds: Vec<u64> = (0..a.seeds).map(|i| a.seed.wrapping_add(i)).collect();
    let table = run_experiment(name, &grid, &seeds)?;
    let inputs: Vec<&Path> = a.grid.as_deref().into_iter().collect();
    let config = SimulateConfig { experiment: name, seeds: &seeds, grid: &grid };
    let manifest = RunManifest::new("simulate", &config, a.seed, &inputs)?;
    match a.format {
        Format::Csv => {
            let body = table.to_csv_string()?;
            write_csv_report(a.out.as_deref(), &manifest, Some(serde_json::to_value(&table.summary)?), &body)
        }
        Format::Json => write_output(a.out.as_deref(), &json_report(&manifest, "table", &table)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("10:1e9").unwrap(), (10, 1_000_000_000));
        assert_eq!(parse_range(" 5 : 5").unwrap(), (5, 5));
        for bad in ["10", "0:5", "5:1", "a:b", "1.5:3", "-1:4"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn id_lists() {
        assert_eq!(parse_id_list(r#"["a", "b"]"#).unwrap(), vec!["a", "b"]);
        assert_eq!(parse_id_list("a\n\n b \n").unwrap(), vec!["a", "b"]);
        let report = r#"{"manifest": {}, "result": {"selected_ids": ["x"]}}"#;
        assert_eq!(parse_id_list(report).unwrap(), vec!["x"]);
        assert!(parse_id_list("[1, 2]").is_err());
        assert!(parse_id_list(r#"{"other": 1}"#).is_err());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("/tmp/run.csv")), Path::new("/tmp/run.csv.manifest.json"));
    }

    #[test]
    fn clap_errors_map_to_validation() {
        assert_eq!(run_from(["corebudget", "select"]), EXIT_VALIDATION);
        assert_eq!(run_from(["corebudget", "frobnicate"]), EXIT_VALIDATION);
        assert_eq!(run_from(["corebudget", "--version"]), EXIT_OK);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
