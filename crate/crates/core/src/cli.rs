//! `isp` command-line interface.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or solver errors.
//! Errors go to stderr prefixed with `error:`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::catalog::{build_incidence, load_catalog, parse_pairs, Catalog, CatalogFormat, IncidenceMatrix};
use crate::embed::{load_embeddings, tfidf_embed, EmbeddingMatrix, Metric};
use crate::error::Error;
use crate::explore::{SimulationConfig, SimulationResult};
use crate::isp::{coverage_of_columns, columns_of, solve_isp, CoverageReport, DiversityMode, IspConfig, LevelBackends};
use crate::report::{InputDigest, Report, RunManifest};
use crate::setcover::{Backend, CoverInstance, InstanceFile};
use crate::warmstart::{post_warmstart_coverage, unit_coverage, warm_start, WarmStartMap};

pub const DEFAULT_VOCAB_SIZE: usize = 512;

#[derive(Debug, Parser)]
#[command(name = "isp", version, about = "Item selection for recommender cold-start")]
pub struct Cli {
    /// Cap on worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log one line per solver level to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the three-level item selection and report all selections.
    Solve(SolveArgs),
    /// Warm-start cold items from a warm set.
    Warmstart(WarmstartArgs),
    /// Run the offline exploration simulation.
    Simulate(SimulateArgs),
    /// Label coverage of a selection, optionally after warm-start.
    Coverage(CoverageArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Catalog file (CSV or JSON).
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Catalog format; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<CatalogFormat>,
    /// Comma-separated categories to cover (default: all).
    #[arg(long)]
    pub categories: Option<String>,
    /// Pair categories, e.g. `genre:language,genre:publisher`.
    #[arg(long)]
    pub pairs: Option<String>,
    /// JSON config file; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall time in the manifest.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EmbeddingArgs {
    /// `tfidf` or `file:<path>`.
    #[arg(long)]
    pub embedding: Option<String>,
    #[arg(long)]
    pub metric: Option<Metric>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub embed: EmbeddingArgs,
    /// Maximum final selection size.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub backend: Option<Backend>,
    #[arg(long)]
    pub diversity_mode: Option<String>,
    #[arg(long)]
    pub time_budget_ms: Option<u64>,
    /// Fail when labels are uncoverable.
    #[arg(long)]
    pub strict: bool,
    /// Lines of `<id> <multiplier>` scaling diversity costs.
    #[arg(long)]
    pub preferences: Option<PathBuf>,
    /// Write the level-2 cover instance as JSON.
    #[arg(long)]
    pub dump_instance: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WarmstartArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub embed: EmbeddingArgs,
    /// Warm item ids, one per line (or a `solve` report).
    #[arg(long)]
    pub warm: PathBuf,
    /// Cold item ids; defaults to every non-warm item.
    #[arg(long)]
    pub cold: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub embed: EmbeddingArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Print an aligned policy table to stdout; the JSON report then only
    /// goes to `--out`.
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub embed: EmbeddingArgs,
    /// Selected item ids, one per line, or a `solve` report.
    #[arg(long)]
    pub selection: PathBuf,
    /// Also report coverage after warm-starting at this quantile.
    #[arg(long)]
    pub q: Option<f64>,
}

/// Settings readable from `--config`. Relative paths resolve against the
/// config file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<CatalogFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diversity_mode: Option<DiversityMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_budget_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 1;
        }
        // Fails only if a pool already exists (e.g. repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Warmstart(a) => cmd_warmstart(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Coverage(a) => cmd_coverage(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn read_config(path: &Option<PathBuf>) -> CliResult<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|_| CliError::Data(Error::Config(format!("config not found: {}", path.display()))))?;
    let mut cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display(), e.line(), e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    if let Some(c) = &cfg.catalog {
        cfg.catalog = Some(base.join(c));
    }
    if let Some(spec) = &cfg.embedding {
        if let Some(p) = spec.strip_prefix("file:") {
            cfg.embedding = Some(format!("file:{}", base.join(p).display()));
        }
    }
    Ok(cfg)
}

/// Merges flags over the config file.
fn merge(cfg: &mut RunConfig, input: &InputArgs, embed: &EmbeddingArgs) {
    if input.catalog.is_some() {
        cfg.catalog = input.catalog.clone();
    }
    if input.format.is_some() {
        cfg.format = input.format;
    }
    if let Some(c) = &input.categories {
        cfg.categories = Some(c.split(',').map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect());
    }
    if input.pairs.is_some() {
        cfg.pairs = input.pairs.clone();
    }
    if embed.embedding.is_some() {
        cfg.embedding = embed.embedding.clone();
    }
    if embed.metric.is_some() {
        cfg.metric = embed.metric;
    }
    if embed.vocab_size.is_some() {
        cfg.vocab_size = embed.vocab_size;
    }
}

struct Loaded {
    catalog: Catalog,
    incidence: IncidenceMatrix,
    inputs: Vec<InputDigest>,
}

fn load_inputs(cfg: &mut RunConfig) -> CliResult<Loaded> {
    let Some(path) = cfg.catalog.clone() else {
        return usage("--catalog is required");
    };
    if !path.is_file() {
        return Err(Error::Config(format!("catalog not found: {}", path.display())).into());
    }
    let format = cfg.format.unwrap_or_else(|| CatalogFormat::from_path(&path));
    cfg.format = Some(format);
    let catalog = load_catalog(&path, format)?;
    let categories = cfg.categories.clone().unwrap_or_else(|| catalog.categories.clone());
    cfg.categories = Some(categories.clone());
    let pairs = match &cfg.pairs {
        Some(p) => parse_pairs(p).or_else(|e| usage(e.to_string()))?,
        None => Vec::new(),
    };
    let incidence = build_incidence(&catalog, &categories, &pairs)?;
    let inputs = vec![InputDigest::of_file(&path)?];
    Ok(Loaded {
        catalog,
        incidence,
        inputs,
    })
}

fn load_embedding(cfg: &mut RunConfig, loaded: &mut Loaded) -> CliResult<EmbeddingMatrix> {
    let spec = cfg.embedding.get_or_insert_with(|| "tfidf".into()).clone();
    let e = if spec == "tfidf" {
        let vocab = *cfg.vocab_size.get_or_insert(DEFAULT_VOCAB_SIZE);
        tfidf_embed(&loaded.catalog, vocab, true)?
    } else if let Some(p) = spec.strip_prefix("file:") {
        let path = PathBuf::from(p);
        if !path.is_file() {
            return Err(Error::Config(format!("embedding not found: {}", path.display())).into());
        }
        loaded.inputs.push(InputDigest::of_file(&path)?);
        load_embeddings(&path, &loaded.catalog)?
    } else {
        return usage(format!("--embedding must be `tfidf` or `file:<path>`, got `{spec}`"));
    };
    let metric = *cfg.metric.get_or_insert(e.metric());
    Ok(e.with_metric(metric)?)
}

fn read_ids(path: &Path) -> CliResult<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::parse(path.display(), e.line(), e.to_string()))?;
        let ids = v
            .pointer("/final/item_ids")
            .and_then(|ids| serde_json::from_value::<Vec<String>>(ids.clone()).ok())
            .ok_or_else(|| Error::Config(format!("{}: no final selection in report", path.display())))?;
        return Ok(ids);
    }
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

fn write_output(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e).into()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e).into())
        }
    }
}

fn finish<T: Serialize>(
    command: &str,
    cfg: &RunConfig,
    seed: u64,
    inputs: Vec<InputDigest>,
    input: &InputArgs,
    started: Instant,
    body: T,
) -> CliResult<()> {
    let mut manifest = RunManifest::new(command, serde_json::to_value(cfg).map_err(Error::from)?, seed, inputs);
    if input.timing {
        manifest.wall_time_ms = Some(started.elapsed().as_millis() as u64);
    }
    write_output(&input.out, &Report::new(manifest, body).to_json()?)
}

#[derive(Serialize)]
struct SolveBody {
    #[serde(flatten)]
    result: crate::isp::IspResult,
    incidence: crate::catalog::IncidenceReport,
}

pub fn parse_diversity_mode(s: &str) -> Result<DiversityMode, Error> {
    match s {
        "cardinality_bound" => Ok(DiversityMode::CardinalityBound),
        "warm_start" => Ok(DiversityMode::WarmStart),
        other => Err(Error::Config(format!("unknown diversity mode `{other}`"))),
    }
}

fn read_preferences(path: &Path, catalog: &Catalog) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut mult = vec![1.0; catalog.len()];
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, value) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::parse(path.display(), n + 1, "expected `<id> <multiplier>`"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|e| Error::parse(path.display(), n + 1, format!("{e}")))?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::parse(path.display(), n + 1, "multiplier must be non-negative").into());
        }
        let i = catalog.index_of(id).ok_or_else(|| Error::UnknownItem(id.to_owned()))?;
        mult[i] = value;
    }
    Ok(mult)
}

fn cmd_solve(args: SolveArgs) -> CliResult<()> {
    let started = Instant::now();
    let mut cfg = read_config(&args.input.config)?;
    merge(&mut cfg, &args.input, &args.embed);
    if args.t.is_some() {
        cfg.t = args.t;
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if args.backend.is_some() {
        cfg.backend = args.backend;
    }
    if let Some(m) = &args.diversity_mode {
        cfg.diversity_mode = Some(parse_diversity_mode(m).or_else(|e| usage(e.to_string()))?);
    }
    if args.time_budget_ms.is_some() {
        cfg.time_budget_ms = args.time_budget_ms;
    }
    if cfg.t == Some(0) {
        return usage("--t must be at least 1");
    }

    let mut loaded = load_inputs(&mut cfg)?;
    let embedding = load_embedding(&mut cfg, &mut loaded)?;
    let defaults = IspConfig::default();
    let mut isp = IspConfig {
        t: cfg.t,
        seed: *cfg.seed.get_or_insert(0),
        backends: LevelBackends::all(*cfg.backend.get_or_insert(Backend::Auto)),
        time_budget_ms: *cfg.time_budget_ms.get_or_insert(defaults.time_budget_ms),
        metric: None,
        diversity_mode: *cfg.diversity_mode.get_or_insert(DiversityMode::default()),
        strict: args.strict,
        ..defaults
    };
    if let Some(p) = &args.preferences {
        isp.cost_multipliers = Some(read_preferences(p, &loaded.catalog)?);
        loaded.inputs.push(InputDigest::of_file(p)?);
    }
    let result = solve_isp(&loaded.incidence, &embedding, &isp)?;
    if let Some(path) = &args.dump_instance {
        let inst = CoverInstance::weighted(&loaded.incidence, result.costs.clone());
        InstanceFile::from_instance(&inst).save(path)?;
    }
    let body = SolveBody {
        incidence: loaded.incidence.report(),
        result,
    };
    let seed = isp.seed;
    finish("solve", &cfg, seed, loaded.inputs, &args.input, started, body)
}

#[derive(Serialize)]
struct WarmstartBody {
    warmstart: WarmStartMap,
    coverage_before: CoverageReport,
    coverage_after: CoverageReport,
    unit_coverage: f64,
}

fn cmd_warmstart(args: WarmstartArgs) -> CliResult<()> {
    let started = Instant::now();
    let mut cfg = read_config(&args.input.config)?;
    merge(&mut cfg, &args.input, &args.embed);
    if args.q.is_some() {
        cfg.q = args.q;
    }
    let Some(q) = cfg.q else {
        return usage("--q is required");
    };
    let mut loaded = load_inputs(&mut cfg)?;
    let embedding = load_embedding(&mut cfg, &mut loaded)?;
    let warm = read_ids(&args.warm)?;
    loaded.inputs.push(InputDigest::of_file(&args.warm)?);
    let cold = match &args.cold {
        Some(p) => {
            loaded.inputs.push(InputDigest::of_file(p)?);
            read_ids(p)?
        }
        None => loaded
            .catalog
            .items
            .iter()
            .map(|it| it.id.clone())
            .filter(|id| !warm.contains(id))
            .collect(),
    };
    let map = warm_start(&warm, &cold, &embedding, q)?;
    let before = coverage_of_columns(&loaded.incidence, &columns_of(&loaded.incidence, &warm)?);
    let after = post_warmstart_coverage(&map, &loaded.incidence)?;
    let unit = unit_coverage(warm.len().max(1), &map, &loaded.incidence)?;
    let body = WarmstartBody {
        warmstart: map,
        coverage_before: before,
        coverage_after: after,
        unit_coverage: unit,
    };
    finish("warmstart", &cfg, 0, loaded.inputs, &args.input, started, body)
}

#[derive(Serialize)]
struct SimulateBody {
    #[serde(flatten)]
    result: SimulationResult,
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let started = Instant::now();
    if args.input.config.is_none() {
        return usage("--config is required");
    }
    let mut cfg = read_config(&args.input.config)?;
    merge(&mut cfg, &args.input, &args.embed);
    let Some(mut sim) = cfg.simulation.clone() else {
        return usage("config has no `simulation` section");
    };
    if let Some(seed) = args.seed {
        sim.seed = seed;
    }
    if let Some(q) = args.q.or(cfg.q) {
        sim.q = q;
    }
    let mut loaded = load_inputs(&mut cfg)?;
    let embedding = load_embedding(&mut cfg, &mut loaded)?;
    if let Some(p) = &args.input.config {
        loaded.inputs.push(InputDigest::of_file(p)?);
    }
    let result = crate::explore::simulate(&loaded.incidence, &embedding, &sim)?;
    if args.table {
        write_output(&None, &result.table())?;
        if args.input.out.is_none() {
            return Ok(());
        }
    }
    let seed = sim.seed;
    cfg.simulation = Some(sim);
    finish("simulate", &cfg, seed, loaded.inputs, &args.input, started, SimulateBody { result })
}

#[derive(Serialize)]
struct CoverageBody {
    coverage: CoverageReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    coverage_after_warmstart: Option<CoverageReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unit_coverage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    warmstarted: Option<usize>,
}

fn cmd_coverage(args: CoverageArgs) -> CliResult<()> {
    let started = Instant::now();
    let mut cfg = read_config(&args.input.config)?;
    merge(&mut cfg, &args.input, &args.embed);
    if args.q.is_some() {
        cfg.q = args.q;
    }
    let mut loaded = load_inputs(&mut cfg)?;
    let ids = read_ids(&args.selection)?;
    loaded.inputs.push(InputDigest::of_file(&args.selection)?);
    let cols = columns_of(&loaded.incidence, &ids)?;
    let report = coverage_of_columns(&loaded.incidence, &cols);
    let mut body = CoverageBody {
        coverage: report,
        coverage_after_warmstart: None,
        unit_coverage: None,
        warmstarted: None,
    };
    if let Some(q) = cfg.q {
        if ids.is_empty() {
            return Err(Error::EmptyWarmSet.into());
        }
        let embedding = load_embedding(&mut cfg, &mut loaded)?;
        let cold: Vec<String> = loaded
            .catalog
            .item_ids()
            .into_iter()
            .filter(|id| !ids.contains(id))
            .collect();
        let map = warm_start(&ids, &cold, &embedding, q)?;
        body.coverage_after_warmstart = Some(post_warmstart_coverage(&map, &loaded.incidence)?);
        body.unit_coverage = Some(unit_coverage(ids.len(), &map, &loaded.incidence)?);
        body.warmstarted = Some(map.assignments.len());
    }
    finish("coverage", &cfg, 0, loaded.inputs, &args.input, started, body)
}
