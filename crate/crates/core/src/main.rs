use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use unionbench::benchmark::Benchmark;
use unionbench::eval::{evaluate, MapVariant};
use unionbench::generation::{clear_benchmark, generate_benchmark, GenConfig, GenerationError, Range, SpecRanges};
use unionbench::profiler::{compare_profiles, profile_benchmark, ProfileError, ProfileOptions};
use unionbench::provider::vocab::default_topics;
use unionbench::provider::{connect, Provider, ProviderConfig, ProviderError, ProviderKind};
use unionbench::search::{
    classification_log_csv, read_results, results_csv, search_benchmark, select_icl_examples,
    CachingEmbedder, IclPool, Measure, Method, SearchConfig, SearchError, TwoPhaseConfig,
};
use unionbench::sparsity::{materialize_variants, SparsityLevel};

/// Generate, perturb, profile, search and evaluate table union search benchmarks.
#[derive(Parser, Debug)]
#[command(name = "unionbench", version)]
struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true, env = "UNIONBENCH_JOBS")]
    jobs: Option<usize>,

    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Also write a run manifest (command, settings, timings) to this path.
    #[arg(long, global = true)]
    run_manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a benchmark with an LLM provider.
    Generate(GenerateArgs),
    /// Write copies of a benchmark with a share of cells emptied.
    Sparsify(SparsifyArgs),
    /// Report table counts, shapes, column types, density and uniqueness.
    Profile(ProfileArgs),
    /// Rank data lake tables for every query of a benchmark.
    Search(SearchArgs),
    /// Score a results file against a benchmark's ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ProviderChoice {
    Stub,
    Remote,
}

#[derive(Args, Debug)]
struct ProviderArgs {
    #[arg(long, value_enum, default_value = "stub", env = "UGEN_PROVIDER")]
    provider: ProviderChoice,

    /// Base URL of an OpenAI-compatible API.
    #[arg(long, env = "UGEN_ENDPOINT")]
    endpoint: Option<String>,

    #[arg(long, env = "UGEN_MODEL")]
    model: Option<String>,

    #[arg(long, env = "UGEN_EMBEDDING_MODEL")]
    embedding_model: Option<String>,

    /// Environment variable holding the API key.
    #[arg(long, default_value = "UGEN_API_KEY")]
    api_key_env: String,

    /// Concurrent requests to the provider.
    #[arg(long, default_value_t = 4)]
    max_in_flight: usize,

    /// Extra attempts after a transient provider failure.
    #[arg(long, default_value_t = 3)]
    retries: u32,

    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
}

impl ProviderArgs {
    fn config(&self) -> ProviderConfig {
        ProviderConfig {
            kind: match self.provider {
                ProviderChoice::Stub => ProviderKind::Stub,
                ProviderChoice::Remote => ProviderKind::Remote,
            },
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            embedding_model: self.embedding_model.clone(),
            api_key_env: self.api_key_env.clone(),
            timeout_secs: self.timeout,
            retries: self.retries,
            max_in_flight: self.max_in_flight,
            ..ProviderConfig::default()
        }
    }
}

fn parse_range(s: &str) -> Result<Range, String> {
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    let p = |x: &str| x.trim().parse::<usize>().map_err(|_| format!("invalid range {s:?}, expected MIN-MAX"));
    let r = Range::new(p(a)?, p(b)?);
    if r.min == 0 || r.min > r.max {
        return Err(format!("range {s:?} must satisfy 1 <= MIN <= MAX"));
    }
    Ok(r)
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Number of built-in topics to use, or a file with one topic per line.
    #[arg(long)]
    topics: Option<String>,

    #[arg(long, default_value_t = 20)]
    pairs_per_topic: usize,

    #[arg(long, default_value_t = 0.5)]
    unionable_ratio: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Rows per table, as MIN-MAX.
    #[arg(long, default_value = "4-12", value_parser = parse_range)]
    rows: Range,

    /// Columns per table, as MIN-MAX.
    #[arg(long, default_value = "5-14", value_parser = parse_range)]
    cols: Range,

    /// Words per cell, as MIN-MAX.
    #[arg(long, default_value = "1-8", value_parser = parse_range)]
    words: Range,

    #[arg(long)]
    out: PathBuf,

    /// Replace a benchmark already present in the output directory.
    #[arg(long)]
    force: bool,

    #[command(flatten)]
    provider: ProviderArgs,
}

#[derive(Args, Debug)]
struct SparsifyArgs {
    /// Benchmark directory.
    #[arg(long = "in")]
    input: PathBuf,

    /// Null percentages, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,5,10,15,20")]
    levels: Vec<SparsityLevel>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Parent directory for the variants (default: next to the input).
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Replace existing variant directories.
    #[arg(long)]
    force: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    /// Benchmark directory; give several to compare them.
    #[arg(long, required = true)]
    benchmark: Vec<PathBuf>,

    #[arg(long, value_enum, default_value = "text")]
    format: Format,

    /// Extra cell value to count as null (repeatable), e.g. NaN.
    #[arg(long)]
    null_literal: Vec<String>,

    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MeasureChoice {
    Overlap,
    Embed,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long)]
    benchmark: PathBuf,

    #[arg(long, value_parser = ["overlap", "embed", "two-phase"], default_value = "overlap")]
    method: String,

    #[arg(long, default_value_t = 10)]
    k: usize,

    /// Two-phase: candidates retrieved per result slot.
    #[arg(long, default_value_t = 2)]
    multiplier: usize,

    /// Two-phase: measure used to retrieve candidates.
    #[arg(long, value_enum, default_value = "overlap")]
    base_measure: MeasureChoice,

    /// Two-phase: benchmark supplying labeled in-context examples.
    #[arg(long)]
    icl_pool: Option<PathBuf>,

    /// Two-phase: number of in-context examples.
    #[arg(long, default_value_t = 0)]
    icl_examples: usize,

    /// Two-phase: table rows shown to the classifier.
    #[arg(long, default_value_t = 1)]
    row_limit: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Results CSV.
    #[arg(long)]
    out: PathBuf,

    /// Two-phase: classification log CSV (default: next to the results).
    #[arg(long)]
    log: Option<PathBuf>,

    #[command(flatten)]
    provider: ProviderArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MapChoice {
    PrefixMean,
    HitPositions,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    results: PathBuf,

    #[arg(long)]
    benchmark: PathBuf,

    /// Cutoffs, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    k: Vec<usize>,

    /// Write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "text")]
    format: Format,

    /// How MAP averages precision over ranks.
    #[arg(long, value_enum, default_value = "prefix-mean")]
    map_variant: MapChoice,
}

/// Failure classes, mapped to exit codes 1, 2 and 3.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(anyhow::Error),
    Provider(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Provider(_) => 3,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<ProviderError> for Failure {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::InvalidConfig(m) => Failure::Usage(m),
            other => Failure::Provider(other.into()),
        }
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Provider(p) => p.into(),
            SearchError::InvalidK
            | SearchError::InvalidMultiplier
            | SearchError::InvalidRowLimit
            | SearchError::ProviderRequired(_)
            | SearchError::PoolTooSmall { .. } => Failure::Usage(e.to_string()),
            other => Failure::Data(other.into()),
        }
    }
}

#[derive(Serialize)]
struct RunManifest {
    tool_version: &'static str,
    command: Vec<String>,
    seed: Option<u64>,
    provider: Option<ProviderConfig>,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    warnings: usize,
}

impl RunManifest {
    fn new() -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: std::env::args().collect(),
            seed: None,
            provider: None,
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
            inputs: Vec::new(),
            outputs: Vec::new(),
            warnings: 0,
        }
    }

    /// Writes via a temporary file and rename so readers never see a partial file.
    fn write(mut self, path: &Path) -> anyhow::Result<()> {
        self.finished_unix_ms = now_ms();
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(&self)? + "\n")
            .with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn resolve_topics(spec: Option<&str>) -> Result<Vec<String>, Failure> {
    let builtin = default_topics();
    let Some(spec) = spec else {
        return Ok(builtin);
    };
    if let Ok(n) = spec.trim().parse::<usize>() {
        if n == 0 || n > builtin.len() {
            return Err(Failure::Usage(format!(
                "--topics {n}: choose between 1 and {} built-in topics",
                builtin.len()
            )));
        }
        return Ok(builtin.into_iter().take(n).collect());
    }
    let text = fs::read_to_string(spec)
        .map_err(|e| Failure::Usage(format!("--topics {spec}: {e}")))?;
    let topics: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();
    if topics.is_empty() {
        return Err(Failure::Usage(format!("--topics {spec}: no topics in file")));
    }
    Ok(topics)
}

fn cmd_generate(a: GenerateArgs, jobs: usize, manifest: &mut RunManifest) -> Result<(), Failure> {
    let cfg = GenConfig {
        topics: resolve_topics(a.topics.as_deref())?,
        pairs_per_topic: a.pairs_per_topic,
        unionable_ratio: a.unionable_ratio,
        seed: a.seed,
        ranges: SpecRanges {
            rows: a.rows,
            cols: a.cols,
            textuality: a.words,
        },
        jobs,
        ..GenConfig::default()
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let pcfg = a.provider.config();
    let provider = connect(&pcfg)?;
    manifest.seed = Some(a.seed);
    manifest.provider = Some(pcfg);
    manifest.outputs.push(a.out.clone());

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    if a.force {
        clear_benchmark(&a.out).map_err(anyhow::Error::from)?;
    }
    let m = match generate_benchmark(&cfg, provider.as_ref(), &a.out) {
        Ok(m) => m,
        Err(GenerationError::OutputNotEmpty(p)) => {
            return Err(Failure::Usage(format!(
                "{} already holds a benchmark; pass --force to replace it",
                p.display()
            )))
        }
        Err(GenerationError::InvalidConfig(m)) => return Err(Failure::Usage(m)),
        Err(e) => return Err(Failure::Data(e.into())),
    };
    manifest.warnings = m.warnings.len();
    eprintln!(
        "{}: {} query + {} data lake tables, {} unionable / {} non-unionable pairs, {} warnings",
        a.out.display(),
        m.query_tables,
        m.datalake_tables,
        m.unionable_pairs,
        m.non_unionable_pairs,
        m.warnings.len()
    );
    if !m.skipped.is_empty() {
        return Err(Failure::Provider(anyhow!(
            "{} pair(s) failed twice and were skipped; see {}",
            m.skipped.len(),
            a.out.join(unionbench::generation::RESUME_LOG).display()
        )));
    }
    Ok(())
}

fn cmd_sparsify(a: SparsifyArgs, manifest: &mut RunManifest) -> Result<(), Failure> {
    manifest.seed = Some(a.seed);
    manifest.inputs.push(a.input.clone());
    let dirs = materialize_variants(&a.input, &a.levels, a.seed, a.out_dir.as_deref(), a.force)
        .map_err(|e| match e {
            unionbench::sparsity::SparsityError::DestinationExists(p) => Failure::Usage(format!(
                "{} already exists; pass --force to replace it",
                p.display()
            )),
            other => Failure::Data(other.into()),
        })?;
    for d in &dirs {
        println!("{}", d.display());
    }
    manifest.outputs = dirs;
    Ok(())
}

fn cmd_profile(a: ProfileArgs, manifest: &mut RunManifest) -> Result<(), Failure> {
    let opts = ProfileOptions {
        null_literals: a.null_literal,
    };
    manifest.inputs = a.benchmark.clone();
    let profiles = a
        .benchmark
        .iter()
        .map(|d| profile_benchmark(d, &opts))
        .collect::<Result<Vec<_>, ProfileError>>()
        .map_err(|e| Failure::Data(e.into()))?;
    let report = if profiles.len() == 1 {
        match a.format {
            Format::Json => serde_json::to_string_pretty(&profiles[0]).map_err(anyhow::Error::from)? + "\n",
            Format::Text => profiles[0].to_text(),
        }
    } else {
        let cmp = compare_profiles(&profiles).map_err(|e| Failure::Data(e.into()))?;
        match a.format {
            Format::Json => serde_json::to_string_pretty(&cmp).map_err(anyhow::Error::from)? + "\n",
            Format::Text => cmp.to_text(),
        }
    };
    match a.out {
        Some(p) => {
            write_file(&p, &report)?;
            manifest.outputs.push(p);
        }
        None => print!("{report}"),
    }
    Ok(())
}

fn cmd_search(a: SearchArgs, manifest: &mut RunManifest) -> Result<(), Failure> {
    let method: Method = a.method.parse().map_err(Failure::Usage)?;
    let bench = Benchmark::load(&a.benchmark).map_err(|e| Failure::Data(e.into()))?;
    manifest.seed = Some(a.seed);
    manifest.inputs.push(a.benchmark.clone());

    let needs_provider = method != Method::Overlap || a.base_measure == MeasureChoice::Embed;
    let provider: Option<Box<dyn Provider>> = if needs_provider {
        let pcfg = a.provider.config();
        manifest.provider = Some(pcfg.clone());
        Some(connect(&pcfg)?)
    } else {
        None
    };

    let mut examples = Vec::new();
    if a.icl_examples > 0 {
        if method != Method::TwoPhase {
            return Err(Failure::Usage("--icl-examples only applies to two-phase search".into()));
        }
        let pool_dir = a
            .icl_pool
            .as_ref()
            .ok_or_else(|| Failure::Usage("--icl-examples needs --icl-pool".into()))?;
        let pool = IclPool::from_benchmark(&Benchmark::load(pool_dir).map_err(|e| Failure::Data(e.into()))?);
        manifest.inputs.push(pool_dir.clone());
        let p = provider.as_deref().expect("two-phase has a provider");
        let embedder = CachingEmbedder::new(p);
        examples = select_icl_examples(&bench.queries, &bench.id, &pool, a.icl_examples, &embedder)?;
        info!("selected {} in-context examples", examples.len());
    }

    let cfg = SearchConfig {
        method,
        base_measure: match a.base_measure {
            MeasureChoice::Overlap => Measure::Overlap,
            MeasureChoice::Embed => Measure::Embed,
        },
        two_phase: TwoPhaseConfig {
            k: a.k,
            multiplier: a.multiplier,
            row_limit: a.row_limit,
            examples,
            seed: a.seed,
        },
    };
    let run = search_benchmark(&bench, &cfg, provider.as_deref())?;
    write_file(&a.out, &results_csv(&run.results))?;
    manifest.outputs.push(a.out.clone());
    if method == Method::TwoPhase {
        let log_path = a.log.clone().unwrap_or_else(|| {
            let stem = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            a.out.with_file_name(format!("{stem}_classifications.csv"))
        });
        write_file(&log_path, &classification_log_csv(&run.classifications))?;
        manifest.outputs.push(log_path);
        manifest.warnings = run.unparseable + run.provider_errors;
        if run.unparseable + run.provider_errors > 0 {
            warn!(
                "{} unparseable answers and {} provider errors counted as non-unionable",
                run.unparseable, run.provider_errors
            );
        }
    }
    eprintln!("{}: {} queries, method {method}", a.out.display(), run.results.len());
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, manifest: &mut RunManifest) -> Result<(), Failure> {
    if a.k.is_empty() || a.k.contains(&0) {
        return Err(Failure::Usage("--k values must be at least 1".into()));
    }
    manifest.inputs = vec![a.results.clone(), a.benchmark.clone()];
    let results = read_results(&a.results)?;
    let gt = unionbench::benchmark::read_groundtruth(&a.benchmark.join(unionbench::benchmark::GROUNDTRUTH_FILE))
        .map_err(|e| Failure::Data(e.into()))?;
    let variant = match a.map_variant {
        MapChoice::PrefixMean => MapVariant::PrefixMean,
        MapChoice::HitPositions => MapVariant::HitPositions,
    };
    let report = evaluate(&results, &gt, &a.k, variant).map_err(|e| Failure::Data(e.into()))?;
    manifest.warnings = report.warnings.len();
    let json = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)? + "\n";
    if let Some(p) = &a.report {
        write_file(p, &json)?;
        manifest.outputs.push(p.clone());
    }
    match a.format {
        Format::Json => print!("{json}"),
        Format::Text => print!("{}", report.to_text()),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let jobs = cli.jobs.unwrap_or(0);
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let mut manifest = RunManifest::new();
    let default_manifest = match &cli.command {
        Command::Generate(a) => Some(a.out.join("run_manifest.json")),
        _ => None,
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a, jobs, &mut manifest),
        Command::Sparsify(a) => cmd_sparsify(a, &mut manifest),
        Command::Profile(a) => cmd_profile(a, &mut manifest),
        Command::Search(a) => cmd_search(a, &mut manifest),
        Command::Evaluate(a) => cmd_evaluate(a, &mut manifest),
    };
    let target = cli.run_manifest.or(default_manifest.filter(|p| p.parent().is_some_and(Path::is_dir)));
    if let Some(path) = target {
        if let Err(e) = manifest.write(&path) {
            warn!("run manifest: {e:#}");
        }
    }
    result
}

/// Joins an error chain, skipping causes whose text the outer message already ends with.
fn chain_text(e: &anyhow::Error) -> String {
    let mut out = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !out.ends_with(&c) {
            out.push_str(": ");
            out.push_str(&c);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Data(e) | Failure::Provider(e) => eprintln!("error: {}", chain_text(e)),
            }
            ExitCode::from(f.code())
        }
    }
}
