//! Benchmark generation: sample pair specs, prompt a provider, parse the two
//! tables it returns and assemble a benchmark directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmark::{
    groundtruth_csv, io_err, keys_csv, GroundTruthPair, KeyEntry, Label, LayoutError, DATALAKE_DIR,
    GROUNDTRUTH_FILE, KEYS_FILE, MANIFEST_FILE, QUERY_DIR,
};
use crate::provider::{
    CompletionRequest, Provider, ProviderError, DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE,
};
use crate::seed::{derive, hash64};
use crate::table::{parse_pipe_table, serialize_csv, Table, TableError};

pub const RESUME_LOG: &str = "resume.log";

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("completion has no \"{0}:\" section")]
    MissingSection(&'static str),
    #[error("{section}: {source}")]
    Table {
        section: &'static str,
        #[source]
        source: TableError,
    },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("output directory {0} already contains a benchmark")]
    OutputNotEmpty(PathBuf),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

/// Requested size and verbosity of one table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TableShape {
    pub rows: usize,
    pub cols: usize,
    /// Words per cell.
    pub textuality: usize,
}

/// Parameters of one generated table pair.
///
/// `unionable_cols` is `Some(n)` for a unionable pair (the number of
/// semantically shared columns) and `None` otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSpec {
    pub pair_id: String,
    pub topic: String,
    pub t1: TableShape,
    pub t2: TableShape,
    pub unionable_cols: Option<usize>,
}

impl PairSpec {
    pub fn is_unionable(&self) -> bool {
        self.unionable_cols.is_some()
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, s) in [("table 1", self.t1), ("table 2", self.t2)] {
            if s.rows == 0 || s.cols == 0 || s.textuality == 0 {
                return Err(format!("{name} shape must be positive: {s:?}"));
            }
        }
        if let Some(u) = self.unionable_cols {
            if u == 0 || u > self.t1.cols.min(self.t2.cols) {
                return Err(format!("unionable_cols {u} outside [1, {}]", self.t1.cols.min(self.t2.cols)));
            }
        }
        Ok(())
    }
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub min: usize,
    pub max: usize,
}

impl Range {
    pub const fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        rng.random_range(self.min..=self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecRanges {
    pub rows: Range,
    pub cols: Range,
    pub textuality: Range,
}

impl Default for SpecRanges {
    fn default() -> Self {
        Self {
            rows: Range::new(4, 12),
            cols: Range::new(5, 14),
            textuality: Range::new(1, 8),
        }
    }
}

impl SpecRanges {
    pub fn validate(&self) -> Result<(), String> {
        for (name, r) in [("rows", self.rows), ("cols", self.cols), ("textuality", self.textuality)] {
            if r.min == 0 || r.min > r.max {
                return Err(format!("{name} range [{}, {}] is empty or includes 0", r.min, r.max));
            }
        }
        Ok(())
    }
}

fn sample_shape(ranges: &SpecRanges, rng: &mut impl Rng) -> TableShape {
    TableShape {
        rows: ranges.rows.sample(rng),
        cols: ranges.cols.sample(rng),
        textuality: ranges.textuality.sample(rng),
    }
}

/// Samples a pair spec. The caller decides whether the pair is unionable;
/// for unionable pairs the shared column count is uniform in
/// `[1, min(t1.cols, t2.cols)]`. Ranges must be valid.
pub fn sample_pair_spec(
    topic: &str,
    pair_id: &str,
    ranges: &SpecRanges,
    unionable: bool,
    rng: &mut impl Rng,
) -> PairSpec {
    let t1 = sample_shape(ranges, rng);
    sample_pair_spec_with_t1(topic, pair_id, t1, ranges, unionable, rng)
}

/// Like [`sample_pair_spec`] with the table 1 shape held fixed.
pub fn sample_pair_spec_with_t1(
    topic: &str,
    pair_id: &str,
    t1: TableShape,
    ranges: &SpecRanges,
    unionable: bool,
    rng: &mut impl Rng,
) -> PairSpec {
    let t2 = sample_shape(ranges, rng);
    let unionable_cols = unionable.then(|| rng.random_range(1..=t1.cols.min(t2.cols)));
    PairSpec {
        pair_id: pair_id.to_string(),
        topic: topic.to_string(),
        t1,
        t2,
        unionable_cols,
    }
}

const FORMAT_BLOCK: &str = "Answer the above task in the following format:\nTable 1: {table 1}\nTable 2: {table 2}";
const KEY_LINE: &str = "Key: {key column in Table 1}";

pub fn build_generation_prompt(spec: &PairSpec) -> String {
    let mut p = format!(
        "Create 2 tables with cells separated by |. Table 1 has {} rows, {} columns and {} words, related to {}. Table 2 has {} rows, {} columns and {} words, related to {}.",
        spec.t1.rows, spec.t1.cols, spec.t1.textuality, spec.topic,
        spec.t2.rows, spec.t2.cols, spec.t2.textuality, spec.topic,
    );
    match spec.unionable_cols {
        Some(u) => p.push_str(&format!(
            " They can be unioned because they have only {u} semantically common columns, and at least 1 related row values across the tables."
        )),
        None => p.push_str(" They cannot be unioned because they have 0 semantically common columns."),
    }
    p.push('\n');
    p.push_str(FORMAT_BLOCK);
    if spec.is_unionable() {
        p.push('\n');
        p.push_str(KEY_LINE);
    }
    p
}

static PROMPT_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^Create 2 tables with cells separated by \|\. Table 1 has (\d+) rows, (\d+) columns and (\d+) words, related to (.+?)\. Table 2 has (\d+) rows, (\d+) columns and (\d+) words, related to (.+?)\. They (?:can be unioned because they have only (\d+) semantically common columns|cannot be unioned because they have 0 semantically common columns)",
    )
    .expect("valid regex")
});

/// Recovers the spec from a prompt built by [`build_generation_prompt`].
/// The pair id is not part of the prompt and comes back as `"prompt"`.
pub fn parse_generation_prompt(prompt: &str) -> Option<PairSpec> {
    let c = PROMPT_RE.captures(prompt.trim_start())?;
    let n = |i: usize| c.get(i).and_then(|m| m.as_str().parse::<usize>().ok());
    let spec = PairSpec {
        pair_id: "prompt".into(),
        topic: c[4].to_string(),
        t1: TableShape { rows: n(1)?, cols: n(2)?, textuality: n(3)? },
        t2: TableShape { rows: n(5)?, cols: n(6)?, textuality: n(7)? },
        unionable_cols: match c.get(9) {
            Some(_) => Some(n(9)?),
            None => None,
        },
    };
    spec.validate().ok()?;
    Some(spec)
}

/// Two parsed tables plus the key column named by the completion.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPair {
    pub table1: Table,
    pub table2: Table,
    /// A column of `table1`; present iff the spec is unionable.
    pub key: Option<String>,
    pub spec: PairSpec,
    pub warnings: Vec<String>,
}

static MARKER_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^[\s*_#>]*(table\s*1|table\s*2|key)\s*[*_]*\s*:[*_]*\s*(.*)$").expect("valid regex")
});

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    T1,
    T2,
    Key,
}

fn trim_decoration(s: &str) -> &str {
    s.trim().trim_matches(|c: char| matches!(c, '*' | '_' | '`' | '"' | '\'')).trim()
}

/// Splits a completion on its `Table 1:`, `Table 2:` and `Key:` markers and
/// parses both tables. Deviations from the requested shape are reported as
/// warnings, never errors.
pub fn parse_generation_output(text: &str, spec: &PairSpec) -> Result<GeneratedPair, GenerationError> {
    let mut blocks: [Option<String>; 3] = [None, None, None];
    let mut current: Option<Section> = None;
    let mut warnings = Vec::new();
    for line in text.lines() {
        if let Some(c) = MARKER_RE.captures(line) {
            let label = c[1].to_ascii_lowercase().replace(char::is_whitespace, "");
            let section = match label.as_str() {
                "table1" => Section::T1,
                "table2" => Section::T2,
                _ => Section::Key,
            };
            let slot = &mut blocks[section as usize];
            if slot.is_some() {
                warnings.push(format!("repeated {label} section ignored"));
                current = None;
                continue;
            }
            let rest = trim_decoration(&c[2]);
            let mut block = String::new();
            if !rest.is_empty() {
                block.push_str(rest);
                block.push('\n');
            }
            *slot = Some(block);
            current = Some(section);
        } else if let Some(s) = current {
            let block = blocks[s as usize].as_mut().expect("current section exists");
            if s == Section::Key && !block.trim().is_empty() {
                continue;
            }
            block.push_str(line);
            block.push('\n');
        }
    }
    let [b1, b2, bk] = blocks;
    let b1 = b1.ok_or(GenerationError::MissingSection("Table 1"))?;
    let b2 = b2.ok_or(GenerationError::MissingSection("Table 2"))?;

    let mut parse = |block: &str, section: &'static str, name: String| -> Result<Table, GenerationError> {
        let parsed = parse_pipe_table(&name, block)
            .map_err(|source| GenerationError::Table { section, source })?;
        warnings.extend(parsed.warnings.iter().map(|w| format!("{section}: {w}")));
        Ok(parsed.table.with_topic(spec.topic.clone()))
    };
    let table1 = parse(&b1, "table 1", format!("{}_t1", slug(&spec.pair_id)))?;
    let table2 = parse(&b2, "table 2", format!("{}_t2", slug(&spec.pair_id)))?;

    for (label, t, want) in [("table 1", &table1, spec.t1), ("table 2", &table2, spec.t2)] {
        if t.n_rows() != want.rows {
            warnings.push(format!("{label}: {} rows, requested {}", t.n_rows(), want.rows));
        }
        if t.n_cols() != want.cols {
            warnings.push(format!("{label}: {} columns, requested {}", t.n_cols(), want.cols));
        }
    }

    let raw_key = bk
        .as_deref()
        .and_then(|b| b.lines().map(trim_decoration).find(|l| !l.is_empty()))
        .map(str::to_string);
    let key = match (spec.is_unionable(), raw_key) {
        (true, Some(k)) => match resolve_key(&table1, &k) {
            Some(col) => Some(col),
            None => {
                warnings.push(format!(
                    "key {k:?} is not a table 1 column; using {:?}",
                    table1.header()[0]
                ));
                Some(table1.header()[0].clone())
            }
        },
        (true, None) => {
            warnings.push(format!("no key given; using {:?}", table1.header()[0]));
            Some(table1.header()[0].clone())
        }
        (false, Some(k)) => {
            warnings.push(format!("key {k:?} given for a non-unionable pair; dropped"));
            None
        }
        (false, None) => None,
    };

    Ok(GeneratedPair {
        table1,
        table2,
        key,
        spec: spec.clone(),
        warnings,
    })
}

fn resolve_key(t: &Table, key: &str) -> Option<String> {
    let header = t.header();
    header
        .iter()
        .find(|h| h.as_str() == key)
        .or_else(|| header.iter().find(|h| h.trim().eq_ignore_ascii_case(key.trim())))
        .cloned()
}

fn header_set(t: &Table) -> HashSet<String> {
    t.header().iter().map(|h| h.trim().to_lowercase()).collect()
}

fn is_empty_table(t: &Table) -> bool {
    t.n_rows() == 0 || t.n_nulls() == t.n_cells()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// Header names present in both tables (trimmed, case-insensitive).
    pub shared_header_names: usize,
    pub t1_row_delta: i64,
    pub t1_col_delta: i64,
    pub t2_row_delta: i64,
    pub t2_col_delta: i64,
    pub table1_empty: bool,
    pub table2_empty: bool,
    /// Key present iff unionable, and naming a table 1 column.
    pub key_valid: bool,
}

pub fn validate_pair(p: &GeneratedPair) -> ValidationReport {
    let delta = |actual: usize, want: usize| actual as i64 - want as i64;
    let key_valid = match &p.key {
        Some(k) => p.spec.is_unionable() && p.table1.header().contains(k),
        None => !p.spec.is_unionable(),
    };
    ValidationReport {
        shared_header_names: header_set(&p.table1).intersection(&header_set(&p.table2)).count(),
        t1_row_delta: delta(p.table1.n_rows(), p.spec.t1.rows),
        t1_col_delta: delta(p.table1.n_cols(), p.spec.t1.cols),
        t2_row_delta: delta(p.table2.n_rows(), p.spec.t2.rows),
        t2_col_delta: delta(p.table2.n_cols(), p.spec.t2.cols),
        table1_empty: is_empty_table(&p.table1),
        table2_empty: is_empty_table(&p.table2),
        key_valid,
    }
}

/// Lowercase ASCII alphanumerics joined by single underscores.
pub fn slug(s: &str) -> String {
    let mut out = String::new();
    for part in s
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|p| !p.is_empty())
    {
        if !out.is_empty() {
            out.push('_');
        }
        out.push_str(&part.to_ascii_lowercase());
    }
    if out.is_empty() {
        format!("t{:08x}", hash64(&[s.as_bytes()]) as u32)
    } else {
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub topics: Vec<String>,
    pub pairs_per_topic: usize,
    pub unionable_ratio: f64,
    pub seed: u64,
    pub ranges: SpecRanges,
    pub max_tokens: usize,
    pub temperature: f64,
    /// Worker threads for pair generation; 0 uses rayon's default.
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            topics: Vec::new(),
            pairs_per_topic: 20,
            unionable_ratio: 0.5,
            seed: 0,
            ranges: SpecRanges::default(),
            max_tokens: DEFAULT_MAX_TOKENS,
            temperature: DEFAULT_TEMPERATURE,
            jobs: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        let bad = |m: String| Err(GenerationError::InvalidConfig(m));
        if self.topics.is_empty() {
            return bad("no topics".into());
        }
        if self.pairs_per_topic == 0 {
            return bad("pairs_per_topic must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.unionable_ratio) {
            return bad(format!("unionable ratio {} outside [0, 1]", self.unionable_ratio));
        }
        let mut seen = HashSet::new();
        for t in &self.topics {
            if t.trim().is_empty() {
                return bad("blank topic".into());
            }
            if !seen.insert(slug(t)) {
                return bad(format!("duplicate topic {t:?}"));
            }
        }
        self.ranges.validate().map_err(GenerationError::InvalidConfig)
    }

    /// Unionable pairs per topic: `round(ratio * pairs)`.
    pub fn unionable_per_topic(&self) -> usize {
        (self.unionable_ratio * self.pairs_per_topic as f64).round() as usize
    }
}

/// One pair to generate: a primary attempt and a fallback with a fresh spec.
#[derive(Debug, Clone)]
struct PairPlan {
    topic_idx: usize,
    attempts: [(PairSpec, u64); 2],
}

#[derive(Debug)]
enum PairOutcome {
    Done(Box<GeneratedPair>),
    Failed { pair_id: String, errors: Vec<String> },
}

fn pair_id(j: usize, width: usize) -> String {
    format!("p{j:0width$}")
}

fn plan_topic(cfg: &GenConfig, topic_idx: usize) -> Vec<PairPlan> {
    let topic = &cfg.topics[topic_idx];
    let mut rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, &format!("topic:{topic_idx}:{topic}")));
    let p = cfg.pairs_per_topic;
    let n_union = cfg.unionable_per_topic();
    let mut labels: Vec<bool> = (0..p).map(|j| j < n_union).collect();
    labels.shuffle(&mut rng);
    let width = (p.saturating_sub(1)).to_string().len().max(2);
    // Table 1 parameters are fixed per topic so every prompt describes the
    // same query table.
    let t1 = sample_shape(&cfg.ranges, &mut rng);
    labels
        .iter()
        .enumerate()
        .map(|(j, &unionable)| {
            let id = pair_id(j, width);
            let mut attempt = || {
                let spec = sample_pair_spec_with_t1(topic, &id, t1, &cfg.ranges, unionable, &mut rng);
                (spec, rng.random::<u64>())
            };
            let first = attempt();
            let retry = attempt();
            PairPlan {
                topic_idx,
                attempts: [first, retry],
            }
        })
        .collect()
}

fn run_pair(plan: &PairPlan, cfg: &GenConfig, provider: &dyn Provider) -> PairOutcome {
    let mut errors = Vec::new();
    for (spec, seed) in &plan.attempts {
        let req = CompletionRequest {
            prompt: build_generation_prompt(spec),
            max_tokens: cfg.max_tokens,
            temperature: cfg.temperature,
            seed: Some(*seed),
        };
        let result = provider
            .complete(&req)
            .map_err(GenerationError::from)
            .and_then(|text| parse_generation_output(&text, spec));
        match result {
            Ok(pair) => return PairOutcome::Done(Box::new(pair)),
            Err(e) => {
                warn!("{} {}: {e}", spec.topic, spec.pair_id);
                errors.push(e.to_string());
            }
        }
    }
    PairOutcome::Failed {
        pair_id: plan.attempts[0].0.pair_id.clone(),
        errors,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairNote {
    pub topic: String,
    pub pair_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    pub benchmark_id: String,
    pub provider: String,
    pub config: GenConfig,
    pub query_tables: usize,
    pub datalake_tables: usize,
    pub unionable_pairs: usize,
    pub non_unionable_pairs: usize,
    pub warnings: Vec<PairNote>,
    pub skipped: Vec<PairNote>,
}

/// Files written by [`generate_benchmark`] and removed by [`clear_benchmark`].
pub const BENCHMARK_ENTRIES: [&str; 6] = [
    QUERY_DIR,
    DATALAKE_DIR,
    GROUNDTRUTH_FILE,
    KEYS_FILE,
    MANIFEST_FILE,
    RESUME_LOG,
];

/// Removes the entries a previous generation run wrote into `dir`, leaving
/// anything else alone.
pub fn clear_benchmark(dir: &Path) -> Result<(), LayoutError> {
    for e in BENCHMARK_ENTRIES {
        let p = dir.join(e);
        if p.is_dir() {
            fs::remove_dir_all(&p).map_err(io_err(&p))?;
        } else if p.exists() {
            fs::remove_file(&p).map_err(io_err(&p))?;
        }
    }
    Ok(())
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), LayoutError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Generates a full benchmark into `out`, which must not already hold one.
///
/// Per topic, pair labels are a shuffled list with `round(ratio * pairs)`
/// unionable entries. Pairs run in parallel; a failed pair is retried once
/// with a fresh spec and then skipped, with the failure recorded in the
/// manifest and `resume.log`.
pub fn generate_benchmark(
    cfg: &GenConfig,
    provider: &dyn Provider,
    out: &Path,
) -> Result<BenchmarkManifest, GenerationError> {
    cfg.validate()?;
    if BENCHMARK_ENTRIES.iter().any(|e| out.join(e).exists()) {
        return Err(GenerationError::OutputNotEmpty(out.to_path_buf()));
    }

    let plans: Vec<PairPlan> = (0..cfg.topics.len()).flat_map(|i| plan_topic(cfg, i)).collect();
    info!("generating {} pairs over {} topics", plans.len(), cfg.topics.len());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| GenerationError::InvalidConfig(e.to_string()))?;
    let outcomes: Vec<PairOutcome> =
        pool.install(|| plans.par_iter().map(|p| run_pair(p, cfg, provider)).collect());

    let config_json = serde_json::to_string(cfg).expect("config serializes");
    let benchmark_id = format!(
        "bench-{:016x}",
        hash64(&[config_json.as_bytes(), provider.id().as_bytes()])
    );

    let mut queries: Vec<Table> = Vec::new();
    let mut datalake: Vec<Table> = Vec::new();
    let mut groundtruth = Vec::new();
    let mut keys = Vec::new();
    let mut warnings = Vec::new();
    let mut skipped = Vec::new();
    let mut resume = String::new();

    let mut i = 0;
    while i < plans.len() {
        let topic_idx = plans[i].topic_idx;
        let topic = &cfg.topics[topic_idx];
        let tslug = slug(topic);
        let mut query_name: Option<String> = None;
        while i < plans.len() && plans[i].topic_idx == topic_idx {
            match &outcomes[i] {
                PairOutcome::Failed { pair_id, errors } => {
                    for e in errors {
                        resume.push_str(&format!("{topic}\t{pair_id}\t{e}\n"));
                    }
                    skipped.push(PairNote {
                        topic: topic.clone(),
                        pair_id: pair_id.clone(),
                        message: errors.join("; "),
                    });
                }
                PairOutcome::Done(pair) => {
                    let id = &pair.spec.pair_id;
                    let qname = match &query_name {
                        Some(q) => q.clone(),
                        None => {
                            let q = format!("{tslug}_{id}_query");
                            queries.push(rename(&pair.table1, &q)?);
                            query_name = Some(q.clone());
                            q
                        }
                    };
                    let dname = format!("{tslug}_{id}_datalake");
                    datalake.push(rename(&pair.table2, &dname)?);
                    let label = if pair.spec.is_unionable() {
                        Label::Unionable
                    } else {
                        Label::NonUnionable
                    };
                    if let Some(k) = &pair.key {
                        keys.push(KeyEntry {
                            query_table: qname.clone(),
                            datalake_table: dname.clone(),
                            key: k.clone(),
                        });
                    }
                    groundtruth.push(GroundTruthPair {
                        query_table: qname,
                        datalake_table: dname,
                        label,
                        topic: topic.clone(),
                    });
                    warnings.extend(pair.warnings.iter().map(|w| PairNote {
                        topic: topic.clone(),
                        pair_id: id.clone(),
                        message: w.clone(),
                    }));
                }
            }
            i += 1;
        }
    }

    let q_dir = out.join(QUERY_DIR);
    let d_dir = out.join(DATALAKE_DIR);
    fs::create_dir_all(&q_dir).map_err(io_err(&q_dir))?;
    fs::create_dir_all(&d_dir).map_err(io_err(&d_dir))?;
    for (dir, tables) in [(&q_dir, &queries), (&d_dir, &datalake)] {
        for t in tables {
            write(&dir.join(format!("{}.csv", t.name())), serialize_csv(t))?;
        }
    }
    write(&out.join(GROUNDTRUTH_FILE), groundtruth_csv(&groundtruth))?;
    write(&out.join(KEYS_FILE), keys_csv(&keys))?;
    if !resume.is_empty() {
        write(&out.join(RESUME_LOG), &resume)?;
    }

    let unionable_pairs = groundtruth.iter().filter(|p| p.label.is_unionable()).count();
    let manifest = BenchmarkManifest {
        benchmark_id,
        provider: provider.id(),
        config: cfg.clone(),
        query_tables: queries.len(),
        datalake_tables: datalake.len(),
        unionable_pairs,
        non_unionable_pairs: groundtruth.len() - unionable_pairs,
        warnings,
        skipped,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&out.join(MANIFEST_FILE), json + "\n")?;
    info!(
        "wrote {} query and {} data lake tables to {}",
        manifest.query_tables,
        manifest.datalake_tables,
        out.display()
    );
    Ok(manifest)
}

fn rename(t: &Table, name: &str) -> Result<Table, GenerationError> {
    t.renamed(name).map_err(|source| GenerationError::Table {
        section: "assembly",
        source,
    })
}
