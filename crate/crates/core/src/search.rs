//! Table union search: value-overlap and embedding baselines with greedy
//! column matching, LLM classification of candidate pairs, and in-context
//! example selection.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, LazyLock, Mutex};

use log::warn;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmark::{io_err, Benchmark, Label, LayoutError};
use crate::provider::{CompletionRequest, Provider, ProviderError};
use crate::seed::hash64;
use crate::table::Table;

pub const CLASSIFICATION_QUESTION: &str = "Are the following tables unionable?";
const CLASSIFICATION_FORMAT: &str = "Answer in the following format:\nUnionable: {yes/no}";

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("candidate multiplier must be at least 1")]
    InvalidMultiplier,
    #[error("row limit must be at least 1")]
    InvalidRowLimit,
    #[error("in-context examples come from benchmark {0:?}, the same benchmark as the queries")]
    Leakage(String),
    #[error("in-context example pool is empty")]
    EmptyPool,
    #[error("asked for {wanted} in-context examples, pool has {available}")]
    PoolTooSmall { wanted: usize, available: usize },
    #[error("embeddings of different lengths ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("{0} needs a provider")]
    ProviderRequired(&'static str),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("results file: {0}")]
    Results(String),
}

/// Column similarity measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// Jaccard similarity of distinct normalized values.
    Overlap,
    /// Cosine similarity (floored at 0) of mean value embeddings.
    Embed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Overlap,
    Embed,
    TwoPhase,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Overlap => "overlap",
            Method::Embed => "embed",
            Method::TwoPhase => "two-phase",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "overlap" => Ok(Method::Overlap),
            "embed" => Ok(Method::Embed),
            "two-phase" => Ok(Method::TwoPhase),
            _ => Err(format!("unknown method {s:?}")),
        }
    }
}

/// Trims, lowercases and collapses internal whitespace.
pub fn normalize_value(v: &str) -> String {
    v.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn distinct_normalized<S: AsRef<str>>(values: &[S]) -> Vec<String> {
    let mut out: Vec<String> = values
        .iter()
        .map(|v| normalize_value(v.as_ref()))
        .filter(|v| !v.is_empty())
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Jaccard similarity of two sorted, deduplicated slices. Empty on either
/// side gives 0.
pub fn jaccard<T: Ord>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Cosine similarity floored at 0; 0 when either vector is zero.
pub fn cosine_floor(a: &[f64], b: &[f64]) -> Result<f64, SearchError> {
    if a.len() != b.len() {
        return Err(SearchError::DimensionMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb)).clamp(0.0, 1.0))
}

/// Memoizing wrapper around a provider's embedding call.
pub struct CachingEmbedder<'a> {
    provider: &'a dyn Provider,
    cache: Mutex<HashMap<String, Arc<Vec<f64>>>>,
}

impl<'a> CachingEmbedder<'a> {
    pub fn new(provider: &'a dyn Provider) -> Self {
        Self {
            provider,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn embed(&self, text: &str) -> Result<Arc<Vec<f64>>, ProviderError> {
        if let Some(v) = self.cache.lock().unwrap_or_else(|e| e.into_inner()).get(text) {
            return Ok(v.clone());
        }
        let v = Arc::new(self.provider.embed(text)?);
        self.cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(text.to_string(), v.clone());
        Ok(v)
    }

    /// Mean embedding of the distinct normalized values; `None` if there are
    /// no non-null values.
    fn column(&self, values: &[String]) -> Result<Option<Vec<f64>>, SearchError> {
        let mut sum: Option<Vec<f64>> = None;
        for v in values {
            let e = self.embed(v)?;
            match &mut sum {
                None => sum = Some(e.as_ref().clone()),
                Some(s) => {
                    if s.len() != e.len() {
                        return Err(SearchError::DimensionMismatch(s.len(), e.len()));
                    }
                    s.iter_mut().zip(e.iter()).for_each(|(a, b)| *a += b);
                }
            }
        }
        Ok(sum.map(|s| s.into_iter().map(|x| x / values.len() as f64).collect()))
    }
}

/// Column unionability of two value lists.
pub fn column_unionability<S: AsRef<str>>(
    a: &[S],
    b: &[S],
    measure: Measure,
    embedder: Option<&CachingEmbedder>,
) -> Result<f64, SearchError> {
    let (a, b) = (distinct_normalized(a), distinct_normalized(b));
    match measure {
        Measure::Overlap => Ok(jaccard(&a, &b)),
        Measure::Embed => {
            let e = embedder.ok_or(SearchError::ProviderRequired("embedding measure"))?;
            match (e.column(&a)?, e.column(&b)?) {
                (Some(x), Some(y)) => cosine_floor(&x, &y),
                _ => Ok(0.0),
            }
        }
    }
}

#[derive(Debug, Clone)]
enum ColumnRepr {
    /// Sorted interned ids of distinct normalized values.
    Ids(Vec<u32>),
    Mean(Option<Vec<f64>>),
}

#[derive(Debug, Clone)]
struct PreparedTable {
    header: Vec<String>,
    cols: Vec<ColumnRepr>,
}

/// Column representations of a set of tables, ready for pairwise scoring.
pub struct ColumnIndex {
    measure: Measure,
    tables: HashMap<String, PreparedTable>,
}

impl ColumnIndex {
    pub fn build(
        tables: &[&Table],
        measure: Measure,
        embedder: Option<&CachingEmbedder>,
    ) -> Result<Self, SearchError> {
        let mut prepared = HashMap::new();
        match measure {
            Measure::Overlap => {
                let mut interner: HashMap<String, u32> = HashMap::new();
                for t in tables {
                    let cols = (0..t.n_cols())
                        .map(|i| {
                            let mut ids: Vec<u32> = distinct_normalized(&t.column_values(i))
                                .into_iter()
                                .map(|v| {
                                    let next = interner.len() as u32;
                                    *interner.entry(v).or_insert(next)
                                })
                                .collect();
                            ids.sort_unstable();
                            ColumnRepr::Ids(ids)
                        })
                        .collect();
                    prepared.insert(
                        t.name().to_string(),
                        PreparedTable { header: t.header().to_vec(), cols },
                    );
                }
            }
            Measure::Embed => {
                let e = embedder.ok_or(SearchError::ProviderRequired("embedding measure"))?;
                let built: Vec<(String, PreparedTable)> = tables
                    .par_iter()
                    .map(|t| {
                        let cols = (0..t.n_cols())
                            .map(|i| Ok(ColumnRepr::Mean(e.column(&distinct_normalized(&t.column_values(i)))?)))
                            .collect::<Result<Vec<_>, SearchError>>()?;
                        Ok((t.name().to_string(), PreparedTable { header: t.header().to_vec(), cols }))
                    })
                    .collect::<Result<_, SearchError>>()?;
                prepared.extend(built);
            }
        }
        Ok(Self {
            measure,
            tables: prepared,
        })
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    fn column_matrix(&self, q: &PreparedTable, t: &PreparedTable) -> Result<Vec<Vec<f64>>, SearchError> {
        q.cols
            .iter()
            .map(|a| {
                t.cols
                    .iter()
                    .map(|b| match (a, b) {
                        (ColumnRepr::Ids(x), ColumnRepr::Ids(y)) => Ok(jaccard(x, y)),
                        (ColumnRepr::Mean(Some(x)), ColumnRepr::Mean(Some(y))) => cosine_floor(x, y),
                        _ => Ok(0.0),
                    })
                    .collect()
            })
            .collect()
    }

    /// Scores an indexed query against an indexed candidate. Panics if either
    /// name is not in the index.
    pub fn score(&self, query: &str, candidate: &str) -> Result<UnionabilityScore, SearchError> {
        let q = &self.tables[query];
        let t = &self.tables[candidate];
        let m = self.column_matrix(q, t)?;
        let matched = greedy_match(&m);
        let denom = q.cols.len().max(t.cols.len()).max(1) as f64;
        let total: f64 = matched.iter().map(|(_, _, s)| s).sum();
        Ok(UnionabilityScore {
            query: query.to_string(),
            candidate: candidate.to_string(),
            score: (total / denom).clamp(0.0, 1.0),
            matched_columns: matched
                .into_iter()
                .map(|(i, j, s)| (q.header[i].clone(), t.header[j].clone(), s))
                .collect(),
        })
    }
}

/// One-to-one column matching: repeatedly takes the highest remaining score,
/// ties broken by query column then candidate column index. Zero scores are
/// never matched.
pub fn greedy_match(scores: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let mut cells: Vec<(usize, usize, f64)> = scores
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &s)| (i, j, s)))
        .filter(|c| c.2 > 0.0)
        .collect();
    cells.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let n_cols = scores.first().map_or(0, Vec::len);
    let mut used_q = vec![false; scores.len()];
    let mut used_t = vec![false; n_cols];
    let mut out = Vec::new();
    for (i, j, s) in cells {
        if !used_q[i] && !used_t[j] {
            used_q[i] = true;
            used_t[j] = true;
            out.push((i, j, s));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionabilityScore {
    pub query: String,
    pub candidate: String,
    pub score: f64,
    /// (query column, candidate column, column score), scores above 0 only.
    pub matched_columns: Vec<(String, String, f64)>,
}

pub fn table_unionability(
    q: &Table,
    t: &Table,
    measure: Measure,
    embedder: Option<&CachingEmbedder>,
) -> Result<UnionabilityScore, SearchError> {
    // Index under positional names so q and t may share a name.
    let a = q.renamed("query").expect("valid name");
    let b = t.renamed("candidate").expect("valid name");
    let idx = ColumnIndex::build(&[&a, &b], measure, embedder)?;
    let mut s = idx.score("query", "candidate")?;
    s.query = q.name().to_string();
    s.candidate = t.name().to_string();
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub query: String,
    /// Candidates with scores, best first; ties by name ascending.
    pub ranked: Vec<(String, f64)>,
    pub k: usize,
    pub method: String,
}

impl SearchResult {
    pub fn names(&self) -> Vec<String> {
        self.ranked.iter().map(|(n, _)| n.clone()).collect()
    }
}

fn rank(mut scored: Vec<(String, f64)>, k: usize) -> Vec<(String, f64)> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// Scores every data lake table in the index against `query`; returns the
/// best `k`.
pub fn search_indexed(
    index: &ColumnIndex,
    query: &str,
    lake: &[&str],
    k: usize,
) -> Result<SearchResult, SearchError> {
    if k == 0 {
        return Err(SearchError::InvalidK);
    }
    let scored = lake
        .par_iter()
        .map(|c| index.score(query, c).map(|s| (c.to_string(), s.score)))
        .collect::<Result<Vec<_>, _>>()?;
    let method = match index.measure() {
        Measure::Overlap => Method::Overlap,
        Measure::Embed => Method::Embed,
    };
    Ok(SearchResult {
        query: query.to_string(),
        ranked: rank(scored, k),
        k,
        method: method.to_string(),
    })
}

pub fn search_topk(
    query: &Table,
    lake: &[Table],
    k: usize,
    measure: Measure,
    embedder: Option<&CachingEmbedder>,
) -> Result<SearchResult, SearchError> {
    let q = query.renamed(format!("{}_query", query.name())).expect("valid name");
    let mut all: Vec<&Table> = lake.iter().collect();
    all.push(&q);
    let index = ColumnIndex::build(&all, measure, embedder)?;
    let names: Vec<&str> = lake.iter().map(Table::name).collect();
    let mut r = search_indexed(&index, q.name(), &names, k)?;
    r.query = query.name().to_string();
    Ok(r)
}

/// A table pair with a known label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub table1: Table,
    pub table2: Table,
    pub label: Label,
}

/// Labeled pairs from one benchmark, used as in-context examples.
#[derive(Debug, Clone)]
pub struct IclPool {
    pub benchmark_id: String,
    pub pairs: Vec<LabeledPair>,
}

impl IclPool {
    /// All labeled pairs of a benchmark directory.
    pub fn from_benchmark(b: &Benchmark) -> Self {
        let pairs = b
            .groundtruth
            .iter()
            .filter_map(|p| {
                Some(LabeledPair {
                    table1: b.table(&p.query_table)?.clone(),
                    table2: b.table(&p.datalake_table)?.clone(),
                    label: p.label,
                })
            })
            .collect();
        Self {
            benchmark_id: b.id.clone(),
            pairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IclExample {
    pub pair: LabeledPair,
    /// Mean Euclidean distance to the query tables' embeddings.
    pub distance: f64,
}

/// Header and first row in pipe format.
pub fn table_summary(t: &Table) -> String {
    t.truncated(1).to_pipe_text()
}

/// Text embedded for a candidate example: both table summaries.
pub fn example_text(p: &LabeledPair) -> String {
    format!("{}{}", table_summary(&p.table1), table_summary(&p.table2))
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64, SearchError> {
    if a.len() != b.len() {
        return Err(SearchError::DimensionMismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Picks the `n` pool examples closest on average (Euclidean distance between
/// embeddings) to the query tables, nearest first.
///
/// The pool must come from a different benchmark than the queries.
pub fn select_icl_examples(
    queries: &[Table],
    query_benchmark_id: &str,
    pool: &IclPool,
    n: usize,
    embedder: &CachingEmbedder,
) -> Result<Vec<IclExample>, SearchError> {
    if pool.benchmark_id == query_benchmark_id {
        return Err(SearchError::Leakage(pool.benchmark_id.clone()));
    }
    if pool.pairs.is_empty() {
        return Err(SearchError::EmptyPool);
    }
    if n > pool.pairs.len() {
        return Err(SearchError::PoolTooSmall {
            wanted: n,
            available: pool.pairs.len(),
        });
    }
    let q_emb: Vec<Arc<Vec<f64>>> = queries
        .iter()
        .map(|q| embedder.embed(&table_summary(q)))
        .collect::<Result<_, _>>()?;
    let mut scored: Vec<(f64, String, &LabeledPair)> = pool
        .pairs
        .par_iter()
        .map(|p| {
            let text = example_text(p);
            let e = embedder.embed(&text)?;
            let mut total = 0.0;
            for q in &q_emb {
                total += euclidean(&e, q)?;
            }
            let d = if q_emb.is_empty() { 0.0 } else { total / q_emb.len() as f64 };
            Ok((d, text, p))
        })
        .collect::<Result<_, SearchError>>()?;
    scored.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.label.cmp(&b.2.label))
    });
    Ok(scored
        .into_iter()
        .take(n)
        .map(|(distance, _, p)| IclExample {
            pair: p.clone(),
            distance,
        })
        .collect())
}

fn pair_block(t1: &Table, t2: &Table, row_limit: usize) -> String {
    format!(
        "Table 1:\n{}Table 2:\n{}",
        t1.truncated(row_limit).to_pipe_text(),
        t2.truncated(row_limit).to_pipe_text()
    )
}

/// Classification prompt: each example pair with its answer, then the target
/// pair and the question. Tables are cut to `row_limit` rows.
pub fn build_classification_prompt(
    t1: &Table,
    t2: &Table,
    examples: &[IclExample],
    row_limit: usize,
) -> Result<String, SearchError> {
    if row_limit == 0 {
        return Err(SearchError::InvalidRowLimit);
    }
    let mut p = String::new();
    for ex in examples {
        p.push_str(&pair_block(&ex.pair.table1, &ex.pair.table2, row_limit));
        let answer = if ex.pair.label.is_unionable() { "yes" } else { "no" };
        p.push_str(&format!("Unionable: {answer}\n\n"));
    }
    p.push_str(&pair_block(t1, t2, row_limit));
    p.push('\n');
    p.push_str(CLASSIFICATION_QUESTION);
    p.push(' ');
    p.push_str(CLASSIFICATION_FORMAT);
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Unionable,
    NonUnionable,
    Unparseable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Unionable => "unionable",
            Verdict::NonUnionable => "non-unionable",
            Verdict::Unparseable => "unparseable",
        }
    }
}

static VERDICT_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)unionable\s*:\s*[*_`]*\s*(yes|no)\b").expect("valid regex"));
static BARE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^[\s*_`]*(yes|no)\b").expect("valid regex"));

pub fn parse_verdict(text: &str) -> Verdict {
    let m = VERDICT_RE
        .captures(text)
        .or_else(|| BARE_RE.captures(text))
        .map(|c| c[1].to_ascii_lowercase());
    match m.as_deref() {
        Some("yes") => Verdict::Unionable,
        Some("no") => Verdict::NonUnionable,
        _ => Verdict::Unparseable,
    }
}

/// Sends a classification prompt and parses the answer. Returns the verdict
/// and the raw completion.
pub fn classify_pair(
    provider: &dyn Provider,
    prompt: &str,
    seed: Option<u64>,
) -> Result<(Verdict, String), ProviderError> {
    let mut req = CompletionRequest::new(prompt);
    req.seed = seed;
    let raw = provider.complete(&req)?;
    Ok((parse_verdict(&raw), raw))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationRecord {
    pub query: String,
    pub candidate: String,
    pub phase1_rank: usize,
    pub verdict: Verdict,
    /// Raw completion, or the provider error message.
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhaseOutput {
    pub result: SearchResult,
    pub phase1: SearchResult,
    pub log: Vec<ClassificationRecord>,
    pub unparseable: usize,
    pub provider_errors: usize,
}

#[derive(Debug, Clone)]
pub struct TwoPhaseConfig {
    pub k: usize,
    pub multiplier: usize,
    pub row_limit: usize,
    pub examples: Vec<IclExample>,
    pub seed: u64,
}

impl Default for TwoPhaseConfig {
    fn default() -> Self {
        Self {
            k: 10,
            multiplier: 2,
            row_limit: 1,
            examples: Vec::new(),
            seed: 0,
        }
    }
}

/// Retrieves `multiplier * k` candidates with the index, asks the provider
/// to classify each against the query, and ranks accepted candidates first
/// (in phase-1 order), then the rest (also in phase-1 order), cut to `k`.
///
/// Unparseable answers and provider failures count as rejections.
pub fn two_phase_search(
    index: &ColumnIndex,
    query: &Table,
    lake: &[&Table],
    provider: &dyn Provider,
    cfg: &TwoPhaseConfig,
) -> Result<TwoPhaseOutput, SearchError> {
    if cfg.k == 0 {
        return Err(SearchError::InvalidK);
    }
    if cfg.multiplier == 0 {
        return Err(SearchError::InvalidMultiplier);
    }
    let names: Vec<&str> = lake.iter().map(|t| t.name()).collect();
    let phase1 = search_indexed(index, query.name(), &names, cfg.k * cfg.multiplier)?;
    let by_name: HashMap<&str, &Table> = lake.iter().map(|t| (t.name(), *t)).collect();

    let log: Vec<ClassificationRecord> = phase1
        .ranked
        .par_iter()
        .enumerate()
        .map(|(i, (cand, _))| {
            let prompt = build_classification_prompt(query, by_name[cand.as_str()], &cfg.examples, cfg.row_limit)?;
            let seed = hash64(&[&cfg.seed.to_le_bytes(), query.name().as_bytes(), cand.as_bytes()]);
            let (verdict, raw) = match classify_pair(provider, &prompt, Some(seed)) {
                Ok(v) => v,
                Err(e) => {
                    warn!("classifying {} / {cand}: {e}", query.name());
                    (Verdict::Unparseable, format!("error: {e}"))
                }
            };
            Ok(ClassificationRecord {
                query: query.name().to_string(),
                candidate: cand.clone(),
                phase1_rank: i + 1,
                verdict,
                raw,
            })
        })
        .collect::<Result<_, SearchError>>()?;

    let provider_errors = log.iter().filter(|r| r.raw.starts_with("error: ")).count();
    let unparseable = log.iter().filter(|r| r.verdict == Verdict::Unparseable).count() - provider_errors;
    let accepted = phase1
        .ranked
        .iter()
        .zip(&log)
        .filter(|(_, r)| r.verdict == Verdict::Unionable);
    let rejected = phase1
        .ranked
        .iter()
        .zip(&log)
        .filter(|(_, r)| r.verdict != Verdict::Unionable);
    let ranked = accepted
        .chain(rejected)
        .map(|(c, _)| c.clone())
        .take(cfg.k)
        .collect();
    Ok(TwoPhaseOutput {
        result: SearchResult {
            query: query.name().to_string(),
            ranked,
            k: cfg.k,
            method: Method::TwoPhase.to_string(),
        },
        phase1,
        log,
        unparseable,
        provider_errors,
    })
}

/// Search settings for a whole benchmark.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub method: Method,
    /// Measure used by the two-phase method's first phase.
    pub base_measure: Measure,
    pub two_phase: TwoPhaseConfig,
}

#[derive(Debug, Clone, Default)]
pub struct SearchRun {
    pub results: Vec<SearchResult>,
    pub classifications: Vec<ClassificationRecord>,
    pub unparseable: usize,
    pub provider_errors: usize,
}

/// Runs every query of a benchmark against its data lake. Results are in
/// query name order.
pub fn search_benchmark(
    bench: &Benchmark,
    cfg: &SearchConfig,
    provider: Option<&dyn Provider>,
) -> Result<SearchRun, SearchError> {
    let k = cfg.two_phase.k;
    if k == 0 {
        return Err(SearchError::InvalidK);
    }
    let measure = match cfg.method {
        Method::Overlap => Measure::Overlap,
        Method::Embed => Measure::Embed,
        Method::TwoPhase => cfg.base_measure,
    };
    let embedder = provider.map(CachingEmbedder::new);
    let all: Vec<&Table> = bench.queries.iter().chain(&bench.datalake).collect();
    let index = ColumnIndex::build(&all, measure, embedder.as_ref())?;
    let lake: Vec<&Table> = bench.datalake.iter().collect();
    let lake_names: Vec<&str> = lake.iter().map(|t| t.name()).collect();
    let mut queries: Vec<&Table> = bench.queries.iter().collect();
    queries.sort_by(|a, b| a.name().cmp(b.name()));

    let mut run = SearchRun::default();
    match cfg.method {
        Method::Overlap | Method::Embed => {
            run.results = queries
                .par_iter()
                .map(|q| search_indexed(&index, q.name(), &lake_names, k))
                .collect::<Result<_, _>>()?;
        }
        Method::TwoPhase => {
            let provider = provider.ok_or(SearchError::ProviderRequired("two-phase search"))?;
            for q in queries {
                let out = two_phase_search(&index, q, &lake, provider, &cfg.two_phase)?;
                run.results.push(out.result);
                run.classifications.extend(out.log);
                run.unparseable += out.unparseable;
                run.provider_errors += out.provider_errors;
            }
        }
    }
    Ok(run)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
}

/// `query_table,candidate_table,rank,score,method`, ranks from 1.
pub fn results_csv(results: &[SearchResult]) -> String {
    let mut w = csv_writer();
    w.write_record(["query_table", "candidate_table", "rank", "score", "method"])
        .expect("in-memory write");
    for r in results {
        for (i, (c, s)) in r.ranked.iter().enumerate() {
            w.write_record([&r.query, c, &(i + 1).to_string(), &format!("{s}"), &r.method])
                .expect("in-memory write");
        }
    }
    finish(w)
}

pub fn classification_log_csv(log: &[ClassificationRecord]) -> String {
    let mut w = csv_writer();
    w.write_record(["query_table", "candidate_table", "phase1_rank", "verdict", "raw"])
        .expect("in-memory write");
    for r in log {
        w.write_record([
            &r.query,
            &r.candidate,
            &r.phase1_rank.to_string(),
            r.verdict.as_str(),
            &r.raw,
        ])
        .expect("in-memory write");
    }
    finish(w)
}

#[derive(Debug, Deserialize)]
struct ResultRow {
    query_table: String,
    candidate_table: String,
    rank: usize,
    score: f64,
    method: String,
}

/// Reads a results file. Rows may appear in any order; rankings are rebuilt
/// from the rank column. `k` is set to the longest ranking of each query.
pub fn read_results(path: &Path) -> Result<Vec<SearchResult>, SearchError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    // query -> (method, [(rank, candidate, score)])
    type Rows = Vec<(usize, String, f64)>;
    let mut by_query: BTreeMap<String, (String, Rows)> = BTreeMap::new();
    for row in rdr.deserialize::<ResultRow>() {
        let row = row.map_err(|e| SearchError::Results(e.to_string()))?;
        let entry = by_query
            .entry(row.query_table.trim_end_matches(".csv").to_string())
            .or_insert_with(|| (row.method.clone(), Vec::new()));
        entry
            .1
            .push((row.rank, row.candidate_table.trim_end_matches(".csv").to_string(), row.score));
    }
    by_query
        .into_iter()
        .map(|(query, (method, mut rows))| {
            rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            if rows.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(SearchError::Results(format!("duplicate rank for query {query}")));
            }
            let ranked: Vec<(String, f64)> = rows.into_iter().map(|(_, c, s)| (c, s)).collect();
            Ok(SearchResult {
                k: ranked.len(),
                query,
                ranked,
                method,
            })
        })
        .collect()
}
