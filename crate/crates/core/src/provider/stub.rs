//! Deterministic offline provider.
//!
//! Completions are a pure function of `(prompt, seed)`:
//! - generation prompts produce a table pair in the requested answer format,
//!   built from the topic vocabularies in [`super::vocab`];
//! - classification prompts are answered by comparing the header names of the
//!   two target tables;
//! - anything else yields an opaque hash-derived string.
//!
//! Embeddings use signed feature hashing of lowercase tokens into
//! [`STUB_EMBED_DIM`] buckets, L2-normalised.

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vocab::{self, Vocab};
use super::{CompletionRequest, Provider, ProviderConfig, ProviderError};
use crate::generation::{parse_generation_prompt, PairSpec, TableShape};
use crate::search::CLASSIFICATION_QUESTION;
use crate::seed::hash64;
use crate::table::{parse_pipe_table, Table};

pub const STUB_EMBED_DIM: usize = 64;

/// Distinct values available to each column concept.
const POOL: u64 = 12;

#[derive(Debug, Clone)]
pub struct StubProvider {
    cfg: ProviderConfig,
}

impl StubProvider {
    pub fn new(cfg: ProviderConfig) -> Self {
        Self { cfg }
    }
}

impl Default for StubProvider {
    fn default() -> Self {
        Self::new(ProviderConfig::stub())
    }
}

impl Provider for StubProvider {
    fn complete(&self, req: &CompletionRequest) -> Result<String, ProviderError> {
        req.validate(self.cfg.context_limit)?;
        let seed = req.seed.unwrap_or(0);
        if let Some(spec) = parse_generation_prompt(&req.prompt) {
            return Ok(stub_generate_pair(&spec, seed));
        }
        if let Some(answer) = classify_by_headers(&req.prompt) {
            return Ok(answer);
        }
        let h = hash64(&[b"complete", &seed.to_le_bytes(), req.prompt.as_bytes()]);
        Ok(format!("stub completion {h:016x}"))
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        if text.trim().is_empty() {
            return Err(ProviderError::InvalidRequest("empty text".into()));
        }
        Ok(hashed_embedding(text, self.cfg.stub_salt))
    }

    fn id(&self) -> String {
        "stub".into()
    }
}

fn hashed_embedding(text: &str, salt: u64) -> Vec<f64> {
    let salt = salt.to_le_bytes();
    let mut v = vec![0.0; STUB_EMBED_DIM];
    for token in text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
    {
        let token = token.to_lowercase();
        let h = hash64(&[b"embed", &salt, token.as_bytes()]);
        let sign = if (h >> 32) & 1 == 1 { 1.0 } else { -1.0 };
        v[(h % STUB_EMBED_DIM as u64) as usize] += sign;
    }
    let mut norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        // No tokens, or all of them cancelled out.
        let h = hash64(&[b"embed-raw", &salt, text.as_bytes()]);
        v[(h % STUB_EMBED_DIM as u64) as usize] = 1.0;
        norm = 1.0;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Answers a classification prompt by checking whether the two target tables
/// share a header name. Returns `None` if the prompt is not a classification
/// prompt.
fn classify_by_headers(prompt: &str) -> Option<String> {
    let q = prompt.rfind(CLASSIFICATION_QUESTION)?;
    let body = &prompt[..q];
    let t2 = body.rfind("Table 2:")?;
    let t1 = body[..t2].rfind("Table 1:")?;
    let left = parse_pipe_table("left", &body[t1 + 8..t2]).ok()?.table;
    let right = parse_pipe_table("right", &body[t2 + 8..]).ok()?.table;
    let norm = |t: &Table| -> Vec<String> {
        t.header().iter().map(|h| h.trim().to_lowercase()).collect()
    };
    let (l, r) = (norm(&left), norm(&right));
    let shared = l.iter().any(|h| r.contains(h));
    Some(format!("Unionable: {}", if shared { "yes" } else { "no" }))
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Text,
    Int { lo: u64, hi: u64 },
    Dec { lo: u64, hi: u64, places: u32 },
}

#[rustfmt::skip]
const ATTRIBUTES: [(&str, Kind); 16] = [
    ("Name", Kind::Text),
    ("Type", Kind::Text),
    ("Category", Kind::Text),
    ("Origin", Kind::Text),
    ("Region", Kind::Text),
    ("Status", Kind::Text),
    ("Description", Kind::Text),
    ("Notes", Kind::Text),
    ("Period", Kind::Text),
    ("Class", Kind::Text),
    ("Feature", Kind::Text),
    ("Source", Kind::Text),
    ("Year", Kind::Int { lo: 1800, hi: 2023 }),
    ("Count", Kind::Int { lo: 1, hi: 5000 }),
    ("Score", Kind::Dec { lo: 0, hi: 100, places: 1 }),
    ("Size", Kind::Dec { lo: 1, hi: 1000, places: 2 }),
];

const SYLLABLES: [&str; 20] = [
    "ka", "ro", "mi", "ta", "ven", "lor", "dor", "si", "an", "el", "bra", "tu", "nex", "qui",
    "ar", "os", "li", "zen", "mar", "del",
];

/// A column meaning: a header plus a value generator.
#[derive(Debug, Clone)]
struct Concept {
    header: String,
    kind: Kind,
}

/// Concepts for a topic, entity-name concepts first. Numbered variants are
/// appended when more than entities x attributes are needed.
fn catalog(v: &Vocab, min_len: usize) -> Vec<Concept> {
    let mut out = Vec::new();
    let mut round = 1;
    while out.len() < min_len.max(1) {
        for (attr, kind) in ATTRIBUTES {
            for entity in &v.entities {
                let header = if round == 1 {
                    format!("{entity} {attr}")
                } else {
                    format!("{entity} {attr} {round}")
                };
                out.push(Concept { header, kind });
            }
        }
        round += 1;
    }
    out
}

fn proper_noun(topic: &str, header: &str, idx: u64) -> String {
    let h = hash64(&[b"proper", topic.as_bytes(), header.as_bytes(), &idx.to_le_bytes()]);
    let n = 2 + (h % 2) as usize;
    let mut word: String = (0..n)
        .map(|i| SYLLABLES[((h >> (8 + 8 * i)) % SYLLABLES.len() as u64) as usize])
        .collect();
    word[..1].make_ascii_uppercase();
    word
}

fn cell_value(v: &Vocab, c: &Concept, idx: u64, words: usize) -> String {
    let h = |extra: u64| {
        hash64(&[
            b"cell",
            v.topic.as_bytes(),
            c.header.as_bytes(),
            &idx.to_le_bytes(),
            &extra.to_le_bytes(),
        ])
    };
    match c.kind {
        Kind::Text => {
            let mut parts = vec![proper_noun(&v.topic, &c.header, idx)];
            for j in 1..words.max(1) {
                parts.push(v.words[(h(j as u64) % v.words.len() as u64) as usize].clone());
            }
            parts.join(" ")
        }
        Kind::Int { lo, hi } => (lo + h(0) % (hi - lo + 1)).to_string(),
        Kind::Dec { lo, hi, places } => {
            let scale = 10u64.pow(places);
            let raw = lo * scale + h(0) % ((hi - lo) * scale + 1);
            format!(
                "{}.{:0width$}",
                raw / scale,
                raw % scale,
                width = places as usize
            )
        }
    }
}

struct Column<'a> {
    concept: &'a Concept,
    words: usize,
}

fn build_table(v: &Vocab, cols: &[Column<'_>], rows: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<String>> {
    (0..rows)
        .map(|_| {
            cols.iter()
                .map(|col| cell_value(v, col.concept, rng.random_range(0..POOL), col.words))
                .collect()
        })
        .collect()
}

fn render(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    Table::new("stub", header, rows)
        .expect("stub tables are well-formed")
        .to_pipe_text()
}

/// Offline stand-in for an LLM answering a generation prompt.
///
/// Table 1 depends only on the topic and its requested shape, so every pair
/// generated for a topic with the same Table 1 parameters sees the same
/// Table 1. Table 2 and the key also depend on `seed`. Unionable pairs share
/// exactly `unionable_cols` header names (the key column among them) and at
/// least one row of values; non-unionable pairs share no header.
pub fn stub_generate_pair(spec: &PairSpec, seed: u64) -> String {
    let vocab = vocab::lookup(&spec.topic).unwrap_or_else(|| {
        warn!("unknown topic {:?}; using the generic vocabulary", spec.topic);
        vocab::generic(&spec.topic)
    });
    let TableShape { rows: r1, cols: c1, textuality: w1 } = spec.t1;
    let TableShape { rows: r2, cols: c2, textuality: w2 } = spec.t2;
    let concepts = catalog(&vocab, c1 + c2);
    let n_entities = vocab.entities.len();

    let mut rng1 = ChaCha8Rng::seed_from_u64(hash64(&[
        b"table1",
        vocab.topic.as_bytes(),
        &(r1 as u64).to_le_bytes(),
        &(c1 as u64).to_le_bytes(),
        &(w1 as u64).to_le_bytes(),
    ]));
    let key_idx = rng1.random_range(0..n_entities);
    let mut rest: Vec<usize> = (0..concepts.len()).filter(|&i| i != key_idx).collect();
    rest.shuffle(&mut rng1);
    let mut t1_ids = vec![key_idx];
    t1_ids.extend(rest.iter().take(c1 - 1));
    let t1_cols: Vec<Column> = t1_ids
        .iter()
        .map(|&i| Column { concept: &concepts[i], words: w1 })
        .collect();
    let t1_rows = build_table(&vocab, &t1_cols, r1, &mut rng1);

    let mut rng2 = ChaCha8Rng::seed_from_u64(hash64(&[
        b"table2",
        &seed.to_le_bytes(),
        vocab.topic.as_bytes(),
        format!("{:?}|{:?}|{:?}", spec.t1, spec.t2, spec.unionable_cols).as_bytes(),
    ]));
    let mut unused: Vec<usize> = (0..concepts.len()).filter(|i| !t1_ids.contains(i)).collect();
    unused.shuffle(&mut rng2);

    // (position in table 1 if shared, concept id)
    let mut t2_ids: Vec<(Option<usize>, usize)> = Vec::with_capacity(c2);
    let shared = spec.unionable_cols.map(|u| u.clamp(1, c1.min(c2))).unwrap_or(0);
    if shared > 0 {
        t2_ids.push((Some(0), key_idx));
        let mut others: Vec<usize> = (1..c1).collect();
        others.shuffle(&mut rng2);
        t2_ids.extend(others.into_iter().take(shared - 1).map(|p| (Some(p), t1_ids[p])));
    }
    t2_ids.extend(unused.into_iter().take(c2 - shared).map(|i| (None, i)));
    t2_ids.shuffle(&mut rng2);

    let t2_cols: Vec<Column> = t2_ids
        .iter()
        .map(|&(pos, i)| Column {
            concept: &concepts[i],
            words: if pos.is_some() { w1 } else { w2 },
        })
        .collect();
    let mut t2_rows = build_table(&vocab, &t2_cols, r2, &mut rng2);
    if shared > 0 {
        let src = rng2.random_range(0..r1);
        let dst = rng2.random_range(0..r2);
        for (j, &(pos, _)) in t2_ids.iter().enumerate() {
            if let Some(p) = pos {
                t2_rows[dst][j] = t1_rows[src][p].clone();
            }
        }
    }

    let header = |cols: &[Column]| cols.iter().map(|c| c.concept.header.clone()).collect();
    let mut out = String::new();
    out.push_str("Table 1:\n");
    out.push_str(&render(header(&t1_cols), t1_rows));
    out.push_str("\nTable 2:\n");
    out.push_str(&render(header(&t2_cols), t2_rows));
    if shared > 0 {
        out.push_str("\nKey: ");
        out.push_str(&concepts[key_idx].header);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::{build_generation_prompt, parse_generation_output};
    use std::collections::{BTreeSet, HashSet};

    fn spec(unionable_cols: Option<usize>) -> PairSpec {
        PairSpec {
            pair_id: "p00".into(),
            topic: "Astronomy".into(),
            t1: TableShape { rows: 8, cols: 11, textuality: 2 },
            t2: TableShape { rows: 7, cols: 10, textuality: 4 },
            unionable_cols,
        }
    }

    fn headers(t: &Table) -> HashSet<String> {
        t.header().iter().cloned().collect()
    }

    #[test]
    fn unionable_pair_shares_exact_header_count() {
        let s = spec(Some(4));
        let pair = parse_generation_output(&stub_generate_pair(&s, 3), &s).unwrap();
        assert_eq!(headers(&pair.table1).intersection(&headers(&pair.table2)).count(), 4);
        assert!(pair.warnings.is_empty(), "{:?}", pair.warnings);
        let key = pair.key.unwrap();
        assert!(pair.table2.header().contains(&key));
        // At least one row of table 2 repeats table 1 on every shared column.
        let shared: Vec<&String> = pair.table1.header().iter().filter(|h| pair.table2.header().contains(h)).collect();
        let pos = |t: &Table, h: &String| t.header().iter().position(|x| x == h).unwrap();
        let related = pair.table1.rows().iter().any(|r1| {
            pair.table2.rows().iter().any(|r2| {
                shared.iter().all(|h| r1[pos(&pair.table1, h)] == r2[pos(&pair.table2, h)])
            })
        });
        assert!(related);
    }

    #[test]
    fn non_unionable_pair_shares_nothing() {
        let s = spec(None);
        let pair = parse_generation_output(&stub_generate_pair(&s, 3), &s).unwrap();
        assert_eq!(headers(&pair.table1).intersection(&headers(&pair.table2)).count(), 0);
        assert!(pair.key.is_none());
    }

    #[test]
    fn shapes_follow_spec() {
        let s = spec(Some(2));
        let pair = parse_generation_output(&stub_generate_pair(&s, 9), &s).unwrap();
        assert_eq!((pair.table1.n_rows(), pair.table1.n_cols()), (8, 11));
        assert_eq!((pair.table2.n_rows(), pair.table2.n_cols()), (7, 10));
    }

    #[test]
    fn table1_is_stable_across_seeds() {
        let s = spec(Some(3));
        let a = parse_generation_output(&stub_generate_pair(&s, 1), &s).unwrap();
        let b = parse_generation_output(&stub_generate_pair(&s, 2), &s).unwrap();
        assert_eq!(a.table1, b.table1);
        assert_ne!(a.table2, b.table2);
    }

    #[test]
    fn unknown_topic_uses_generic_vocabulary() {
        let mut s = spec(Some(2));
        s.topic = "Underwater Basket Weaving".into();
        let pair = parse_generation_output(&stub_generate_pair(&s, 1), &s).unwrap();
        assert!(pair.warnings.is_empty());
        assert_eq!(pair.table1.n_cols(), 11);
    }

    #[test]
    fn wide_tables_extend_the_catalogue() {
        let mut s = spec(None);
        s.t1.cols = 60;
        s.t2.cols = 60;
        let pair = parse_generation_output(&stub_generate_pair(&s, 1), &s).unwrap();
        assert_eq!(headers(&pair.table1).len(), 60);
        assert_eq!(headers(&pair.table1).intersection(&headers(&pair.table2)).count(), 0);
    }

    #[test]
    fn complete_routes_generation_prompts() {
        let p = StubProvider::default();
        let s = spec(Some(4));
        let req = CompletionRequest::new(build_generation_prompt(&s)).with_seed(11);
        assert_eq!(p.complete(&req).unwrap(), stub_generate_pair(&s, 11));
    }

    #[test]
    fn complete_is_deterministic_and_seed_sensitive() {
        let p = StubProvider::default();
        for prompt in ["Tell me about tables.".to_string(), build_generation_prompt(&spec(Some(2)))] {
            let req = CompletionRequest::new(prompt.clone()).with_seed(5);
            assert_eq!(p.complete(&req).unwrap(), p.complete(&req).unwrap());
            let outs: BTreeSet<String> = (0..100u64)
                .map(|s| p.complete(&CompletionRequest::new(prompt.clone()).with_seed(s)).unwrap())
                .collect();
            assert_eq!(outs.len(), 100, "collision among 100 seeds");
        }
    }

    #[test]
    fn embeddings_are_unit_and_deterministic() {
        let p = StubProvider::default();
        let a = p.embed("x").unwrap();
        assert_eq!(a, p.embed("x").unwrap());
        assert_eq!(a.len(), STUB_EMBED_DIM);
        for text in ["x", "planets stars moons", "!!!", "a a a b"] {
            let v = p.embed(text).unwrap();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
        assert!(p.embed("  ").is_err());
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn embedding_similarity_tracks_token_overlap() {
        let p = StubProvider::default();
        let base = p.embed("planets stars").unwrap();
        let near = cosine(&base, &p.embed("planets stars moons").unwrap());
        let far = cosine(&base, &p.embed("tax law").unwrap());
        assert!(near > far, "{near} vs {far}");
        // Oracle: with no bucket collisions, cosine of bag-of-tokens vectors is
        // |shared| / sqrt(|a| |b|) = 2 / sqrt(6).
        let buckets: HashSet<u64> = ["planets", "stars", "moons", "tax", "law"]
            .iter()
            .map(|t| hash64(&[b"embed", &0u64.to_le_bytes(), t.as_bytes()]) % STUB_EMBED_DIM as u64)
            .collect();
        if buckets.len() == 5 {
            assert!((near - 2.0 / 6f64.sqrt()).abs() < 1e-12);
            assert!(far.abs() < 1e-12);
        }
    }

    #[test]
    fn classifier_answers_by_shared_headers() {
        let p = StubProvider::default();
        let yes = format!("Table 1:\n| A | B |\n| 1 | 2 |\nTable 2:\n| B | C |\n| 3 | 4 |\n\n{CLASSIFICATION_QUESTION} Answer in the following format:\nUnionable: {{yes/no}}");
        assert_eq!(p.complete(&CompletionRequest::new(yes)).unwrap(), "Unionable: yes");
        let no = format!("Table 1:\n| A |\n| 1 |\nTable 2:\n| C |\n| 3 |\n{CLASSIFICATION_QUESTION}");
        assert_eq!(p.complete(&CompletionRequest::new(no)).unwrap(), "Unionable: no");
    }
}
