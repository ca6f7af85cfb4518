//! On-disk benchmark layout.
//!
//! ```text
//! <dir>/
//!   query/*.csv        query tables
//!   datalake/*.csv     data lake tables
//!   groundtruth.csv    query_table,data_lake_table,label,topic
//!   keys.csv           query_table,data_lake_table,key   (unionable pairs)
//!   manifest.json      generation settings and counts
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{parse_csv, Table, TableError};

pub const QUERY_DIR: &str = "query";
pub const DATALAKE_DIR: &str = "datalake";
pub const GROUNDTRUTH_FILE: &str = "groundtruth.csv";
pub const KEYS_FILE: &str = "keys.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("{0} not found")]
    MissingGroundTruth(PathBuf),
    #[error("{0} is not a directory")]
    MissingDir(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Table {
        path: PathBuf,
        #[source]
        source: TableError,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LayoutError + '_ {
    move |source| LayoutError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "unionable")]
    Unionable,
    #[serde(rename = "non-unionable")]
    NonUnionable,
}

impl Label {
    pub fn is_unionable(self) -> bool {
        self == Label::Unionable
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Unionable => "unionable",
            Label::NonUnionable => "non-unionable",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unionable" | "1" | "true" | "yes" => Ok(Label::Unionable),
            "non-unionable" | "nonunionable" | "non_unionable" | "0" | "false" | "no" => {
                Ok(Label::NonUnionable)
            }
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundTruthPair {
    pub query_table: String,
    pub datalake_table: String,
    pub label: Label,
    pub topic: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyEntry {
    pub query_table: String,
    pub datalake_table: String,
    pub key: String,
}

fn strip_csv_ext(name: &str) -> String {
    name.trim().trim_end_matches(".csv").to_string()
}

pub fn groundtruth_csv(pairs: &[GroundTruthPair]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["query_table", "data_lake_table", "label", "topic"])
        .expect("in-memory write");
    for p in pairs {
        w.write_record([
            p.query_table.as_str(),
            p.datalake_table.as_str(),
            p.label.as_str(),
            p.topic.as_str(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
}

pub fn keys_csv(keys: &[KeyEntry]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["query_table", "data_lake_table", "key"])
        .expect("in-memory write");
    for k in keys {
        w.write_record([&k.query_table, &k.datalake_table, &k.key])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
}

/// Reads a ground-truth file. Column names are matched case-insensitively and
/// a few common aliases are accepted; without a label column every pair is
/// taken as unionable, and without a topic column the topic is empty.
pub fn read_groundtruth(path: &Path) -> Result<Vec<GroundTruthPair>, LayoutError> {
    if !path.is_file() {
        return Err(LayoutError::MissingGroundTruth(path.to_path_buf()));
    }
    let fmt_err = |message: String| LayoutError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| fmt_err(e.to_string()))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| fmt_err(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let find = |names: &[&str]| header.iter().position(|h| names.contains(&h.as_str()));
    let q = find(&["query_table", "query"]).ok_or_else(|| fmt_err("no query_table column".into()))?;
    let d = find(&["data_lake_table", "datalake_table", "candidate_table", "data_lake"])
        .ok_or_else(|| fmt_err("no data_lake_table column".into()))?;
    let l = find(&["label", "unionable"]);
    let t = find(&["topic"]);

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| fmt_err(e.to_string()))?;
        let get = |c: usize| rec.get(c).unwrap_or("").to_string();
        let label = match l {
            Some(c) => get(c)
                .parse()
                .map_err(|e| fmt_err(format!("row {}: {e}", i + 1)))?,
            None => Label::Unionable,
        };
        out.push(GroundTruthPair {
            query_table: strip_csv_ext(&get(q)),
            datalake_table: strip_csv_ext(&get(d)),
            label,
            topic: t.map(get).unwrap_or_default(),
        });
    }
    Ok(out)
}

/// Sorted `*.csv` paths in a directory.
pub fn list_csv(dir: &Path) -> Result<Vec<PathBuf>, LayoutError> {
    if !dir.is_dir() {
        return Err(LayoutError::MissingDir(dir.to_path_buf()));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn read_table(path: &Path) -> Result<Table, LayoutError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("table");
    parse_csv(name, &text).map_err(|source| LayoutError::Table {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_tables(dir: &Path) -> Result<Vec<Table>, LayoutError> {
    list_csv(dir)?.iter().map(|p| read_table(p)).collect()
}

/// Identifier used to keep in-context examples and evaluation queries from
/// the same benchmark apart. Taken from the manifest when present, otherwise
/// from the directory name.
pub fn benchmark_id(dir: &Path) -> String {
    let from_manifest = fs::read_to_string(dir.join(MANIFEST_FILE))
        .ok()
        .and_then(|s| serde_json::from_str::<serde_json::Value>(&s).ok())
        .and_then(|v| v["benchmark_id"].as_str().map(str::to_string));
    from_manifest.unwrap_or_else(|| {
        dir.canonicalize()
            .unwrap_or_else(|_| dir.to_path_buf())
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "benchmark".into())
    })
}

/// A benchmark loaded into memory.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub id: String,
    pub root: PathBuf,
    pub queries: Vec<Table>,
    pub datalake: Vec<Table>,
    pub groundtruth: Vec<GroundTruthPair>,
}

impl Benchmark {
    pub fn load(dir: &Path) -> Result<Self, LayoutError> {
        let groundtruth = read_groundtruth(&dir.join(GROUNDTRUTH_FILE))?;
        let topics: HashMap<&str, &str> = groundtruth
            .iter()
            .filter(|p| !p.topic.is_empty())
            .map(|p| (p.query_table.as_str(), p.topic.as_str()))
            .collect();
        let queries = read_tables(&dir.join(QUERY_DIR))?
            .into_iter()
            .map(|t| match topics.get(t.name()) {
                Some(topic) => t.with_topic(*topic),
                None => t,
            })
            .collect();
        Ok(Self {
            id: benchmark_id(dir),
            root: dir.to_path_buf(),
            queries,
            datalake: read_tables(&dir.join(DATALAKE_DIR))?,
            groundtruth,
        })
    }

    /// Unionable data lake tables per query.
    pub fn unionable_sets(&self) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for p in &self.groundtruth {
            let e = out.entry(p.query_table.clone()).or_default();
            if p.label.is_unionable() {
                e.push(p.datalake_table.clone());
            }
        }
        out
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.queries
            .iter()
            .chain(&self.datalake)
            .find(|t| t.name() == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groundtruth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pairs = vec![
            GroundTruthPair {
                query_table: "a_q".into(),
                datalake_table: "a_1".into(),
                label: Label::Unionable,
                topic: "Art, History".into(),
            },
            GroundTruthPair {
                query_table: "a_q".into(),
                datalake_table: "a_2".into(),
                label: Label::NonUnionable,
                topic: "Art, History".into(),
            },
        ];
        let path = dir.path().join(GROUNDTRUTH_FILE);
        fs::write(&path, groundtruth_csv(&pairs)).unwrap();
        assert_eq!(read_groundtruth(&path).unwrap(), pairs);
    }

    #[test]
    fn groundtruth_aliases() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.csv");
        fs::write(&path, "Query,Candidate_Table\nq.csv,t1.csv\n").unwrap();
        let gt = read_groundtruth(&path).unwrap();
        assert_eq!(gt[0].query_table, "q");
        assert_eq!(gt[0].datalake_table, "t1");
        assert_eq!(gt[0].label, Label::Unionable);
    }

    #[test]
    fn missing_groundtruth() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            Benchmark::load(dir.path()),
            Err(LayoutError::MissingGroundTruth(_))
        ));
    }

    #[test]
    fn labels_parse() {
        assert_eq!("Non-Unionable".parse::<Label>().unwrap(), Label::NonUnionable);
        assert_eq!("1".parse::<Label>().unwrap(), Label::Unionable);
        assert!("maybe".parse::<Label>().is_err());
    }
}
