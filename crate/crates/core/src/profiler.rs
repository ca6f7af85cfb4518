//! Benchmark profiling: shapes, column types, density and value uniqueness
//! per side (query / data lake).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmark::{
    io_err, list_csv, read_groundtruth, read_table, LayoutError, DATALAKE_DIR, GROUNDTRUTH_FILE,
    QUERY_DIR,
};
use crate::table::{infer_column_type, mean_words, ColumnType, Table};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("need at least two profiles to compare, got {0}")]
    TooFewProfiles(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Query,
    Datalake,
}

/// Share of distinct values among non-null values:
/// `[0, 0.1)` sparse, `[0.1, 0.5)` moderate, `[0.5, 1]` dense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UniquenessBucket {
    Sparse,
    Moderate,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub col_type: ColumnType,
    /// Non-null share; 1 for a column with no rows.
    pub density: f64,
    /// Distinct non-null values over non-null count; 0 if all null.
    pub uniqueness: f64,
    pub bucket: UniquenessBucket,
    pub mean_words: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub table: String,
    pub column: String,
    pub side: Side,
    #[serde(flatten)]
    pub stats: ColumnStats,
}

pub fn profile_column<S: AsRef<str>>(values: &[S]) -> ColumnStats {
    let non_null: Vec<&str> = values
        .iter()
        .map(AsRef::as_ref)
        .filter(|v| !v.is_empty())
        .collect();
    let n = non_null.len();
    let mut distinct = non_null.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let d = distinct.len();
    // Bucket edges compared on integers so 10% and 50% land exactly.
    let bucket = if d * 10 < n || n == 0 {
        UniquenessBucket::Sparse
    } else if d * 2 < n {
        UniquenessBucket::Moderate
    } else {
        UniquenessBucket::Dense
    };
    ColumnStats {
        col_type: infer_column_type(&non_null),
        density: if values.is_empty() { 1.0 } else { n as f64 / values.len() as f64 },
        uniqueness: if n == 0 { 0.0 } else { d as f64 / n as f64 },
        bucket,
        mean_words: mean_words(non_null.iter().copied()),
    }
}

pub fn profile_table(t: &Table, side: Side) -> Vec<ColumnProfile> {
    (0..t.n_cols())
        .map(|i| ColumnProfile {
            table: t.name().to_string(),
            column: t.header()[i].clone(),
            side,
            stats: profile_column(&t.column_values(i)),
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Cell values treated as null in addition to the empty string, compared
    /// case-insensitively after trimming (e.g. `NaN`, `N/A`).
    pub null_literals: Vec<String>,
}

impl ProfileOptions {
    fn normalize(&self, t: Table) -> Table {
        if self.null_literals.is_empty() {
            return t;
        }
        let lits: Vec<String> = self.null_literals.iter().map(|s| s.trim().to_lowercase()).collect();
        let rows = t
            .rows()
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| {
                        if lits.contains(&v.trim().to_lowercase()) {
                            String::new()
                        } else {
                            v.clone()
                        }
                    })
                    .collect()
            })
            .collect();
        t.map_rows(rows)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SideProfile {
    pub n_tables: usize,
    pub n_columns: usize,
    pub avg_rows: f64,
    pub avg_cols: f64,
    pub bytes: u64,
    pub short_str: usize,
    pub medium_str: usize,
    pub long_str: usize,
    pub numeric: usize,
    /// Mean of column densities.
    pub avg_density: f64,
    /// Mean words per non-null value, averaged over columns.
    pub avg_words: f64,
    pub sparsely_unique: usize,
    pub moderately_unique: usize,
    pub densely_unique: usize,
}

impl SideProfile {
    pub fn from_tables(tables: &[Table], bytes: u64) -> Self {
        let columns: Vec<ColumnStats> = tables
            .par_iter()
            .map(|t| (0..t.n_cols()).map(|i| profile_column(&t.column_values(i))).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect();
        let n_tables = tables.len();
        let n_columns = columns.len();
        let mean = |total: f64, n: usize| if n == 0 { 0.0 } else { total / n as f64 };
        let count_type = |ty| columns.iter().filter(|c| c.col_type == ty).count();
        let count_bucket = |b| columns.iter().filter(|c| c.bucket == b).count();
        SideProfile {
            n_tables,
            n_columns,
            avg_rows: mean(tables.iter().map(|t| t.n_rows() as f64).sum(), n_tables),
            avg_cols: mean(n_columns as f64, n_tables),
            bytes,
            short_str: count_type(ColumnType::ShortString),
            medium_str: count_type(ColumnType::MediumString),
            long_str: count_type(ColumnType::LongString),
            numeric: count_type(ColumnType::Numeric),
            avg_density: mean(columns.iter().map(|c| c.density).sum(), n_columns),
            avg_words: mean(columns.iter().map(|c| c.mean_words).sum(), n_columns),
            sparsely_unique: count_bucket(UniquenessBucket::Sparse),
            moderately_unique: count_bucket(UniquenessBucket::Moderate),
            densely_unique: count_bucket(UniquenessBucket::Dense),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkProfile {
    pub name: String,
    pub n_tables: usize,
    pub unionable_pairs: usize,
    pub non_unionable_pairs: usize,
    pub query: SideProfile,
    pub datalake: SideProfile,
}

fn read_side(dir: &Path, opts: &ProfileOptions) -> Result<(Vec<Table>, u64), LayoutError> {
    let files = list_csv(dir)?;
    let mut bytes = 0;
    for f in &files {
        bytes += fs::metadata(f).map_err(io_err(f))?.len();
    }
    let tables = files
        .par_iter()
        .map(|f| read_table(f).map(|t| opts.normalize(t)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((tables, bytes))
}

pub fn profile_benchmark(dir: &Path, opts: &ProfileOptions) -> Result<BenchmarkProfile, ProfileError> {
    let gt = read_groundtruth(&dir.join(GROUNDTRUTH_FILE))?;
    let (queries, qbytes) = read_side(&dir.join(QUERY_DIR), opts)?;
    let (lake, dbytes) = read_side(&dir.join(DATALAKE_DIR), opts)?;
    let unionable_pairs = gt.iter().filter(|p| p.label.is_unionable()).count();
    let name = dir
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| dir.display().to_string());
    Ok(BenchmarkProfile {
        name,
        n_tables: queries.len() + lake.len(),
        unionable_pairs,
        non_unionable_pairs: gt.len() - unionable_pairs,
        query: SideProfile::from_tables(&queries, qbytes),
        datalake: SideProfile::from_tables(&lake, dbytes),
    })
}

fn pct(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

/// Rows of the text report: label plus a rendered value per benchmark.
fn report_rows(p: &BenchmarkProfile) -> Vec<(&'static str, String)> {
    let pair = |q: String, d: String| format!("({q}, {d})");
    let (q, d) = (&p.query, &p.datalake);
    vec![
        ("tables", p.n_tables.to_string()),
        ("average shape", pair(
            format!("{:.2}x{:.2}", q.avg_rows, q.avg_cols),
            format!("{:.2}x{:.2}", d.avg_rows, d.avg_cols),
        )),
        ("size (bytes)", pair(q.bytes.to_string(), d.bytes.to_string())),
        ("labeled pairs", format!("{} / {}", p.unionable_pairs, p.non_unionable_pairs)),
        ("short strings", pair(q.short_str.to_string(), d.short_str.to_string())),
        ("medium strings", pair(q.medium_str.to_string(), d.medium_str.to_string())),
        ("long strings", pair(q.long_str.to_string(), d.long_str.to_string())),
        ("numeric", pair(q.numeric.to_string(), d.numeric.to_string())),
        ("average density", pair(pct(q.avg_density), pct(d.avg_density))),
        ("average words", pair(format!("{:.2}", q.avg_words), format!("{:.2}", d.avg_words))),
        ("sparsely unique", pair(q.sparsely_unique.to_string(), d.sparsely_unique.to_string())),
        ("moderately unique", pair(q.moderately_unique.to_string(), d.moderately_unique.to_string())),
        ("densely unique", pair(q.densely_unique.to_string(), d.densely_unique.to_string())),
    ]
}

fn render_columns(headers: &[String], rows: &[(String, Vec<String>)]) -> String {
    let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..headers.len())
        .map(|i| {
            rows.iter()
                .map(|(_, v)| v[i].len())
                .chain([headers[i].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let _ = write!(out, "{:label_w$}", "");
    for (h, w) in headers.iter().zip(&widths) {
        let _ = write!(out, "  {h:>w$}");
    }
    out.push('\n');
    for (label, values) in rows {
        let _ = write!(out, "{label:label_w$}");
        for (v, w) in values.iter().zip(&widths) {
            let _ = write!(out, "  {v:>w$}");
        }
        out.push('\n');
    }
    out
}

impl BenchmarkProfile {
    /// Aligned text table, values as `(query, datalake)` where per-side.
    pub fn to_text(&self) -> String {
        let rows: Vec<(String, Vec<String>)> = report_rows(self)
            .into_iter()
            .map(|(l, v)| (l.to_string(), vec![v]))
            .collect();
        render_columns(std::slice::from_ref(&self.name), &rows)
    }

    /// Numeric fields in a fixed order, used for comparisons.
    fn metrics(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("tables".to_string(), self.n_tables as f64),
            ("unionable_pairs".to_string(), self.unionable_pairs as f64),
            ("non_unionable_pairs".to_string(), self.non_unionable_pairs as f64),
        ];
        for (side, s) in [("query", &self.query), ("datalake", &self.datalake)] {
            let fields: [(&str, f64); 13] = [
                ("tables", s.n_tables as f64),
                ("avg_rows", s.avg_rows),
                ("avg_cols", s.avg_cols),
                ("bytes", s.bytes as f64),
                ("short_str", s.short_str as f64),
                ("medium_str", s.medium_str as f64),
                ("long_str", s.long_str as f64),
                ("numeric", s.numeric as f64),
                ("avg_density", s.avg_density),
                ("avg_words", s.avg_words),
                ("sparsely_unique", s.sparsely_unique as f64),
                ("moderately_unique", s.moderately_unique as f64),
                ("densely_unique", s.densely_unique as f64),
            ];
            out.extend(fields.iter().map(|(f, v)| (format!("{side}.{f}"), *v)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub field: String,
    pub values: Vec<f64>,
    /// Difference to the first benchmark's value.
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub benchmarks: Vec<String>,
    pub rows: Vec<ComparisonRow>,
    /// Benchmarks (after the first) with lower average density than the
    /// first on either side.
    pub lower_density: Vec<String>,
    pub profiles: Vec<BenchmarkProfile>,
}

pub fn compare_profiles(profiles: &[BenchmarkProfile]) -> Result<Comparison, ProfileError> {
    if profiles.len() < 2 {
        return Err(ProfileError::TooFewProfiles(profiles.len()));
    }
    let metrics: Vec<Vec<(String, f64)>> = profiles.iter().map(BenchmarkProfile::metrics).collect();
    let rows = (0..metrics[0].len())
        .map(|i| {
            let values: Vec<f64> = metrics.iter().map(|m| m[i].1).collect();
            ComparisonRow {
                field: metrics[0][i].0.clone(),
                deltas: values.iter().map(|v| v - values[0]).collect(),
                values,
            }
        })
        .collect();
    let base = &profiles[0];
    let lower_density = profiles[1..]
        .iter()
        .filter(|p| {
            p.query.avg_density < base.query.avg_density
                || p.datalake.avg_density < base.datalake.avg_density
        })
        .map(|p| p.name.clone())
        .collect();
    Ok(Comparison {
        benchmarks: profiles.iter().map(|p| p.name.clone()).collect(),
        rows,
        lower_density,
        profiles: profiles.to_vec(),
    })
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let n = self.profiles.len();
        let per_profile: Vec<Vec<(&'static str, String)>> =
            self.profiles.iter().map(report_rows).collect();
        let rows: Vec<(String, Vec<String>)> = (0..per_profile[0].len())
            .map(|i| {
                (
                    per_profile[0][i].0.to_string(),
                    (0..n).map(|j| per_profile[j][i].1.clone()).collect(),
                )
            })
            .collect();
        let mut out = render_columns(&self.benchmarks, &rows);
        let changed: Vec<&ComparisonRow> = self
            .rows
            .iter()
            .filter(|r| r.deltas.iter().any(|d| *d != 0.0))
            .collect();
        if !changed.is_empty() {
            out.push_str(&format!("\ndifferences from {}:\n", self.benchmarks[0]));
            let delta_rows: Vec<(String, Vec<String>)> = changed
                .iter()
                .map(|r| (r.field.clone(), r.deltas[1..].iter().map(|d| format!("{d:+.4}")).collect()))
                .collect();
            out.push_str(&render_columns(&self.benchmarks[1..], &delta_rows));
        }
        for name in &self.lower_density {
            out.push_str(&format!("\n{name}: lower average density than {}", self.benchmarks[0]));
        }
        if !self.lower_density.is_empty() {
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn density_and_uniqueness() {
        let mut v = vec!["a"; 8];
        v.extend(["", ""]);
        let s = profile_column(&v);
        assert!((s.density - 0.8).abs() < 1e-12);
        assert!((s.uniqueness - 1.0 / 8.0).abs() < 1e-12);

        let same = profile_column(&["x"; 10]);
        assert!((same.uniqueness - 0.1).abs() < 1e-12);
        assert_eq!(same.bucket, UniquenessBucket::Moderate);

        let distinct: Vec<String> = (0..10).map(|i| i.to_string()).collect();
        let d = profile_column(&distinct);
        assert_eq!(d.uniqueness, 1.0);
        assert_eq!(d.bucket, UniquenessBucket::Dense);
        assert_eq!(d.col_type, ColumnType::Numeric);

        let empty = profile_column(&["", ""]);
        assert_eq!((empty.density, empty.uniqueness), (0.0, 0.0));
        assert_eq!(empty.bucket, UniquenessBucket::Sparse);
        assert_eq!(profile_column::<&str>(&[]).density, 1.0);
    }

    /// Oracle: bucket edges enumerated on exact rationals d/n.
    #[test]
    fn bucket_edges() {
        for n in 1..=60usize {
            for d in 1..=n {
                let values: Vec<String> = (0..n).map(|i| format!("v{}", i % d)).collect();
                let want = if 10 * d < n {
                    UniquenessBucket::Sparse
                } else if 2 * d < n {
                    UniquenessBucket::Moderate
                } else {
                    UniquenessBucket::Dense
                };
                assert_eq!(profile_column(&values).bucket, want, "d={d} n={n}");
            }
        }
        let half: Vec<String> = (0..10).map(|i| format!("v{}", i % 5)).collect();
        assert_eq!(profile_column(&half).bucket, UniquenessBucket::Dense);
    }

    #[test]
    fn null_literals_are_optional() {
        let t = Table::new("t", vec!["a".into()], vec![vec!["NaN".into()], vec!["1".into()]]).unwrap();
        let plain = ProfileOptions::default().normalize(t.clone());
        assert_eq!(plain.n_nulls(), 0);
        let opts = ProfileOptions { null_literals: vec!["nan".into()] };
        assert_eq!(opts.normalize(t).n_nulls(), 1);
    }

    fn table(seed: u64, n: usize) -> Table {
        let rows = (0..n)
            .map(|r| vec![format!("{}", (r as u64 * seed) % 7), if r % 3 == 0 { String::new() } else { "word word word".into() }])
            .collect();
        Table::new(format!("t{seed}"), vec!["x".into(), "y".into()], rows).unwrap()
    }

    proptest! {
        #[test]
        fn partitions_and_order_invariance(seeds in proptest::collection::vec((1u64..50, 0usize..12), 1..8)) {
            let tables: Vec<Table> = seeds.iter().map(|&(s, n)| table(s, n)).collect();
            let p = SideProfile::from_tables(&tables, 0);
            prop_assert_eq!(p.short_str + p.medium_str + p.long_str + p.numeric, p.n_columns);
            prop_assert_eq!(p.sparsely_unique + p.moderately_unique + p.densely_unique, p.n_columns);
            prop_assert!((0.0..=1.0).contains(&p.avg_density));
            let mut rev = tables.clone();
            rev.reverse();
            let q = SideProfile::from_tables(&rev, 0);
            prop_assert_eq!(p.n_columns, q.n_columns);
            prop_assert_eq!(p.numeric, q.numeric);
            prop_assert!((p.avg_density - q.avg_density).abs() < 1e-12);
            prop_assert!((p.avg_rows - q.avg_rows).abs() < 1e-12);
        }
    }

    #[test]
    fn density_composes_with_sparsity() {
        use crate::sparsity::{inject_nulls_seeded, SparsityLevel};
        let t = Table::new(
            "t",
            (0..5).map(|c| format!("c{c}")).collect(),
            (0..8).map(|r| (0..5).map(|c| format!("{r}{c}")).collect()).collect(),
        )
        .unwrap();
        let level = SparsityLevel::from_percent(20.0).unwrap();
        let sparse = inject_nulls_seeded(&t, level, 1, "t");
        let p = SideProfile::from_tables(&[sparse], 0);
        // Column densities average to the overall non-null share when all
        // columns have the same row count.
        let want = 1.0 - level.target_nulls(40) as f64 / 40.0;
        assert!((p.avg_density - want).abs() < 1e-12);
    }

    fn bench(dir: &Path, seed: u64) {
        let cfg = crate::generation::GenConfig {
            topics: vec!["Astronomy".into(), "Genealogy".into()],
            pairs_per_topic: 4,
            seed,
            ..Default::default()
        };
        crate::generation::generate_benchmark(&cfg, &crate::provider::StubProvider::default(), dir).unwrap();
    }

    #[test]
    fn stub_benchmark_profile() {
        let dir = tempfile::tempdir().unwrap();
        bench(dir.path(), 1);
        let p = profile_benchmark(dir.path(), &ProfileOptions::default()).unwrap();
        assert_eq!(p.n_tables, 10);
        assert_eq!((p.unionable_pairs, p.non_unionable_pairs), (4, 4));
        assert_eq!(p.query.n_tables, 2);
        assert_eq!(p.query.avg_density, 1.0);
        assert_eq!(p.datalake.avg_density, 1.0);
        assert!(p.query.bytes > 0);
        assert!(p.to_text().contains("labeled pairs"));
    }

    #[test]
    fn comparisons() {
        let dir = tempfile::tempdir().unwrap();
        bench(dir.path(), 1);
        let p = profile_benchmark(dir.path(), &ProfileOptions::default()).unwrap();
        assert!(matches!(compare_profiles(std::slice::from_ref(&p)), Err(ProfileError::TooFewProfiles(1))));
        let same = compare_profiles(&[p.clone(), p.clone()]).unwrap();
        assert!(same.rows.iter().all(|r| r.deltas.iter().all(|d| *d == 0.0)));
        assert!(same.lower_density.is_empty());

        let sparse_dir = crate::sparsity::materialize_variants(
            dir.path(),
            &[crate::sparsity::SparsityLevel::from_percent(10.0).unwrap()],
            3,
            Some(dir.path()),
            false,
        )
        .unwrap();
        let sparse = profile_benchmark(&sparse_dir[0], &ProfileOptions::default()).unwrap();
        let cmp = compare_profiles(&[p, sparse.clone()]).unwrap();
        assert_eq!(cmp.lower_density, vec![sparse.name.clone()]);
        assert!(cmp.to_text().contains("lower average density"));
    }

    #[test]
    fn missing_groundtruth_is_layout_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            profile_benchmark(dir.path(), &ProfileOptions::default()),
            Err(ProfileError::Layout(LayoutError::MissingGroundTruth(_)))
        ));
    }
}
