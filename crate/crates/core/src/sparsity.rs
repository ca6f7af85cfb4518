//! Null injection and sparsity variants of a benchmark.
//!
//! Each table gets one random permutation of its data cells, derived from the
//! seed and the table's path in the benchmark. A level with target `n` nulls
//! walks that permutation, emptying cells until `n` are empty, so the null
//! set at a lower rate is always a subset of the null set at a higher one.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::benchmark::{
    io_err, list_csv, read_table, LayoutError, DATALAKE_DIR, GROUNDTRUTH_FILE, KEYS_FILE,
    MANIFEST_FILE, QUERY_DIR,
};
use crate::generation::clear_benchmark;
use crate::seed::derive;
use crate::table::{serialize_csv, Table};

#[derive(Debug, Error)]
pub enum SparsityError {
    #[error("sparsity rate {0} outside [0, 1]")]
    InvalidRate(f64),
    #[error("no sparsity levels given")]
    NoLevels,
    #[error("destination {0} already holds a benchmark")]
    DestinationExists(PathBuf),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

/// Fraction of data cells to leave empty.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SparsityLevel {
    rate: f64,
}

impl SparsityLevel {
    pub fn new(rate: f64) -> Result<Self, SparsityError> {
        if (0.0..=1.0).contains(&rate) {
            Ok(Self { rate })
        } else {
            Err(SparsityError::InvalidRate(rate))
        }
    }

    pub fn from_percent(pct: f64) -> Result<Self, SparsityError> {
        Self::new(pct / 100.0)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Percentage without trailing zeros: `5`, `12.5`.
    pub fn percent_label(&self) -> String {
        let pct = format!("{:.6}", self.rate * 100.0);
        pct.trim_end_matches('0').trim_end_matches('.').to_string()
    }

    /// Number of empty cells wanted in a table with `cells` data cells:
    /// `rate * cells` rounded half up.
    pub fn target_nulls(&self, cells: usize) -> usize {
        // The epsilon keeps exact halves such as 0.15 * 30 from rounding down
        // through representation error.
        ((self.rate * cells as f64) + 0.5 + 1e-9).floor().min(cells as f64) as usize
    }
}

impl fmt::Display for SparsityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", self.percent_label())
    }
}

impl FromStr for SparsityLevel {
    type Err = String;

    /// Parses a percentage such as `5`, `12.5` or `20%`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_end_matches('%');
        let pct: f64 = t.parse().map_err(|_| format!("invalid percentage {s:?}"))?;
        if !pct.is_finite() {
            return Err(format!("invalid percentage {s:?}"));
        }
        Self::from_percent(pct).map_err(|_| format!("percentage {s:?} outside [0, 100]"))
    }
}

/// Empties cells of `t` in the order given by `order` (flat row-major cell
/// indices) until `target` cells are empty. Existing empties count.
fn apply_order(t: &Table, order: &[usize], target: usize) -> Table {
    let cols = t.n_cols();
    let mut rows: Vec<Vec<String>> = t.rows().to_vec();
    let mut nulls = t.n_nulls();
    for &idx in order {
        if nulls >= target {
            break;
        }
        let cell = &mut rows[idx / cols][idx % cols];
        if !cell.is_empty() {
            cell.clear();
            nulls += 1;
        }
    }
    t.map_rows(rows)
}

fn permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Returns a copy of `t` with exactly `round(rate * cells)` empty data cells,
/// or `t` unchanged if it already has at least that many. The header is
/// never touched.
pub fn inject_nulls(t: &Table, level: SparsityLevel, rng: &mut impl Rng) -> Table {
    let order = permutation(t.n_cells(), rng);
    apply_order(t, &order, level.target_nulls(t.n_cells()))
}

/// [`inject_nulls`] with a per-table stream derived from `seed` and `label`.
/// The same `(seed, label)` gives nested null sets across levels.
pub fn inject_nulls_seeded(t: &Table, level: SparsityLevel, seed: u64, label: &str) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, label));
    inject_nulls(t, level, &mut rng)
}

/// Directory name of a variant: `<name>_sparsity_<pct>`.
pub fn variant_dir(source: &Path, level: SparsityLevel, parent: Option<&Path>) -> PathBuf {
    let source = source.canonicalize().unwrap_or_else(|_| source.to_path_buf());
    let name = source
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "benchmark".into());
    let parent = parent
        .map(Path::to_path_buf)
        .or_else(|| source.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    parent.join(format!("{name}_sparsity_{}", level.percent_label()))
}

fn copy(from: &Path, to: &Path) -> Result<(), LayoutError> {
    fs::copy(from, to).map(|_| ()).map_err(io_err(from))
}

/// Writes one sparsity variant of the benchmark at `source` per level.
///
/// Ground truth, keys and manifest are copied byte for byte. Tables that gain
/// no nulls at a level (always the case at rate 0) are copied byte for byte
/// as well. With `force`, a destination that already holds a benchmark is
/// cleared first.
pub fn materialize_variants(
    source: &Path,
    levels: &[SparsityLevel],
    seed: u64,
    parent: Option<&Path>,
    force: bool,
) -> Result<Vec<PathBuf>, SparsityError> {
    if levels.is_empty() {
        return Err(SparsityError::NoLevels);
    }
    if !source.join(GROUNDTRUTH_FILE).is_file() {
        return Err(LayoutError::MissingGroundTruth(source.join(GROUNDTRUTH_FILE)).into());
    }
    let mut files: Vec<(&str, PathBuf)> = Vec::new();
    for role in [QUERY_DIR, DATALAKE_DIR] {
        files.extend(list_csv(&source.join(role))?.into_iter().map(|p| (role, p)));
    }
    let tables: Vec<Table> = files
        .par_iter()
        .map(|(_, p)| read_table(p))
        .collect::<Result<_, _>>()?;
    let orders: Vec<Vec<usize>> = files
        .iter()
        .zip(&tables)
        .map(|((role, _), t)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &format!("{role}/{}", t.name())));
            permutation(t.n_cells(), &mut rng)
        })
        .collect();

    let mut out = Vec::new();
    for &level in levels {
        let dest = variant_dir(source, level, parent);
        let occupied = [QUERY_DIR, DATALAKE_DIR, GROUNDTRUTH_FILE]
            .iter()
            .any(|e| dest.join(e).exists());
        if occupied {
            if !force {
                return Err(SparsityError::DestinationExists(dest));
            }
            clear_benchmark(&dest)?;
        }
        for role in [QUERY_DIR, DATALAKE_DIR] {
            let d = dest.join(role);
            fs::create_dir_all(&d).map_err(io_err(&d))?;
        }
        for f in [GROUNDTRUTH_FILE, KEYS_FILE, MANIFEST_FILE] {
            if source.join(f).is_file() {
                copy(&source.join(f), &dest.join(f))?;
            }
        }
        files
            .par_iter()
            .zip(&tables)
            .zip(&orders)
            .try_for_each(|(((role, path), t), order)| {
                let target = dest.join(role).join(path.file_name().expect("listed file"));
                let sparse = apply_order(t, order, level.target_nulls(t.n_cells()));
                if sparse.n_nulls() == t.n_nulls() {
                    copy(path, &target)
                } else {
                    fs::write(&target, serialize_csv(&sparse)).map_err(io_err(&target))
                }
            })?;
        out.push(dest);
    }
    Ok(out)
}
