//! Table representation, pipe-format parsing, CSV I/O and column type inference.
//!
//! Cells are plain strings. The empty string is the only null marker, both in
//! memory and on disk.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("no parseable line in input")]
    EmptyInput,
    #[error("malformed CSV: {0}")]
    MalformedCsv(String),
    #[error("invalid table name {0:?}")]
    InvalidName(String),
    #[error("header column {0} is blank")]
    BlankHeader(usize),
    #[error("row {row} has {found} cells, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
}

/// A named grid of string cells with a header row.
///
/// Invariants: every row has exactly `header.len()` cells, header names are
/// non-blank and the name is usable as a filename stem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    topic: Option<String>,
}

impl Table {
    pub fn new(
        name: impl Into<String>,
        header: Vec<String>,
        rows: Vec<Vec<String>>,
    ) -> Result<Self, TableError> {
        let name = name.into();
        validate_name(&name)?;
        if let Some(i) = header.iter().position(|h| h.trim().is_empty()) {
            return Err(TableError::BlankHeader(i));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != header.len() {
                return Err(TableError::RaggedRow {
                    row: i,
                    expected: header.len(),
                    found: row.len(),
                });
            }
        }
        Ok(Self {
            name,
            header,
            rows,
            topic: None,
        })
    }

    pub fn with_topic(mut self, topic: impl Into<String>) -> Self {
        self.topic = Some(topic.into());
        self
    }

    /// Same table under another name.
    pub fn renamed(&self, name: impl Into<String>) -> Result<Self, TableError> {
        let name = name.into();
        validate_name(&name)?;
        Ok(Self {
            name,
            ..self.clone()
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn topic(&self) -> Option<&str> {
        self.topic.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.header.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n_rows() * self.n_cols()
    }

    pub fn n_nulls(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_empty()).count()
    }

    pub fn column(&self, idx: usize) -> impl Iterator<Item = &str> + '_ {
        self.rows.iter().map(move |r| r[idx].as_str())
    }

    pub fn column_values(&self, idx: usize) -> Vec<&str> {
        self.column(idx).collect()
    }

    /// Copy with only the first `limit` rows.
    pub fn truncated(&self, limit: usize) -> Self {
        Self {
            rows: self.rows.iter().take(limit).cloned().collect(),
            ..self.clone()
        }
    }

    /// Copy with a replacement cell grid of the same shape.
    pub(crate) fn map_rows(&self, rows: Vec<Vec<String>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == self.header.len()));
        Self {
            rows,
            ..self.clone()
        }
    }

    /// Renders the table in the `a | b | c` layout used in prompts.
    ///
    /// Pipes and line breaks inside cells would corrupt the layout, so they are
    /// replaced with `/` and a space respectively.
    pub fn to_pipe_text(&self) -> String {
        let mut out = String::new();
        push_pipe_line(&mut out, &self.header);
        for row in &self.rows {
            push_pipe_line(&mut out, row);
        }
        out
    }
}

fn push_pipe_line(out: &mut String, cells: &[String]) {
    out.push('|');
    for cell in cells {
        out.push(' ');
        out.push_str(&pipe_safe(cell));
        out.push_str(" |");
    }
    out.push('\n');
}

fn pipe_safe(cell: &str) -> String {
    cell.replace('|', "/").replace(['\r', '\n'], " ")
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_pipe_text())
    }
}

fn validate_name(name: &str) -> Result<(), TableError> {
    let bad = name.is_empty()
        || name == "."
        || name == ".."
        || name.contains(['/', '\\', '\0']);
    if bad {
        Err(TableError::InvalidName(name.to_string()))
    } else {
        Ok(())
    }
}

/// Repair applied while reading a pipe-formatted table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ParseWarning {
    /// Row had fewer cells than the header and was right-padded.
    PaddedRow { row: usize, found: usize },
    /// Row had more cells than the header and was truncated.
    TruncatedRow { row: usize, found: usize },
    /// Blank header cell replaced with a positional name.
    BlankHeader { col: usize },
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseWarning::PaddedRow { row, found } => {
                write!(f, "row {row} padded (had {found} cells)")
            }
            ParseWarning::TruncatedRow { row, found } => {
                write!(f, "row {row} truncated (had {found} cells)")
            }
            ParseWarning::BlankHeader { col } => write!(f, "blank header at column {col}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipeParse {
    pub table: Table,
    pub warnings: Vec<ParseWarning>,
}

/// Parses a pipe-delimited block as emitted by an LLM.
///
/// The first non-blank, non-decoration line is the header. Markdown separator
/// lines (`---|:--:`) are skipped. Rows are padded or truncated to the header
/// width, with one warning per repaired row.
pub fn parse_pipe_table(name: &str, text: &str) -> Result<PipeParse, TableError> {
    let mut lines = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(split_pipe_line)
        .filter(|cells| !is_decoration(cells));

    let raw_header = lines.next().ok_or(TableError::EmptyInput)?;
    let mut warnings = Vec::new();
    let header: Vec<String> = raw_header
        .into_iter()
        .enumerate()
        .map(|(i, h)| {
            if h.is_empty() {
                warnings.push(ParseWarning::BlankHeader { col: i });
                format!("column_{}", i + 1)
            } else {
                h
            }
        })
        .collect();

    let width = header.len();
    let mut rows = Vec::new();
    for (i, mut cells) in lines.enumerate() {
        let found = cells.len();
        if found < width {
            cells.resize(width, String::new());
            warnings.push(ParseWarning::PaddedRow { row: i, found });
        } else if found > width {
            cells.truncate(width);
            warnings.push(ParseWarning::TruncatedRow { row: i, found });
        }
        rows.push(cells);
    }

    Ok(PipeParse {
        table: Table::new(name, header, rows)?,
        warnings,
    })
}

fn split_pipe_line(line: &str) -> Vec<String> {
    let mut s = line.trim();
    if let Some(rest) = s.strip_prefix('|') {
        s = rest;
    }
    if let Some(rest) = s.strip_suffix('|') {
        s = rest;
    }
    s.split('|').map(|c| c.trim().to_string()).collect()
}

fn is_decoration(cells: &[String]) -> bool {
    cells.iter().all(|c| {
        !c.is_empty() && c.contains('-') && c.chars().all(|ch| ch == '-' || ch == ':')
    })
}

/// Writes RFC-4180 CSV: comma delimiter, minimal quoting, `\n` terminators.
pub fn serialize_csv(table: &Table) -> String {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // Writing into a Vec cannot fail.
    wtr.write_record(table.header()).expect("in-memory write");
    for row in table.rows() {
        wtr.write_record(row).expect("in-memory write");
    }
    let bytes = wtr.into_inner().expect("in-memory flush");
    String::from_utf8(bytes).expect("cells are UTF-8")
}

pub fn parse_csv(name: &str, text: &str) -> Result<Table, TableError> {
    // The csv reader accepts an unterminated quoted field at EOF; RFC-4180
    // quotes always come in pairs, so an odd count means an unbalanced quote.
    if text.bytes().filter(|&b| b == b'"').count() % 2 == 1 {
        return Err(TableError::MalformedCsv("unbalanced quotes".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| TableError::MalformedCsv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() {
        return Err(TableError::EmptyInput);
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| TableError::MalformedCsv(e.to_string()))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Table::new(name, header, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ColumnType {
    Numeric,
    ShortString,
    MediumString,
    LongString,
}

/// Minimum share of non-null values that must parse as numbers, as a ratio
/// `NUMERIC_NUM / NUMERIC_DEN` (90%).
const NUMERIC_NUM: usize = 9;
const NUMERIC_DEN: usize = 10;

/// Number of whitespace-delimited words in a cell.
pub fn word_count(value: &str) -> usize {
    value.split_whitespace().count()
}

/// Decimal number with optional sign, optional thousands commas and at most
/// one decimal point.
pub fn is_decimal(value: &str) -> bool {
    let s = value.trim();
    let s = s.strip_prefix(['+', '-']).unwrap_or(s);
    let mut digits = 0;
    let mut points = 0;
    for ch in s.chars() {
        match ch {
            '0'..='9' => digits += 1,
            '.' => points += 1,
            ',' => {}
            _ => return false,
        }
    }
    digits > 0 && points <= 1
}

/// Mean words per non-null value; 0 for an all-null column.
pub fn mean_words<'a>(values: impl IntoIterator<Item = &'a str>) -> f64 {
    let (n, words) = values
        .into_iter()
        .filter(|v| !v.is_empty())
        .fold((0usize, 0usize), |(n, w), v| (n + 1, w + word_count(v)));
    if n == 0 {
        0.0
    } else {
        words as f64 / n as f64
    }
}

pub fn infer_column_type<S: AsRef<str>>(values: &[S]) -> ColumnType {
    let non_null: Vec<&str> = values
        .iter()
        .map(AsRef::as_ref)
        .filter(|v| !v.is_empty())
        .collect();
    if non_null.is_empty() {
        return ColumnType::ShortString;
    }
    let numeric = non_null.iter().filter(|v| is_decimal(v)).count();
    if numeric * NUMERIC_DEN >= non_null.len() * NUMERIC_NUM {
        return ColumnType::Numeric;
    }
    // Compare total words against 3n and 6n to stay in integer arithmetic.
    let words: usize = non_null.iter().map(|v| word_count(v)).sum();
    let n = non_null.len();
    if words < 3 * n {
        ColumnType::ShortString
    } else if words < 6 * n {
        ColumnType::MediumString
    } else {
        ColumnType::LongString
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(header: &[&str], rows: &[&[&str]]) -> Table {
        Table::new(
            "t",
            header.iter().map(|s| s.to_string()).collect(),
            rows.iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn pipe_basic() {
        let p = parse_pipe_table("t", "A | B\n1 | x\n2 | y").unwrap();
        assert_eq!(p.table, t(&["A", "B"], &[&["1", "x"], &["2", "y"]]));
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn pipe_drops_markdown_separator() {
        let p = parse_pipe_table("t", "A | B\n---|---\n1 | x").unwrap();
        assert_eq!(p.table, t(&["A", "B"], &[&["1", "x"]]));
        let p = parse_pipe_table("t", "| A | B |\n|:---|---:|\n| 1 | x |").unwrap();
        assert_eq!(p.table, t(&["A", "B"], &[&["1", "x"]]));
    }

    #[test]
    fn pipe_pads_short_rows() {
        let p = parse_pipe_table("t", "A | B | C\n1 | x").unwrap();
        assert_eq!(p.table, t(&["A", "B", "C"], &[&["1", "x", ""]]));
        assert_eq!(p.warnings, vec![ParseWarning::PaddedRow { row: 0, found: 2 }]);
    }

    #[test]
    fn pipe_truncates_long_rows() {
        let p = parse_pipe_table("t", "A | B\n1 | x | extra").unwrap();
        assert_eq!(p.table, t(&["A", "B"], &[&["1", "x"]]));
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn pipe_header_only_is_fine() {
        let p = parse_pipe_table("t", "\n  A | B  \n\n").unwrap();
        assert_eq!(p.table.n_rows(), 0);
        assert_eq!(p.table.header(), ["A", "B"]);
    }

    #[test]
    fn pipe_empty_input() {
        assert_eq!(parse_pipe_table("t", "  \n\n").unwrap_err(), TableError::EmptyInput);
        assert_eq!(parse_pipe_table("t", "---|---\n").unwrap_err(), TableError::EmptyInput);
    }

    #[test]
    fn pipe_blank_header_gets_name() {
        let p = parse_pipe_table("t", "A |  | C\n1 | 2 | 3").unwrap();
        assert_eq!(p.table.header(), ["A", "column_2", "C"]);
    }

    #[test]
    fn pipe_render_keeps_empty_cells() {
        let table = t(&["A"], &[&[""], &["x"]]);
        let back = parse_pipe_table("t", &table.to_pipe_text()).unwrap();
        assert_eq!(back.table, table);
    }

    #[test]
    fn csv_quotes_embedded_comma() {
        let table = t(&["A"], &[&["x,y"]]);
        assert_eq!(serialize_csv(&table), "A\n\"x,y\"\n");
    }

    #[test]
    fn csv_zero_rows() {
        let table = t(&["A", "B"], &[]);
        assert_eq!(serialize_csv(&table), "A,B\n");
        assert_eq!(parse_csv("t", "A,B\n").unwrap(), table);
    }

    #[test]
    fn csv_single_empty_cell_survives() {
        let table = t(&["A"], &[&[""], &["b"]]);
        assert_eq!(parse_csv("t", &serialize_csv(&table)).unwrap(), table);
    }

    #[test]
    fn csv_unbalanced_quote() {
        assert!(matches!(
            parse_csv("t", "A,B\n\"x,1\n"),
            Err(TableError::MalformedCsv(_))
        ));
    }

    #[test]
    fn csv_ragged_is_malformed() {
        assert!(matches!(
            parse_csv("t", "A,B\n1\n"),
            Err(TableError::MalformedCsv(_))
        ));
    }

    #[test]
    fn names_are_filename_stems() {
        assert!(Table::new("a/b", vec!["A".into()], vec![]).is_err());
        assert!(Table::new("..", vec!["A".into()], vec![]).is_err());
        assert!(Table::new("", vec!["A".into()], vec![]).is_err());
        assert!(Table::new("ok_1", vec!["A".into()], vec![]).is_ok());
        assert_eq!(
            Table::new("x", vec![" ".into()], vec![]).unwrap_err(),
            TableError::BlankHeader(0)
        );
    }

    #[test]
    fn column_types() {
        assert_eq!(infer_column_type(&["12", "3.5", "-7"]), ColumnType::Numeric);
        assert_eq!(
            infer_column_type(&["New York", "Los Angeles"]),
            ColumnType::ShortString
        );
        assert_eq!(infer_column_type::<&str>(&[]), ColumnType::ShortString);
        assert_eq!(infer_column_type(&["", ""]), ColumnType::ShortString);
        assert_eq!(infer_column_type(&["1,200", "+3", ""]), ColumnType::Numeric);
        assert_eq!(
            infer_column_type(&["a b c", "d e f g"]),
            ColumnType::MediumString
        );
        assert_eq!(
            infer_column_type(&["one two three four five six"]),
            ColumnType::LongString
        );
    }

    #[test]
    fn numeric_threshold_is_ninety_percent() {
        let mut vals = vec!["1"; 9];
        vals.push("km");
        assert_eq!(infer_column_type(&vals), ColumnType::Numeric);
        let mut vals = vec!["1"; 8];
        vals.extend(["km", "mi"]);
        assert_eq!(infer_column_type(&vals), ColumnType::ShortString);
    }

    #[test]
    fn decimal_recognition() {
        for ok in ["0", "-1.5", "+2", "1,234,567.89", ".5", "5."] {
            assert!(is_decimal(ok), "{ok}");
        }
        for bad in ["", "-", "1.2.3", "12km", "1e5", "N/A", "."] {
            assert!(!is_decimal(bad), "{bad}");
        }
    }

    // Independent word counter: counts transitions into non-whitespace runs.
    fn oracle_words(s: &str) -> usize {
        let mut n = 0;
        let mut in_word = false;
        for ch in s.chars() {
            if ch.is_whitespace() {
                in_word = false;
            } else if !in_word {
                in_word = true;
                n += 1;
            }
        }
        n
    }

    #[test]
    fn word_counter_matches_oracle() {
        for s in ["New York", "Los Angeles", "  a\tb\nc ", "", "x"] {
            assert_eq!(word_count(s), oracle_words(s));
        }
        let mean = (oracle_words("New York") + oracle_words("Los Angeles")) as f64 / 2.0;
        assert_eq!(mean, 2.0);
    }

    fn cell() -> impl Strategy<Value = String> {
        prop_oneof![
            Just(String::new()),
            "[a-z ,\"\n]{0,8}",
            "[0-9.,-]{1,6}",
        ]
    }

    fn table_strategy() -> impl Strategy<Value = Table> {
        (1usize..6, 0usize..6).prop_flat_map(|(cols, rows)| {
            (
                prop::collection::vec("[A-Za-z][A-Za-z ,\"]{0,6}", cols),
                prop::collection::vec(prop::collection::vec(cell(), cols), rows),
            )
                .prop_map(|(header, rows)| Table::new("r", header, rows).unwrap())
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip(table in table_strategy()) {
            let text = serialize_csv(&table);
            prop_assert_eq!(parse_csv("r", &text).unwrap(), table);
        }

        #[test]
        fn pipe_parse_is_never_ragged(
            lines in prop::collection::vec(prop::collection::vec("[a-z0-9 ]{0,5}", 1..6), 1..8)
        ) {
            let text: String = lines
                .iter()
                .map(|cells| format!("| {} |", cells.join(" | ")))
                .collect::<Vec<_>>()
                .join("\n");
            if let Ok(p) = parse_pipe_table("r", &text) {
                let width = p.table.n_cols();
                prop_assert!(p.table.rows().iter().all(|r| r.len() == width));
                let ragged = lines
                    .iter()
                    .skip(1)
                    .filter(|c| c.len() != width)
                    .count();
                let repairs = p
                    .warnings
                    .iter()
                    .filter(|w| !matches!(w, ParseWarning::BlankHeader { .. }))
                    .count();
                prop_assert_eq!(repairs, ragged);
            }
        }

        #[test]
        fn type_inference_permutation_invariant(
            mut vals in prop::collection::vec("[a-z0-9 .]{0,12}", 0..12),
            seed in any::<u64>()
        ) {
            let before = infer_column_type(&vals);
            let n = vals.len();
            if n > 1 {
                let k = (seed % n as u64) as usize;
                vals.rotate_left(k);
                vals.reverse();
            }
            prop_assert_eq!(infer_column_type(&vals), before);
        }
    }
}
