//! Reading numeric records and extracting significant digits.
//!
//! Extraction works on the decimal text of a value, never on a binary
//! float, so a token such as `0.1` can not be nudged across a digit
//! boundary by representation error.

use std::fmt;
use std::io::{BufReader, Read};
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which leading digits are tallied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigitSystem {
    /// First significant digit, labels 1..=9.
    FirstDigit,
    /// First two significant digits, labels 10..=99.
    FirstTwoDigits,
}

impl DigitSystem {
    pub const ALL: [DigitSystem; 2] = [DigitSystem::FirstDigit, DigitSystem::FirstTwoDigits];

    /// Number of digit cells.
    pub fn k(self) -> usize {
        match self {
            DigitSystem::FirstDigit => 9,
            DigitSystem::FirstTwoDigits => 90,
        }
    }

    pub fn labels(self) -> RangeInclusive<u32> {
        match self {
            DigitSystem::FirstDigit => 1..=9,
            DigitSystem::FirstTwoDigits => 10..=99,
        }
    }

    /// Number of leading digits read (1 or 2).
    pub fn width(self) -> u8 {
        match self {
            DigitSystem::FirstDigit => 1,
            DigitSystem::FirstTwoDigits => 2,
        }
    }

    pub fn from_width(width: u8) -> Result<Self> {
        match width {
            1 => Ok(DigitSystem::FirstDigit),
            2 => Ok(DigitSystem::FirstTwoDigits),
            other => Err(Error::Config(format!("digits must be 1 or 2, got {other}"))),
        }
    }

    /// Cell index of a digit label, if the label belongs to this system.
    pub fn index_of(self, label: u32) -> Option<usize> {
        let labels = self.labels();
        labels.contains(&label).then(|| (label - labels.start()) as usize)
    }

    pub fn label_at(self, index: usize) -> u32 {
        self.labels().start() + index as u32
    }

    /// Extracts this system's digit label from a decimal token.
    pub fn extract(self, token: &str) -> Result<Option<u32>> {
        match self {
            DigitSystem::FirstDigit => first_digit(token),
            DigitSystem::FirstTwoDigits => first_two_digits(token),
        }
    }

    /// Extracts from a binary float by way of its shortest round-trip text.
    pub fn extract_f64(self, value: f64) -> Result<Option<u32>> {
        if !value.is_finite() {
            return Err(Error::Parse(value.to_string()));
        }
        self.extract(&format!("{value:e}"))
    }
}

impl fmt::Display for DigitSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DigitSystem::FirstDigit => f.write_str("first digit"),
            DigitSystem::FirstTwoDigits => f.write_str("first-two digits"),
        }
    }
}

/// Why a record was not counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SkipReason {
    Empty,
    NonNumeric,
    /// Exactly zero: no significant digit exists.
    Zero,
}

/// Tally of skipped records by reason.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub empty: u64,
    pub non_numeric: u64,
    pub zero: u64,
}

impl SkipReport {
    pub fn record(&mut self, reason: SkipReason) {
        match reason {
            SkipReason::Empty => self.empty += 1,
            SkipReason::NonNumeric => self.non_numeric += 1,
            SkipReason::Zero => self.zero += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.empty + self.non_numeric + self.zero
    }

    pub fn merge(&mut self, other: &SkipReport) {
        self.empty += other.empty;
        self.non_numeric += other.non_numeric;
        self.zero += other.zero;
    }
}

/// Observed digit frequencies for one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitCounts {
    pub system: DigitSystem,
    pub counts: Vec<u64>,
    /// Number of counted records, always `counts.iter().sum()`.
    pub n: u64,
    pub skipped: SkipReport,
}

impl DigitCounts {
    pub fn empty(system: DigitSystem) -> Self {
        DigitCounts { system, counts: vec![0; system.k()], n: 0, skipped: SkipReport::default() }
    }

    /// Builds counts from a raw vector, e.g. for synthetic data.
    pub fn from_counts(system: DigitSystem, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != system.k() {
            return Err(Error::DimensionMismatch { expected: system.k(), found: counts.len() });
        }
        let n = counts.iter().sum();
        Ok(DigitCounts { system, counts, n, skipped: SkipReport::default() })
    }

    pub fn count_of(&self, label: u32) -> Option<u64> {
        self.system.index_of(label).map(|i| self.counts[i])
    }

    /// Number of records that were looked at but not counted.
    pub fn skipped_total(&self) -> u64 {
        self.skipped.total()
    }
}

/// Selects the column holding the values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

impl FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    /// All-digit strings are 0-based indices, anything else is a header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        })
    }
}

/// Layout of the input text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputLayout {
    /// Sniff the first non-blank line: `,`, `;` or tab make it delimited,
    /// otherwise whitespace-separated.
    #[default]
    Auto,
    Delimited(u8),
    Whitespace,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub layout: InputLayout,
    pub column: Option<ColumnSelector>,
    /// Decimal mark used in the input. `,` tokens are rewritten to `.`.
    pub decimal_comma: bool,
}

/// Numeric tokens read from a source, plus what was skipped on the way.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedRecords {
    pub tokens: Vec<String>,
    pub skipped: SkipReport,
    /// Header row, when one was detected or required.
    pub header: Option<Vec<String>>,
}

/// Reads the selected column from a delimited or whitespace-separated
/// source and keeps the tokens that look like decimal numbers.
///
/// Without a column selector, delimited input uses column 0 and
/// whitespace input treats every whitespace-separated token as a value.
/// A header row is required when the column is given by name; otherwise
/// the first row is taken as a header when its selected cell is not
/// numeric.
pub fn parse_records<R: Read>(source: R, options: &ParseOptions) -> Result<ParsedRecords> {
    let mut reader = BufReader::new(source);
    let mut text = String::new();
    reader.read_to_string(&mut text)?;

    let layout = match options.layout {
        InputLayout::Auto => sniff_layout(&text, options.decimal_comma),
        other => other,
    };
    let rows: Vec<Vec<String>> = match layout {
        InputLayout::Delimited(delim) => read_delimited(&text, delim)?,
        _ => match options.column {
            None => text
                .split_whitespace()
                .map(|t| vec![t.to_string()])
                .collect(),
            Some(_) => text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| l.split_whitespace().map(str::to_string).collect())
                .collect(),
        },
    };
    select_column(rows, options)
}

fn sniff_layout(text: &str, decimal_comma: bool) -> InputLayout {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    for delim in [b'\t', b';', b','] {
        if decimal_comma && delim == b',' {
            continue;
        }
        if first.as_bytes().contains(&delim) {
            return InputLayout::Delimited(delim);
        }
    }
    InputLayout::Whitespace
}

fn read_delimited(text: &str, delim: u8) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

fn select_column(rows: Vec<Vec<String>>, options: &ParseOptions) -> Result<ParsedRecords> {
    let mut out = ParsedRecords::default();
    let mut rows = rows.into_iter().peekable();

    let index = match &options.column {
        Some(ColumnSelector::Name(name)) => {
            let header = rows
                .next()
                .ok_or_else(|| Error::Config(format!("column {name:?} requested but input is empty")))?;
            let idx = header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("column {name:?} not found in header {header:?}")))?;
            out.header = Some(header);
            idx
        }
        Some(ColumnSelector::Index(i)) => *i,
        None => 0,
    };

    if out.header.is_none() {
        if let Some(first) = rows.peek() {
            let cell = first.get(index).map(|c| normalize(c, options.decimal_comma));
            if let Some(cell) = cell {
                if !cell.is_empty() && !is_decimal_number(&cell) {
                    out.header = rows.next();
                }
            }
        }
    }

    for row in rows {
        match row.get(index) {
            None => out.skipped.record(SkipReason::Empty),
            Some(cell) => {
                let token = normalize(cell, options.decimal_comma);
                if token.is_empty() {
                    out.skipped.record(SkipReason::Empty);
                } else if is_decimal_number(&token) {
                    out.tokens.push(token);
                } else {
                    out.skipped.record(SkipReason::NonNumeric);
                }
            }
        }
    }
    Ok(out)
}

fn normalize(cell: &str, decimal_comma: bool) -> String {
    let t = cell.trim();
    if decimal_comma {
        t.replace(',', ".")
    } else {
        t.to_string()
    }
}

/// Mantissa digits of a decimal token with the sign, decimal point and
/// exponent removed, or `None` if the token is not a decimal number.
///
/// Grammar: `[+-]? (digits [. digits?] | . digits) ([eE] [+-]? digits)?`
fn significand_digits(token: &str) -> Option<&str> {
    let s = token.trim();
    let s = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], Some(&s[pos + 1..])),
        None => (s, None),
    };
    if let Some(exp) = exponent {
        let exp = exp.strip_prefix(['+', '-']).unwrap_or(exp);
        if exp.is_empty() || !exp.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
    }
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if (int_part.is_empty() && frac_part.is_empty()) || !all_digits(int_part) || !all_digits(frac_part) {
        return None;
    }
    Some(mantissa)
}

/// Whether `token` is a finite decimal number the extractors accept.
pub fn is_decimal_number(token: &str) -> bool {
    significand_digits(token).is_some()
}

/// Leading significant digits as ASCII bytes, skipping zeros and the point.
fn leading_digits(token: &str, width: usize) -> Result<Option<u32>> {
    let mantissa = significand_digits(token).ok_or_else(|| Error::Parse(token.to_string()))?;
    let mut digits = mantissa
        .bytes()
        .filter(u8::is_ascii_digit)
        .skip_while(|&b| b == b'0')
        .map(|b| u32::from(b - b'0'));
    let Some(first) = digits.next() else {
        return Ok(None);
    };
    let mut value = first;
    for _ in 1..width {
        value = value * 10 + digits.next().unwrap_or(0);
    }
    Ok(Some(value))
}

/// First significant digit of `|value|`, or `None` for zero.
pub fn first_digit(token: &str) -> Result<Option<u32>> {
    leading_digits(token, 1)
}

/// First two significant digits of `|value|` as an integer in 10..=99.
/// A lone significant digit `d` reads as `10·d`; zero gives `None`.
pub fn first_two_digits(token: &str) -> Result<Option<u32>> {
    leading_digits(token, 2)
}

/// Tallies digit labels over `tokens`. Zeros and unparseable tokens are
/// recorded in the skip report rather than counted.
pub fn count_digits<S: AsRef<str>>(tokens: &[S], system: DigitSystem) -> DigitCounts {
    let mut out = DigitCounts::empty(system);
    for token in tokens {
        match system.extract(token.as_ref()) {
            Ok(Some(label)) => {
                let i = system.index_of(label).expect("extracted label within system range");
                out.counts[i] += 1;
                out.n += 1;
            }
            Ok(None) => out.skipped.record(SkipReason::Zero),
            Err(_) => out.skipped.record(SkipReason::NonNumeric),
        }
    }
    out
}
