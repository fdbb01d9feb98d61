//! Prediction datasets: validation, deterministic splitting and CSV I/O.
//!
//! The wire format is a UTF-8 CSV with a `p,y` header. Additional columns
//! (`q` from the synthetic generator, `p_cal` from applying a calibrator)
//! may follow and are read by name.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CalibrationError, Result};

/// Paired predicted probabilities and binary outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDataset {
    probs: Vec<f64>,
    labels: Vec<u8>,
}

/// A single invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    LengthMismatch { probs: usize, labels: usize },
    NonFiniteProbability { index: usize, value: f64 },
    ProbabilityOutOfRange { index: usize, value: f64 },
    InvalidLabel { index: usize, value: u8 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "dataset is empty"),
            Violation::LengthMismatch { probs, labels } => {
                write!(f, "{probs} probabilities but {labels} labels")
            }
            Violation::NonFiniteProbability { index, value } => {
                write!(f, "index {index}: probability {value} is not finite")
            }
            Violation::ProbabilityOutOfRange { index, value } => {
                write!(f, "index {index}: probability {value} outside [0, 1]")
            }
            Violation::InvalidLabel { index, value } => {
                write!(f, "index {index}: label {value} is not 0 or 1")
            }
        }
    }
}

impl Violation {
    pub fn index(&self) -> Option<usize> {
        match self {
            Violation::NonFiniteProbability { index, .. }
            | Violation::ProbabilityOutOfRange { index, .. }
            | Violation::InvalidLabel { index, .. } => Some(*index),
            _ => None,
        }
    }
}

/// Lists every invariant violation of the raw columns. An empty list means
/// the columns form a valid [`CalibrationDataset`].
pub fn validate(probs: &[f64], labels: &[u8]) -> Vec<Violation> {
    let mut out = Vec::new();
    if probs.is_empty() && labels.is_empty() {
        out.push(Violation::Empty);
    }
    if probs.len() != labels.len() {
        out.push(Violation::LengthMismatch {
            probs: probs.len(),
            labels: labels.len(),
        });
    }
    for (index, &value) in probs.iter().enumerate() {
        if !value.is_finite() {
            out.push(Violation::NonFiniteProbability { index, value });
        } else if !(0.0..=1.0).contains(&value) {
            out.push(Violation::ProbabilityOutOfRange { index, value });
        }
    }
    for (index, &value) in labels.iter().enumerate() {
        if value > 1 {
            out.push(Violation::InvalidLabel { index, value });
        }
    }
    out
}

impl CalibrationDataset {
    pub fn new(probs: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        let violations = validate(&probs, &labels);
        match violations.first() {
            None => Ok(CalibrationDataset { probs, labels }),
            Some(Violation::Empty) => Err(CalibrationError::EmptyDataset),
            Some(Violation::LengthMismatch { probs, labels }) => {
                Err(CalibrationError::LengthMismatch {
                    probs: *probs,
                    labels: *labels,
                })
            }
            Some(v) => Err(CalibrationError::InvalidDataset(v.to_string())),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, u8)> + '_ {
        self.probs.iter().copied().zip(self.labels.iter().copied())
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    /// Same labels, new probabilities (e.g. the output of a calibrator).
    pub fn with_probs(&self, probs: Vec<f64>) -> Result<Self> {
        CalibrationDataset::new(probs, self.labels.clone())
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        CalibrationDataset::new(
            indices.iter().map(|&i| self.probs[i]).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

/// Calibration/test split parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub calibration_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    /// Calibration share of a 50/30/20 train/cal/test protocol once the
    /// training portion is dropped.
    pub const DEFAULT_CALIBRATION_FRACTION: f64 = 0.6;

    pub fn new(calibration_fraction: f64, seed: u64) -> Result<Self> {
        if !(calibration_fraction > 0.0 && calibration_fraction < 1.0) {
            return Err(CalibrationError::InvalidParameter(format!(
                "calibration fraction {calibration_fraction} must lie strictly between 0 and 1"
            )));
        }
        Ok(SplitSpec {
            calibration_fraction,
            seed,
        })
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            calibration_fraction: Self::DEFAULT_CALIBRATION_FRACTION,
            seed: 0,
        }
    }
}

/// Returns the shuffled index order used by [`partition`] and the number of
/// leading indices that go to the calibration side.
pub fn partition_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, usize)> {
    SplitSpec::new(spec.calibration_fraction, spec.seed)?;
    let n_cal = (n as f64 * spec.calibration_fraction).floor() as usize;
    if n_cal == 0 {
        return Err(CalibrationError::EmptySplit("calibration"));
    }
    if n_cal >= n {
        return Err(CalibrationError::EmptySplit("test"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);
    Ok((order, n_cal))
}

/// Splits `d` into (calibration, test) by a seeded permutation.
pub fn partition(
    d: &CalibrationDataset,
    spec: &SplitSpec,
) -> Result<(CalibrationDataset, CalibrationDataset)> {
    let (order, n_cal) = partition_indices(d.len(), spec)?;
    Ok((d.select(&order[..n_cal])?, d.select(&order[n_cal..])?))
}

/// Rows of a CSV file with a header, kept as raw strings plus their
/// 1-based line numbers.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<(usize, Vec<String>)>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CalibrationError::io(path, e))?;
        let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
        let mut lines = text.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((_, l)) => break split_fields(l),
                None => return Err(CalibrationError::EmptyDataset),
            }
        };
        let rows = lines
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, split_fields(l)))
            .collect();
        Ok(CsvTable { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> CalibrationError {
        CalibrationError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    /// Parses a numeric column, reporting the first malformed row.
    pub fn numeric_column(&self, path: &Path, name: &str) -> Result<Vec<f64>> {
        let col = self
            .column(name)
            .ok_or_else(|| Self::parse_error(path, 1, format!("missing column `{name}`")))?;
        self.rows
            .iter()
            .map(|(line, fields)| {
                let raw = fields.get(col).ok_or_else(|| {
                    Self::parse_error(path, *line, format!("missing field `{name}`"))
                })?;
                raw.parse::<f64>().map_err(|_| {
                    Self::parse_error(path, *line, format!("`{raw}` is not a number"))
                })
            })
            .collect()
    }

    /// Interprets the `p` and `y` columns as a calibration dataset.
    pub fn dataset(&self, path: &Path) -> Result<CalibrationDataset> {
        if self.header.len() < 2 || self.header[0] != "p" || self.header[1] != "y" {
            return Err(Self::parse_error(
                path,
                1,
                format!("expected header `p,y`, found `{}`", self.header.join(",")),
            ));
        }
        if self.rows.is_empty() {
            return Err(CalibrationError::EmptyDataset);
        }
        let mut probs = Vec::with_capacity(self.rows.len());
        let mut labels = Vec::with_capacity(self.rows.len());
        for (line, fields) in &self.rows {
            if fields.len() < 2 {
                return Err(Self::parse_error(path, *line, "expected at least 2 fields"));
            }
            let p: f64 = fields[0].parse().map_err(|_| {
                Self::parse_error(path, *line, format!("`{}` is not a number", fields[0]))
            })?;
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Self::parse_error(
                    path,
                    *line,
                    format!("probability {p} out of range [0, 1]"),
                ));
            }
            let y = match fields[1].as_str() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Self::parse_error(
                        path,
                        *line,
                        format!("label `{other}` is not 0 or 1"),
                    ))
                }
            };
            probs.push(p);
            labels.push(y);
        }
        CalibrationDataset::new(probs, labels)
    }
}

fn split_fields(line: &str) -> Vec<String> {
    line.split(',').map(|f| f.trim().to_string()).collect()
}

/// Reads a `p,y` CSV. Extra columns after `y` are ignored.
pub fn load_csv(path: impl AsRef<Path>) -> Result<CalibrationDataset> {
    let path = path.as_ref();
    CsvTable::read(path)?.dataset(path)
}

/// Writes `p,y` followed by any extra named columns. Floats use the
/// shortest representation that parses back to the same value.
pub fn save_csv_with_columns(
    d: &CalibrationDataset,
    extra: &[(&str, &[f64])],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    for (name, values) in extra {
        if values.len() != d.len() {
            return Err(CalibrationError::InvalidParameter(format!(
                "column `{name}` has {} values for {} rows",
                values.len(),
                d.len()
            )));
        }
    }
    let mut out = String::with_capacity(d.len() * 24);
    out.push_str("p,y");
    for (name, _) in extra {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, (p, y)) in d.iter().enumerate() {
        out.push_str(&format!("{p},{y}"));
        for (_, values) in extra {
            out.push_str(&format!(",{}", values[i]));
        }
        out.push('\n');
    }
    let mut file = fs::File::create(path).map_err(|e| CalibrationError::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| CalibrationError::io(path, e))
}

pub fn save_csv(d: &CalibrationDataset, path: impl AsRef<Path>) -> Result<()> {
    save_csv_with_columns(d, &[], path)
}
