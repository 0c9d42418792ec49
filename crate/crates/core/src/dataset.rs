//! Delay dataset schema, CSV ingestion, and feature normalization.
//!
//! A [`DelaySample`] pairs an observed [`NetworkCondition`] with the measured
//! round-trip delay. A [`Dataset`] owns an ordered list of samples together
//! with per-feature normalization statistics. Kernel distances are computed
//! on z-scored features, not raw units — otherwise the meters-scaled cable
//! length would dominate the dimensionless loading fraction.
//!
//! Canonical CSV format (see [`CSV_HEADER`]): comma separated, `.` decimal,
//! UTF-8, LF or CRLF line endings, lines starting with `#` are comments.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use thiserror::Error;

use crate::numfmt::f64_17sig;
use crate::rng;

/// Number of condition features.
pub const FEATURE_COUNT: usize = 5;

/// Feature names in canonical column order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] =
    ["loading", "length_m", "contention", "devices", "plc_rungs"];

/// Required header of a labeled delay CSV.
pub const CSV_HEADER: &str = "loading,length_m,contention,devices,plc_rungs,delay_ms";

/// Required header of an unlabeled conditions CSV (no delay column).
pub const CONDITIONS_CSV_HEADER: &str = "loading,length_m,contention,devices,plc_rungs";

/// Errors raised while building or loading datasets.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed csv at line {line}: {msg}")]
    Malformed { line: u64, msg: String },
    #[error("header mismatch: expected `{expected}`, got `{found}`")]
    Header {
        expected: &'static str,
        found: String,
    },
    /// A field failed validation at a known file line.
    #[error("{field} must be {requirement} (got {value}) at line {line}")]
    Field {
        line: u64,
        field: &'static str,
        requirement: &'static str,
        value: String,
    },
    /// A field failed validation outside any file context.
    #[error("{field} must be {requirement} (got {value})")]
    Value {
        field: &'static str,
        requirement: &'static str,
        value: String,
    },
    #[error("dataset needs at least one sample")]
    Empty,
    #[error("train fraction must be in (0, 1), got {0}")]
    Fraction(f64),
    #[error("train fraction {fraction} leaves the {side} side empty for n = {n}")]
    EmptySide {
        fraction: f64,
        side: &'static str,
        n: usize,
    },
}

impl DatasetError {
    /// Attach a file line to a bare `Value` error.
    fn at_line(self, line: u64) -> Self {
        match self {
            DatasetError::Value {
                field,
                requirement,
                value,
            } => DatasetError::Field {
                line,
                field,
                requirement,
                value,
            },
            other => other,
        }
    }
}

fn value_err(field: &'static str, requirement: &'static str, value: impl ToString) -> DatasetError {
    DatasetError::Value {
        field,
        requirement,
        value: value.to_string(),
    }
}

/// Observable channel state at the moment a delay was measured.
///
/// * `loading` — fraction of channel capacity in use, in `[0, 1]`
/// * `length_m` — cable/segment length in meters, `> 0`
/// * `contention` — competing requesters per grant, `≥ 1`
/// * `devices` — connected slave devices, `≥ 1`
/// * `plc_rungs` — ladder-logic rungs executed per PLC cycle
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkCondition {
    pub loading: f64,
    pub length_m: f64,
    pub contention: f64,
    pub devices: u32,
    pub plc_rungs: u32,
}

impl NetworkCondition {
    pub fn new(
        loading: f64,
        length_m: f64,
        contention: f64,
        devices: u32,
        plc_rungs: u32,
    ) -> Result<Self, DatasetError> {
        let cond = Self {
            loading,
            length_m,
            contention,
            devices,
            plc_rungs,
        };
        cond.validate()?;
        Ok(cond)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if !self.loading.is_finite() || !(0.0..=1.0).contains(&self.loading) {
            return Err(value_err("loading", "a finite fraction in [0, 1]", self.loading));
        }
        if !self.length_m.is_finite() || self.length_m <= 0.0 {
            return Err(value_err("length_m", "> 0 and finite", self.length_m));
        }
        if !self.contention.is_finite() || self.contention < 1.0 {
            return Err(value_err("contention", "≥ 1 and finite", self.contention));
        }
        if self.devices < 1 {
            return Err(value_err("devices", "an integer ≥ 1", self.devices));
        }
        Ok(())
    }

    /// The raw feature vector in canonical order.
    pub fn features(&self) -> [f64; FEATURE_COUNT] {
        [
            self.loading,
            self.length_m,
            self.contention,
            f64::from(self.devices),
            f64::from(self.plc_rungs),
        ]
    }
}

/// A network condition paired with the measured round-trip delay (ms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySample {
    pub condition: NetworkCondition,
    pub delay_ms: f64,
}

impl DelaySample {
    pub fn new(condition: NetworkCondition, delay_ms: f64) -> Result<Self, DatasetError> {
        condition.validate()?;
        if !delay_ms.is_finite() || delay_ms <= 0.0 {
            // MAPE divides by the true delay, so zero is as unusable as NaN.
            return Err(value_err("delay_ms", "> 0 and finite", delay_ms));
        }
        Ok(Self {
            condition,
            delay_ms,
        })
    }
}

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    means: [f64; FEATURE_COUNT],
    stds: [f64; FEATURE_COUNT],
}

impl NormStats {
    /// Welford's online algorithm; the divisor is `n` (population std), so a
    /// single sample yields std 0 rather than an undefined value.
    pub fn from_samples(samples: &[DelaySample]) -> Self {
        let mut means = [0.0; FEATURE_COUNT];
        let mut m2 = [0.0; FEATURE_COUNT];
        for (i, sample) in samples.iter().enumerate() {
            let x = sample.condition.features();
            let k = (i + 1) as f64;
            for f in 0..FEATURE_COUNT {
                let delta = x[f] - means[f];
                means[f] += delta / k;
                m2[f] += delta * (x[f] - means[f]);
            }
        }
        let n = samples.len() as f64;
        let stds = m2.map(|v| (v / n).max(0.0).sqrt());
        Self { means, stds }
    }

    /// Rebuild stats from stored values (model files), validating them.
    pub fn new(
        means: [f64; FEATURE_COUNT],
        stds: [f64; FEATURE_COUNT],
    ) -> Result<Self, DatasetError> {
        for k in 0..FEATURE_COUNT {
            if !means[k].is_finite() {
                return Err(value_err(FEATURE_NAMES[k], "a finite mean", means[k]));
            }
            if !stds[k].is_finite() || stds[k] < 0.0 {
                return Err(value_err(FEATURE_NAMES[k], "a finite std ≥ 0", stds[k]));
            }
        }
        Ok(Self { means, stds })
    }

    pub fn means(&self) -> &[f64; FEATURE_COUNT] {
        &self.means
    }

    pub fn stds(&self) -> &[f64; FEATURE_COUNT] {
        &self.stds
    }

    /// Names of features whose spread is exactly zero.
    pub fn zero_variance_features(&self) -> Vec<&'static str> {
        (0..FEATURE_COUNT)
            .filter(|&k| self.stds[k] == 0.0)
            .map(|k| FEATURE_NAMES[k])
            .collect()
    }
}

/// Z-score a condition. Zero-variance features carry no information and map
/// to 0 regardless of the raw value.
pub fn normalize(cond: &NetworkCondition, stats: &NormStats) -> [f64; FEATURE_COUNT] {
    let mut z = cond.features();
    for (k, value) in z.iter_mut().enumerate() {
        *value = if stats.stds[k] > 0.0 {
            (*value - stats.means[k]) / stats.stds[k]
        } else {
            0.0
        };
    }
    z
}

/// Ordered, immutable collection of delay samples plus normalization stats.
///
/// The stats are always computed from exactly the samples held: the only way
/// to change the samples is to build a new `Dataset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<DelaySample>,
    norm_stats: NormStats,
}

impl Dataset {
    pub fn new(samples: Vec<DelaySample>) -> Result<Self, DatasetError> {
        if samples.is_empty() {
            return Err(DatasetError::Empty);
        }
        for s in &samples {
            s.condition.validate()?;
            if !s.delay_ms.is_finite() || s.delay_ms <= 0.0 {
                return Err(value_err("delay_ms", "> 0 and finite", s.delay_ms));
            }
        }
        let norm_stats = NormStats::from_samples(&samples);
        let flat = norm_stats.zero_variance_features();
        if !flat.is_empty() {
            log::warn!(
                "zero-variance feature(s) {} carry no information and will normalize to 0",
                flat.join(", ")
            );
        }
        Ok(Self {
            samples,
            norm_stats,
        })
    }

    pub fn samples(&self) -> &[DelaySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        // Unreachable by construction, kept for API completeness.
        self.samples.is_empty()
    }

    pub fn norm_stats(&self) -> &NormStats {
        &self.norm_stats
    }

    /// Deterministic shuffled partition: a seeded Fisher–Yates shuffle of the
    /// row indices, then the first `floor(n · train_fraction)` rows become
    /// the training side. Each side recomputes its own stats; callers freeze
    /// the *train* side's stats into any model they fit.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
        if !train_fraction.is_finite() || train_fraction <= 0.0 || train_fraction >= 1.0 {
            return Err(DatasetError::Fraction(train_fraction));
        }
        let n = self.samples.len();
        let n_train = (n as f64 * train_fraction).floor() as usize;
        if n_train == 0 {
            return Err(DatasetError::EmptySide {
                fraction: train_fraction,
                side: "train",
                n,
            });
        }
        if n_train >= n {
            return Err(DatasetError::EmptySide {
                fraction: train_fraction,
                side: "test",
                n,
            });
        }

        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = rng::seeded(seed);
        // Fisher–Yates, one index draw per position from the back.
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }

        let train: Vec<DelaySample> = idx[..n_train].iter().map(|&i| self.samples[i]).collect();
        let test: Vec<DelaySample> = idx[n_train..].iter().map(|&i| self.samples[i]).collect();
        Ok((Dataset::new(train)?, Dataset::new(test)?))
    }

    /// Parse a labeled delay CSV (see module docs for the format).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DatasetError> {
        let mut rows = CsvRows::new(reader, CSV_HEADER)?;
        let mut samples = Vec::new();
        while let Some((line, fields)) = rows.next_row()? {
            let cond = parse_condition(&fields, line)?;
            let delay = parse_number(&fields[5], "delay_ms", line)?;
            let sample = DelaySample::new(cond, delay).map_err(|e| e.at_line(line))?;
            samples.push(sample);
        }
        Dataset::new(samples)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_csv(file)
    }

    /// Write the canonical CSV. Floats carry 17 significant digits so the
    /// file loads back bit-exactly; `comments` become leading `#` lines.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[&str]) -> io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "{CSV_HEADER}")?;
        for s in &self.samples {
            let c = &s.condition;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                f64_17sig(c.loading),
                f64_17sig(c.length_m),
                f64_17sig(c.contention),
                c.devices,
                c.plc_rungs,
                f64_17sig(s.delay_ms)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self, comments: &[&str]) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, comments).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, comments: &[&str]) -> Result<(), DatasetError> {
        let path = path.as_ref();
        let io_err = |source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = File::create(path).map_err(io_err)?;
        self.write_csv(&mut file, comments).map_err(io_err)
    }
}

/// Parse an unlabeled conditions CSV (the [`CONDITIONS_CSV_HEADER`] schema).
pub fn read_conditions_csv<R: Read>(reader: R) -> Result<Vec<NetworkCondition>, DatasetError> {
    let mut rows = CsvRows::new(reader, CONDITIONS_CSV_HEADER)?;
    let mut conds = Vec::new();
    while let Some((line, fields)) = rows.next_row()? {
        conds.push(parse_condition(&fields, line)?);
    }
    Ok(conds)
}

pub fn load_conditions_csv(path: impl AsRef<Path>) -> Result<Vec<NetworkCondition>, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_conditions_csv(file)
}

/// Write a conditions CSV (no delay column).
pub fn write_conditions_csv<W: Write>(
    conds: &[NetworkCondition],
    mut w: W,
    comments: &[&str],
) -> io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{CONDITIONS_CSV_HEADER}")?;
    for c in conds {
        writeln!(
            w,
            "{},{},{},{},{}",
            f64_17sig(c.loading),
            f64_17sig(c.length_m),
            f64_17sig(c.contention),
            c.devices,
            c.plc_rungs
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// CSV plumbing
// ---------------------------------------------------------------------------

struct CsvRows<R: Read> {
    reader: csv::Reader<R>,
    n_fields: usize,
}

impl<R: Read> CsvRows<R> {
    fn new(reader: R, expected_header: &'static str) -> Result<Self, DatasetError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = reader.headers().map_err(csv_error)?.clone();
        let found = header.iter().collect::<Vec<_>>().join(",");
        if found != expected_header {
            return Err(DatasetError::Header {
                expected: expected_header,
                found,
            });
        }
        Ok(Self {
            reader,
            n_fields: header.len(),
        })
    }

    /// Next data row as (file line number, owned fields).
    fn next_row(&mut self) -> Result<Option<(u64, Vec<String>)>, DatasetError> {
        match self.reader.records().next() {
            None => Ok(None),
            Some(record) => {
                let record = record.map_err(csv_error)?;
                let line = record.position().map_or(0, |p| p.line());
                if record.len() != self.n_fields {
                    return Err(DatasetError::Malformed {
                        line,
                        msg: format!("expected {} fields, got {}", self.n_fields, record.len()),
                    });
                }
                Ok(Some((line, record.iter().map(str::to_owned).collect())))
            }
        }
    }
}

fn csv_error(err: csv::Error) -> DatasetError {
    let line = err.position().map_or(0, csv::Position::line);
    DatasetError::Malformed {
        line,
        msg: err.to_string(),
    }
}

fn parse_number(cell: &str, field: &'static str, line: u64) -> Result<f64, DatasetError> {
    cell.parse::<f64>().map_err(|_| DatasetError::Field {
        line,
        field,
        requirement: "a number",
        value: cell.to_string(),
    })
}

fn parse_count(cell: &str, field: &'static str, line: u64) -> Result<u32, DatasetError> {
    let v = parse_number(cell, field, line)?;
    if !v.is_finite() || v.fract() != 0.0 || v < 0.0 || v > f64::from(u32::MAX) {
        return Err(DatasetError::Field {
            line,
            field,
            requirement: "a nonnegative integer",
            value: cell.to_string(),
        });
    }
    Ok(v as u32)
}

fn parse_condition(fields: &[String], line: u64) -> Result<NetworkCondition, DatasetError> {
    let loading = parse_number(&fields[0], "loading", line)?;
    let length_m = parse_number(&fields[1], "length_m", line)?;
    let contention = parse_number(&fields[2], "contention", line)?;
    let devices = parse_count(&fields[3], "devices", line)?;
    let plc_rungs = parse_count(&fields[4], "plc_rungs", line)?;
    NetworkCondition::new(loading, length_m, contention, devices, plc_rungs)
        .map_err(|e| e.at_line(line))
}
