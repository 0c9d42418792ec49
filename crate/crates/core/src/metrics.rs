//! Error metrics for validation and for the tuner's objective.
//!
//! MAPE is the primary figure of merit, reported in percent:
//! `(100/n) · Σ |actualᵢ − predictedᵢ| / actualᵢ`. The tuner maximizes its
//! reciprocal — only the induced ranking matters, so a perfect fit maps to
//! `+∞`, which every comparison places above any finite fitness.

use std::io::{self, Write};

use thiserror::Error;

use crate::dataset::Dataset;
use crate::grnn::GrnnModel;
use crate::numfmt::f64_17sig;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {actual} actual vs {predicted} predicted values")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("metrics need at least one value pair")]
    Empty,
    #[error("actual value {value} at index {index} must be > 0 for percentage errors")]
    NonpositiveActual { index: usize, value: f64 },
    #[error("mape must be ≥ 0, got {0}")]
    NegativeMape(f64),
}

/// Mean absolute percentage error, in percent.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    if actual.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut sum = 0.0;
    for (index, (&a, &p)) in actual.iter().zip(predicted).enumerate() {
        if !a.is_finite() || a <= 0.0 {
            return Err(MetricsError::NonpositiveActual { index, value: a });
        }
        sum += ((a - p) / a).abs();
    }
    Ok(100.0 * sum / actual.len() as f64)
}

/// Tuner fitness: the reciprocal of MAPE. `mape_percent = 0` returns `+∞`
/// (the best possible fitness) instead of faulting.
pub fn fitness(mape_percent: f64) -> Result<f64, MetricsError> {
    if mape_percent.is_nan() || mape_percent < 0.0 {
        return Err(MetricsError::NegativeMape(mape_percent));
    }
    Ok(if mape_percent == 0.0 {
        f64::INFINITY
    } else {
        1.0 / mape_percent
    })
}

/// Summary of a model's errors over a labeled dataset.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EvalReport {
    pub mape_percent: f64,
    pub mae_ms: f64,
    pub rmse_ms: f64,
    pub max_ape_percent: f64,
    pub n: usize,
}

impl EvalReport {
    pub fn from_pairs(actual: &[f64], predicted: &[f64]) -> Result<Self, MetricsError> {
        let mape_percent = mape(actual, predicted)?;
        let n = actual.len() as f64;
        let mut abs_sum = 0.0;
        let mut sq_sum = 0.0;
        let mut max_ape = 0.0f64;
        for (&a, &p) in actual.iter().zip(predicted) {
            let err = (a - p).abs();
            abs_sum += err;
            sq_sum += err * err;
            max_ape = max_ape.max(100.0 * err / a);
        }
        Ok(Self {
            mape_percent,
            mae_ms: abs_sum / n,
            rmse_ms: (sq_sum / n).sqrt(),
            max_ape_percent: max_ape,
            n: actual.len(),
        })
    }

    /// One-row CSV with a header, floats at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "mape_percent,mae_ms,rmse_ms,max_ape_percent,n")?;
        writeln!(
            w,
            "{},{},{},{},{}",
            f64_17sig(self.mape_percent),
            f64_17sig(self.mae_ms),
            f64_17sig(self.rmse_ms),
            f64_17sig(self.max_ape_percent),
            self.n
        )
    }
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "mape_percent={:.4} mae_ms={:.4} rmse_ms={:.4} max_ape_percent={:.4} n={}",
            self.mape_percent, self.mae_ms, self.rmse_ms, self.max_ape_percent, self.n
        )
    }
}

/// Score a model against a labeled dataset.
pub fn evaluate(model: &GrnnModel, test: &Dataset) -> EvalReport {
    let conds: Vec<_> = test.samples().iter().map(|s| s.condition).collect();
    let actual: Vec<f64> = test.samples().iter().map(|s| s.delay_ms).collect();
    let predicted = model.estimate_batch(&conds);
    EvalReport::from_pairs(&actual, &predicted)
        .expect("datasets are nonempty with positive delays by construction")
}

/// Per-row predictions CSV: `row,actual_ms,predicted_ms,ape_percent`, rows
/// numbered from 1 in dataset order.
pub fn write_predictions_csv<W: Write>(
    actual: &[f64],
    predicted: &[f64],
    mut w: W,
) -> io::Result<()> {
    writeln!(w, "row,actual_ms,predicted_ms,ape_percent")?;
    for (i, (&a, &p)) in actual.iter().zip(predicted).enumerate() {
        let ape = 100.0 * ((a - p) / a).abs();
        writeln!(
            w,
            "{},{},{},{}",
            i + 1,
            f64_17sig(a),
            f64_17sig(p),
            f64_17sig(ape)
        )?;
    }
    Ok(())
}
