use crate::error::{Error, Result};
use crate::objectives::{Classifier, Dataset};
use crate::optim::Mode;
use crate::tensor::ParamVector;

use super::TelemetryRecord;

/// Percentage of rows whose argmax prediction matches the label.
pub fn evaluate_accuracy(classifier: &dyn Classifier, w: &ParamVector, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("accuracy of an empty dataset"));
    }
    let correct = (0..data.len())
        .filter(|&i| classifier.predict(w, data.row(i)) == data.label(i))
        .count();
    Ok(100.0 * correct as f64 / data.len() as f64)
}

/// Average images per second: `D·E/T` for `D` samples per epoch, `E` epochs
/// and `T` seconds.
pub fn compute_ais(samples_per_epoch: f64, epochs: f64, seconds: f64) -> Result<f64> {
    if seconds.is_nan() || seconds <= 0.0 {
        return Err(Error::invalid(format!("elapsed time must be positive, got {seconds}")));
    }
    Ok(samples_per_epoch * epochs / seconds)
}

/// Percentage of iterations that ran in SAM mode.
pub fn compute_pct_sam(records: &[TelemetryRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let sam = records.iter().filter(|r| r.mode == Mode::Sam).count();
    100.0 * sam as f64 / records.len() as f64
}
