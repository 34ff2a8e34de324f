//! Differentiable objectives behind one [`GradientOracle`] contract.

mod dataset;
mod logistic;
mod quadratic;
mod two_well;

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::tensor::{LayerMap, ParamVector};

pub use dataset::{inject_label_noise, make_two_moons, Dataset};
pub use logistic::LogisticOracle;
pub(crate) use logistic::softmax_stable;
pub use quadratic::{QuadraticOracle, QuadraticSpec};
pub use two_well::{TwoWellOracle, TwoWellSpec};

/// A differentiable objective.
///
/// `batch` holds sample indices into the oracle's dataset. Analytic
/// objectives ignore it (see [`GradientOracle::uses_batch`]); dataset-backed
/// objectives reject an empty batch.
pub trait GradientOracle: Send + Sync {
    fn layout(&self) -> &Arc<LayerMap>;

    /// Whether `batch` is consulted at all.
    fn uses_batch(&self) -> bool;

    /// Number of samples batches index into, for dataset-backed objectives.
    fn num_samples(&self) -> Option<usize> {
        None
    }

    /// Loss and gradient from one forward/backward pass.
    fn loss_and_gradient(&self, w: &ParamVector, batch: &[usize]) -> Result<(f64, ParamVector)>;

    fn loss(&self, w: &ParamVector, batch: &[usize]) -> Result<f64> {
        Ok(self.loss_and_gradient(w, batch)?.0)
    }

    fn gradient(&self, w: &ParamVector, batch: &[usize]) -> Result<ParamVector> {
        Ok(self.loss_and_gradient(w, batch)?.1)
    }

    fn has_hessian(&self) -> bool {
        false
    }

    /// Exact Hessian, when [`GradientOracle::has_hessian`] is true.
    fn hessian(&self, _w: &ParamVector) -> Option<DMatrix<f64>> {
        None
    }
}

/// Argmax classifier over a parameter vector.
pub trait Classifier {
    fn num_classes(&self) -> usize;

    /// Raw class scores for one input row.
    fn scores(&self, w: &ParamVector, x: &[f64]) -> Vec<f64>;

    /// Predicted class; ties go to the lower class id.
    fn predict(&self, w: &ParamVector, x: &[f64]) -> usize {
        let scores = self.scores(w, x);
        let mut best = 0;
        for (k, s) in scores.iter().enumerate().skip(1) {
            if *s > scores[best] {
                best = k;
            }
        }
        best
    }
}

pub(crate) fn check_layout(layout: &LayerMap, w: &ParamVector) -> Result<()> {
    if w.layout().as_ref() == layout {
        Ok(())
    } else {
        Err(crate::error::Error::shape(format!(
            "parameter vector of length {} does not match objective layout of length {}",
            w.len(),
            layout.total_len()
        )))
    }
}

/// Central finite-difference gradient of `oracle.loss`. Shared by tests and
/// the verification suite as an oracle independent of the analytic gradient.
pub fn finite_difference_gradient(
    oracle: &dyn GradientOracle,
    w: &ParamVector,
    batch: &[usize],
    step: f64,
) -> Result<ParamVector> {
    let mut probe = w.clone();
    let mut grad = ParamVector::zeros(Arc::clone(w.layout()));
    for i in 0..w.len() {
        let orig = w.values()[i];
        probe.values_mut()[i] = orig + step;
        let up = oracle.loss(&probe, batch)?;
        probe.values_mut()[i] = orig - step;
        let down = oracle.loss(&probe, batch)?;
        probe.values_mut()[i] = orig;
        grad.values_mut()[i] = (up - down) / (2.0 * step);
    }
    Ok(grad)
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, floor)`.
pub fn relative_error(a: &ParamVector, b: &ParamVector, floor: f64) -> Result<f64> {
    let diff = a.sub(b)?.l2_norm()?;
    let scale = a.l2_norm()?.max(b.l2_norm()?).max(floor);
    Ok(diff / scale)
}
