use std::sync::Arc;

use super::{check_layout, Classifier, Dataset, GradientOracle};
use crate::error::{Error, Result};
use crate::tensor::{LayerMap, ParamVector};

/// Multinomial logistic regression: mean softmax cross-entropy plus `λ‖w‖²`.
///
/// Parameters are a `classes × dim` weight block followed by a bias per class.
#[derive(Debug, Clone)]
pub struct LogisticOracle {
    data: Arc<Dataset>,
    l2_lambda: f64,
    layout: Arc<LayerMap>,
}

impl LogisticOracle {
    pub fn new(data: Arc<Dataset>, l2_lambda: f64) -> Result<Self> {
        if !(l2_lambda >= 0.0 && l2_lambda.is_finite()) {
            return Err(Error::invalid(format!("l2_lambda must be >= 0, got {l2_lambda}")));
        }
        if data.num_classes() < 2 {
            return Err(Error::invalid("logistic regression needs at least 2 classes"));
        }
        let c = data.num_classes();
        let layout = Arc::new(LayerMap::new([("weights", c * data.dim()), ("bias", c)]));
        Ok(LogisticOracle {
            data,
            l2_lambda,
            layout,
        })
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.data
    }

    fn logits(&self, w: &[f64], x: &[f64]) -> Vec<f64> {
        let c = self.data.num_classes();
        let d = self.data.dim();
        let (weights, bias) = w.split_at(c * d);
        (0..c)
            .map(|k| {
                weights[k * d..(k + 1) * d]
                    .iter()
                    .zip(x)
                    .fold(bias[k], |acc, (a, b)| acc + a * b)
            })
            .collect()
    }
}

/// In-place stable softmax; returns `log Σ exp(z)`.
pub(crate) fn softmax_stable(z: &mut [f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
    max + sum.ln()
}

impl GradientOracle for LogisticOracle {
    fn layout(&self) -> &Arc<LayerMap> {
        &self.layout
    }

    fn uses_batch(&self) -> bool {
        true
    }

    fn num_samples(&self) -> Option<usize> {
        Some(self.data.len())
    }

    fn loss_and_gradient(&self, w: &ParamVector, batch: &[usize]) -> Result<(f64, ParamVector)> {
        check_layout(&self.layout, w)?;
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let c = self.data.num_classes();
        let d = self.data.dim();
        let scale = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; w.len()];
        let mut loss = 0.0;
        for &i in batch {
            let x = self.data.row(i);
            let y = self.data.label(i);
            let mut p = self.logits(w.values(), x);
            let logit_y = p[y];
            let lse = softmax_stable(&mut p);
            loss += lse - logit_y;
            p[y] -= 1.0;
            for k in 0..c {
                let dk = p[k] * scale;
                for j in 0..d {
                    grad[k * d + j] += dk * x[j];
                }
                grad[c * d + k] += dk;
            }
        }
        loss *= scale;
        if self.l2_lambda > 0.0 {
            loss += self.l2_lambda * w.values().iter().fold(0.0, |acc, v| acc + v * v);
            for (g, v) in grad.iter_mut().zip(w.values()) {
                *g += 2.0 * self.l2_lambda * v;
            }
        }
        if !loss.is_finite() {
            return Err(Error::numeric("logistic loss is not finite"));
        }
        Ok((loss, ParamVector::from_values(Arc::clone(&self.layout), grad)?))
    }
}

impl Classifier for LogisticOracle {
    fn num_classes(&self) -> usize {
        self.data.num_classes()
    }

    fn scores(&self, w: &ParamVector, x: &[f64]) -> Vec<f64> {
        self.logits(w.values(), x)
    }
}
