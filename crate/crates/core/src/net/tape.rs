//! Reverse-mode tape for dense layers, elementwise activations and a fused
//! softmax cross-entropy head.
//!
//! The forward pass pushes one entry per primitive with whatever the reverse
//! sweep needs (layer inputs, activation outputs, softmax probabilities).
//! [`Tape::backward`] walks the entries in reverse and writes each parameter's
//! gradient exactly once.

use std::sync::Arc;

use super::mlp::{Activation, MlpSpec};
use crate::error::{Error, Result};
use crate::tensor::ParamVector;

/// Row-major `rows × cols` buffer.
#[derive(Debug, Clone)]
pub(crate) struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug)]
enum Entry {
    Dense { layer: usize, input: Matrix },
    Activation { kind: Activation, output: Matrix },
    SoftmaxCrossEntropy { probs: Matrix, labels: Vec<usize> },
}

/// Record of one forward evaluation.
#[derive(Debug, Default)]
pub struct Tape {
    entries: Vec<Entry>,
}

/// Weight and bias slices of layer `l`. Weights are `out × in`, row-major.
pub(crate) fn layer_params<'a>(spec: &MlpSpec, w: &'a [f64], l: usize) -> (&'a [f64], &'a [f64]) {
    let (offset, n_in, n_out) = spec.layer_offset(l);
    let weights = &w[offset..offset + n_in * n_out];
    let bias = &w[offset + n_in * n_out..offset + n_in * n_out + n_out];
    (weights, bias)
}

pub(crate) fn dense_forward(x: &Matrix, weights: &[f64], bias: &[f64]) -> Matrix {
    let n_out = bias.len();
    let mut out = Matrix::zeros(x.rows, n_out);
    for b in 0..x.rows {
        let xb = x.row(b);
        let ob = out.row_mut(b);
        for o in 0..n_out {
            let wo = &weights[o * x.cols..(o + 1) * x.cols];
            ob[o] = wo.iter().zip(xb).fold(bias[o], |acc, (a, v)| acc + a * v);
        }
    }
    out
}

fn check_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numeric(format!("non-finite {what}")))
    }
}

impl Tape {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Forward pass over `inputs` (one row per sample); returns the tape and
    /// the mean cross-entropy.
    pub(crate) fn forward(spec: &MlpSpec, w: &[f64], inputs: Matrix, labels: Vec<usize>) -> Result<(Tape, f64)> {
        let mut tape = Tape::default();
        let n_layers = spec.num_layers();
        let mut x = inputs;
        for l in 0..n_layers {
            let (weights, bias) = layer_params(spec, w, l);
            let z = dense_forward(&x, weights, bias);
            tape.entries.push(Entry::Dense { layer: l, input: x });
            check_finite(&z, "pre-activation")?;
            x = if l + 1 < n_layers {
                let a = spec.activation.apply(z);
                tape.entries.push(Entry::Activation {
                    kind: spec.activation,
                    output: a.clone(),
                });
                a
            } else {
                z
            };
        }

        // Fused, max-shifted softmax cross-entropy.
        let mut probs = x;
        let mut total = 0.0;
        for (b, &y) in labels.iter().enumerate() {
            let row = probs.row_mut(b);
            let logit_y = row[y];
            let lse = crate::objectives::softmax_stable(row);
            total += lse - logit_y;
        }
        let loss = total / labels.len() as f64;
        if !loss.is_finite() {
            return Err(Error::numeric("non-finite loss"));
        }
        tape.entries.push(Entry::SoftmaxCrossEntropy { probs, labels });
        Ok((tape, loss))
    }

    /// Reverse sweep. Consumes the tape; the gradient has the spec's layout.
    pub(crate) fn backward(self, spec: &MlpSpec, w: &ParamVector) -> ParamVector {
        let mut grad = ParamVector::zeros(Arc::clone(w.layout()));
        let mut upstream: Option<Matrix> = None;
        for entry in self.entries.into_iter().rev() {
            match entry {
                Entry::SoftmaxCrossEntropy { mut probs, labels } => {
                    let scale = 1.0 / labels.len() as f64;
                    for (b, &y) in labels.iter().enumerate() {
                        let row = probs.row_mut(b);
                        row[y] -= 1.0;
                        for v in row.iter_mut() {
                            *v *= scale;
                        }
                    }
                    upstream = Some(probs);
                }
                Entry::Activation { kind, output } => {
                    let mut d = upstream.take().expect("activation follows a recorded gradient");
                    kind.backward_in_place(&mut d, &output);
                    upstream = Some(d);
                }
                Entry::Dense { layer, input } => {
                    let dz = upstream.take().expect("dense layer follows a recorded gradient");
                    let (offset, n_in, n_out) = spec.layer_offset(layer);
                    {
                        let g = grad.values_mut();
                        let (gw, gb) = g[offset..offset + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                        for b in 0..dz.rows {
                            let dzb = dz.row(b);
                            let xb = input.row(b);
                            for o in 0..n_out {
                                let d = dzb[o];
                                gb[o] += d;
                                for (gi, xi) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(xb) {
                                    *gi += d * xi;
                                }
                            }
                        }
                    }
                    if layer > 0 {
                        let (weights, _) = layer_params(spec, w.values(), layer);
                        let mut dx = Matrix::zeros(dz.rows, n_in);
                        for b in 0..dz.rows {
                            let dzb = dz.row(b);
                            let dxb = dx.row_mut(b);
                            for o in 0..n_out {
                                let d = dzb[o];
                                for (dxi, wi) in dxb.iter_mut().zip(&weights[o * n_in..(o + 1) * n_in]) {
                                    *dxi += d * wi;
                                }
                            }
                        }
                        upstream = Some(dx);
                    }
                }
            }
        }
        grad
    }
}
