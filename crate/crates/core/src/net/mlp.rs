use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tape::{dense_forward, layer_params, Matrix, Tape};
use crate::error::{Error, Result};
use crate::objectives::{check_layout, Classifier, Dataset, GradientOracle};
use crate::rng::{stream_rng, Stream};
use crate::tensor::{LayerMap, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    pub(crate) fn apply(self, mut z: Matrix) -> Matrix {
        match self {
            Activation::Relu => z.data.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Tanh => z.data.iter_mut().for_each(|v| *v = v.tanh()),
        }
        z
    }

    /// Multiply `grad` by the derivative, expressed through the saved output.
    pub(crate) fn backward_in_place(self, grad: &mut Matrix, output: &Matrix) {
        match self {
            Activation::Relu => {
                for (g, a) in grad.data.iter_mut().zip(&output.data) {
                    if *a <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            Activation::Tanh => {
                for (g, a) in grad.data.iter_mut().zip(&output.data) {
                    *g *= 1.0 - a * a;
                }
            }
        }
    }
}

/// Fan-in scaled uniform initialisation, `U(−bound, bound)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitRule {
    /// bound = √(6 / fan_in)
    #[default]
    HeUniform,
    /// bound = √(3 / fan_in)
    LecunUniform,
    /// bound = 1 / √fan_in
    FanIn,
}

impl InitRule {
    fn bound(self, fan_in: usize) -> f64 {
        let f = fan_in as f64;
        match self {
            InitRule::HeUniform => (6.0 / f).sqrt(),
            InitRule::LecunUniform => (3.0 / f).sqrt(),
            InitRule::FanIn => 1.0 / f.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    /// Input width, hidden widths, output width (= class count).
    pub layer_widths: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub init_seed: u64,
    #[serde(default)]
    pub init_scale_rule: InitRule,
}

impl MlpSpec {
    pub fn new(layer_widths: Vec<usize>, activation: Activation, init_seed: u64) -> Result<Self> {
        let spec = MlpSpec {
            layer_widths,
            activation,
            init_seed,
            init_scale_rule: InitRule::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(Error::spec("an MLP needs at least an input and an output width"));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::spec("layer widths must be positive"));
        }
        Ok(())
    }

    pub fn num_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_widths.last().expect("validated")
    }

    /// `(offset, fan_in, fan_out)` of layer `l` in the flat parameter vector.
    pub(crate) fn layer_offset(&self, l: usize) -> (usize, usize, usize) {
        let offset = self.layer_widths[..=l]
            .windows(2)
            .take(l)
            .map(|w| w[0] * w[1] + w[1])
            .sum();
        (offset, self.layer_widths[l], self.layer_widths[l + 1])
    }

    /// Segments `w0, b0, w1, b1, …` from input to output.
    pub fn layout(&self) -> LayerMap {
        LayerMap::new(self.layer_widths.windows(2).enumerate().flat_map(|(l, w)| {
            [(format!("w{l}"), w[0] * w[1]), (format!("b{l}"), w[1])]
        }))
    }

    pub fn num_params(&self) -> usize {
        self.layout().total_len()
    }

    /// Logits for a single input row.
    pub fn logits(&self, w: &[f64], x: &[f64]) -> Vec<f64> {
        let mut h = Matrix {
            rows: 1,
            cols: x.len(),
            data: x.to_vec(),
        };
        for l in 0..self.num_layers() {
            let (weights, bias) = layer_params(self, w, l);
            h = dense_forward(&h, weights, bias);
            if l + 1 < self.num_layers() {
                h = self.activation.apply(h);
            }
        }
        h.data
    }
}

/// Seeded initial parameters: fan-in scaled uniform weights, zero biases.
pub fn init_params(spec: &MlpSpec) -> Result<ParamVector> {
    spec.validate()?;
    let layout = Arc::new(spec.layout());
    let mut w = ParamVector::zeros(Arc::clone(&layout));
    let mut rng = stream_rng(spec.init_seed, Stream::Init);
    for l in 0..spec.num_layers() {
        let (offset, n_in, n_out) = spec.layer_offset(l);
        let bound = spec.init_scale_rule.bound(n_in);
        for v in &mut w.values_mut()[offset..offset + n_in * n_out] {
            *v = rng.random_range(-bound..=bound);
        }
    }
    Ok(w)
}

/// Mean softmax cross-entropy over `batch` (indices into `data`) and its
/// reverse-mode gradient.
///
/// Samples are accumulated in ascending index order, so the result does not
/// depend on the order of `batch`.
pub fn loss_and_gradient(
    spec: &MlpSpec,
    w: &ParamVector,
    data: &Dataset,
    batch: &[usize],
) -> Result<(f64, ParamVector)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if w.len() != spec.num_params() || w.layout().num_segments() != 2 * spec.num_layers() {
        return Err(Error::shape(format!(
            "parameter vector of length {} does not match an MLP with {} parameters",
            w.len(),
            spec.num_params()
        )));
    }
    if data.dim() != spec.input_width() {
        return Err(Error::shape(format!(
            "dataset dimension {} but MLP input width {}",
            data.dim(),
            spec.input_width()
        )));
    }
    let mut order = batch.to_vec();
    order.sort_unstable();
    let mut inputs = Matrix::zeros(order.len(), data.dim());
    let mut labels = Vec::with_capacity(order.len());
    for (r, &i) in order.iter().enumerate() {
        inputs.data[r * data.dim()..(r + 1) * data.dim()].copy_from_slice(data.row(i));
        let y = data.label(i);
        if y >= spec.num_classes() {
            return Err(Error::invalid(format!("label {y} outside {} classes", spec.num_classes())));
        }
        labels.push(y);
    }
    let (tape, loss) = Tape::forward(spec, w.values(), inputs, labels)?;
    Ok((loss, tape.backward(spec, w)))
}

/// An [`MlpSpec`] bound to a training set.
#[derive(Debug, Clone)]
pub struct MlpOracle {
    spec: MlpSpec,
    data: Arc<Dataset>,
    layout: Arc<LayerMap>,
}

impl MlpOracle {
    pub fn new(spec: MlpSpec, data: Arc<Dataset>) -> Result<Self> {
        spec.validate()?;
        if data.dim() != spec.input_width() {
            return Err(Error::spec(format!(
                "dataset dimension {} but MLP input width {}",
                data.dim(),
                spec.input_width()
            )));
        }
        if data.num_classes() > spec.num_classes() {
            return Err(Error::spec(format!(
                "dataset has {} classes but the MLP outputs {}",
                data.num_classes(),
                spec.num_classes()
            )));
        }
        let layout = Arc::new(spec.layout());
        Ok(MlpOracle { spec, data, layout })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.data
    }

    /// Initial parameters sharing this oracle's layout allocation.
    pub fn init_params(&self) -> Result<ParamVector> {
        let w = init_params(&self.spec)?;
        ParamVector::from_values(Arc::clone(&self.layout), w.into_values())
    }
}

impl GradientOracle for MlpOracle {
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
        loss_and_gradient(&self.spec, w, &self.data, batch)
    }
}

impl Classifier for MlpSpec {
    fn num_classes(&self) -> usize {
        MlpSpec::num_classes(self)
    }

    fn scores(&self, w: &ParamVector, x: &[f64]) -> Vec<f64> {
        self.logits(w.values(), x)
    }
}

impl Classifier for MlpOracle {
    fn num_classes(&self) -> usize {
        self.spec.num_classes()
    }

    fn scores(&self, w: &ParamVector, x: &[f64]) -> Vec<f64> {
        self.spec.logits(w.values(), x)
    }
}
