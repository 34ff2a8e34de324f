use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_layout, GradientOracle};
use crate::error::{Error, Result};
use crate::tensor::{LayerMap, ParamVector};

/// One-dimensional landscape with a deep narrow well and a shallower wide one:
///
/// `L(w) = −a·exp(−(w−μ₁)²/(2σ₁²)) − b·exp(−(w−μ₂)²/(2σ₂²))`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoWellSpec {
    pub sharp_depth: f64,
    pub sharp_width: f64,
    pub sharp_center: f64,
    pub flat_depth: f64,
    pub flat_width: f64,
    pub flat_center: f64,
}

impl TwoWellSpec {
    /// The reference landscape: sharp well of depth 1 at −2, flat well of
    /// depth 0.9 at +2.
    pub fn reference() -> Self {
        TwoWellSpec {
            sharp_depth: 1.0,
            sharp_width: 0.1,
            sharp_center: -2.0,
            flat_depth: 0.9,
            flat_width: 1.0,
            flat_center: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sharp_width > 0.0 && self.flat_width > 0.0) {
            return Err(Error::spec("well widths must be positive"));
        }
        if self.sharp_width >= self.flat_width {
            return Err(Error::spec("sharp well must be narrower than the flat well"));
        }
        if !(self.sharp_depth > self.flat_depth && self.flat_depth > 0.0) {
            return Err(Error::spec("depths must satisfy sharp > flat > 0"));
        }
        if self.sharp_center == self.flat_center {
            return Err(Error::spec("well centers must differ"));
        }
        Ok(())
    }

    // (value, first derivative, second derivative) of −depth·exp(−(w−μ)²/(2σ²))
    fn well(w: f64, depth: f64, width: f64, center: f64) -> (f64, f64, f64) {
        let s2 = width * width;
        let d = w - center;
        let e = depth * (-d * d / (2.0 * s2)).exp();
        (-e, e * d / s2, e * (1.0 / s2 - d * d / (s2 * s2)))
    }

    fn parts(&self, w: f64) -> [(f64, f64, f64); 2] {
        [
            Self::well(w, self.sharp_depth, self.sharp_width, self.sharp_center),
            Self::well(w, self.flat_depth, self.flat_width, self.flat_center),
        ]
    }

    pub fn value(&self, w: f64) -> f64 {
        let [a, b] = self.parts(w);
        a.0 + b.0
    }

    pub fn derivative(&self, w: f64) -> f64 {
        let [a, b] = self.parts(w);
        a.1 + b.1
    }

    pub fn second_derivative(&self, w: f64) -> f64 {
        let [a, b] = self.parts(w);
        a.2 + b.2
    }

    /// Gradient of the sharp term alone.
    pub fn sharp_term_derivative(&self, w: f64) -> f64 {
        self.parts(w)[0].1
    }

    pub fn in_sharp_basin(&self, w: f64) -> bool {
        (w - self.sharp_center).abs() <= 3.0 * self.sharp_width
    }

    pub fn in_flat_basin(&self, w: f64) -> bool {
        (w - self.flat_center).abs() <= 3.0 * self.flat_width
    }
}

#[derive(Debug, Clone)]
pub struct TwoWellOracle {
    spec: TwoWellSpec,
    layout: Arc<LayerMap>,
}

impl TwoWellOracle {
    pub fn new(spec: TwoWellSpec) -> Result<Self> {
        spec.validate()?;
        Ok(TwoWellOracle {
            spec,
            layout: Arc::new(LayerMap::single(1)),
        })
    }

    pub fn spec(&self) -> &TwoWellSpec {
        &self.spec
    }

    pub fn point(&self, w: f64) -> ParamVector {
        ParamVector::from_values(Arc::clone(&self.layout), vec![w]).expect("length 1")
    }
}

impl GradientOracle for TwoWellOracle {
    fn layout(&self) -> &Arc<LayerMap> {
        &self.layout
    }

    fn uses_batch(&self) -> bool {
        false
    }

    fn loss_and_gradient(&self, w: &ParamVector, _batch: &[usize]) -> Result<(f64, ParamVector)> {
        check_layout(&self.layout, w)?;
        let x = w.values()[0];
        let g = ParamVector::from_values(Arc::clone(&self.layout), vec![self.spec.derivative(x)])?;
        Ok((self.spec.value(x), g))
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn hessian(&self, w: &ParamVector) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, self.spec.second_derivative(w.values()[0])))
    }
}
