//! Flat parameter vectors with a named layer segmentation.
//!
//! Every vector the optimizers touch (weights, gradients, PSF, perturbations)
//! is a [`ParamVector`]: a dense `f64` buffer plus a shared [`LayerMap`] that
//! says which contiguous slice belongs to which layer. Analytic objectives use
//! a single segment named `"all"`.
//!
//! Norms accumulate sequentially in segment order, so a single-threaded run is
//! bitwise reproducible and the full-selection subset norm equals the plain
//! norm exactly.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One contiguous layer slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub length: usize,
}

/// Ordered, contiguous, non-overlapping segmentation of `[0, total_len)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Segment>", into = "Vec<Segment>")]
pub struct LayerMap {
    segments: Vec<Segment>,
}

impl LayerMap {
    /// Build a map from `(name, length)` pairs laid out back to back.
    pub fn new<S: Into<String>>(parts: impl IntoIterator<Item = (S, usize)>) -> Self {
        let mut offset = 0;
        let segments = parts
            .into_iter()
            .map(|(name, length)| {
                let seg = Segment {
                    name: name.into(),
                    offset,
                    length,
                };
                offset += length;
                seg
            })
            .collect();
        LayerMap { segments }
    }

    /// The single-segment layout used by analytic objectives.
    pub fn single(len: usize) -> Self {
        LayerMap::new([("all", len)])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn total_len(&self) -> usize {
        self.segments.last().map_or(0, |s| s.offset + s.length)
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    /// Offset of the first entry belonging to the last `k` segments.
    fn tail_offset(&self, k: usize) -> Result<usize> {
        let n = self.segments.len();
        if k == 0 || k > n {
            return Err(Error::InvalidSelector {
                requested: k,
                available: n,
            });
        }
        Ok(self.segments[n - k].offset)
    }
}

impl TryFrom<Vec<Segment>> for LayerMap {
    type Error = String;

    fn try_from(segments: Vec<Segment>) -> std::result::Result<Self, String> {
        let mut expected = 0;
        for s in &segments {
            if s.offset != expected {
                return Err(format!(
                    "segment {:?} starts at {} but previous segment ends at {}",
                    s.name, s.offset, expected
                ));
            }
            expected += s.length;
        }
        Ok(LayerMap { segments })
    }
}

impl From<LayerMap> for Vec<Segment> {
    fn from(map: LayerMap) -> Self {
        map.segments
    }
}

/// Which entries feed the gradient norms used by the sampling indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSelector {
    #[default]
    Full,
    /// Only the last `k` segments of the layout.
    LastLayers(usize),
}

/// Dense parameter-shaped vector.
#[derive(Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Arc<LayerMap>,
}

impl fmt::Debug for ParamVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamVector")
            .field("values", &self.values)
            .field("segments", &self.layout.num_segments())
            .finish()
    }
}

impl ParamVector {
    pub fn zeros(layout: Arc<LayerMap>) -> Self {
        let values = vec![0.0; layout.total_len()];
        ParamVector { values, layout }
    }

    pub fn from_values(layout: Arc<LayerMap>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.total_len() {
            return Err(Error::shape(format!(
                "{} values for a layout of length {}",
                values.len(),
                layout.total_len()
            )));
        }
        Ok(ParamVector { values, layout })
    }

    /// Single-segment vector, convenient for analytic objectives.
    pub fn from_slice(values: &[f64]) -> Self {
        ParamVector {
            layout: Arc::new(LayerMap::single(values.len())),
            values: values.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &Arc<LayerMap> {
        &self.layout
    }

    pub fn segment_values(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .segment(name)
            .map(|s| &self.values[s.offset..s.offset + s.length])
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || *self.layout == *other.layout
    }

    fn check_layout(&self, other: &ParamVector) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "layouts differ ({} vs {} entries, {} vs {} segments)",
                self.len(),
                other.len(),
                self.layout.num_segments(),
                other.layout.num_segments()
            )))
        }
    }

    fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::invalid(format!(
                "non-finite entry {} at index {i}",
                self.values[i]
            ))),
        }
    }

    /// Euclidean norm over every entry.
    pub fn l2_norm(&self) -> Result<f64> {
        self.check_finite()?;
        Ok(sum_squares(&self.values).sqrt())
    }

    /// Euclidean norm over the entries of the last `k` segments.
    pub fn subset_l2_norm(&self, k: usize) -> Result<f64> {
        let start = self.layout.tail_offset(k)?;
        self.check_finite()?;
        Ok(sum_squares(&self.values[start..]).sqrt())
    }

    pub fn selected_norm(&self, selector: NormSelector) -> Result<f64> {
        match selector {
            NormSelector::Full => self.l2_norm(),
            NormSelector::LastLayers(k) => self.subset_l2_norm(k),
        }
    }

    /// `a·x + b·y`, keeping `x`'s layout.
    pub fn linear_combine(a: f64, x: &ParamVector, b: f64, y: &ParamVector) -> Result<ParamVector> {
        x.check_layout(y)?;
        let values: Vec<f64> = x
            .values
            .iter()
            .zip(&y.values)
            .map(|(xi, yi)| a * xi + b * yi)
            .collect();
        let out = ParamVector {
            values,
            layout: Arc::clone(&x.layout),
        };
        if !out.is_finite() {
            return Err(Error::numeric("linear combination overflowed"));
        }
        Ok(out)
    }

    /// `self - other`.
    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        self.check_layout(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ParamVector {
            values,
            layout: Arc::clone(&self.layout),
        })
    }

    /// `self + other`.
    pub fn add(&self, other: &ParamVector) -> Result<ParamVector> {
        self.check_layout(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ParamVector {
            values,
            layout: Arc::clone(&self.layout),
        })
    }

    pub fn scale(&self, c: f64) -> ParamVector {
        ParamVector {
            values: self.values.iter().map(|v| c * v).collect(),
            layout: Arc::clone(&self.layout),
        }
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        self.check_layout(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc + a * b))
    }

    pub fn max_abs_diff(&self, other: &ParamVector) -> Result<f64> {
        self.check_layout(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

fn sum_squares(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc + v * v)
}
