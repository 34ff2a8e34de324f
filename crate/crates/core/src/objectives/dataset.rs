use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fmt::f64_17;
use crate::rng::{stream_rng, Stream};

/// Labelled feature rows, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    inputs: Vec<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    /// Fraction of labels deliberately corrupted; bookkeeping only.
    pub noise_rate: f64,
}

impl Dataset {
    pub fn new(dim: usize, inputs: Vec<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dataset dimension must be positive"));
        }
        if inputs.len() != dim * labels.len() {
            return Err(Error::shape(format!(
                "{} input values for {} rows of dimension {dim}",
                inputs.len(),
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|l| **l >= num_classes) {
            return Err(Error::invalid(format!("label {l} outside {num_classes} classes")));
        }
        Ok(Dataset {
            dim,
            inputs,
            labels,
            num_classes,
            noise_rate: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    /// CSV with header `x0,...,x{d-1},label`; floats at 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| f64_17(*v)).collect();
            rec.push(self.labels[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a CSV written by [`Dataset::write_csv`]. The class count is the
    /// larger of `min_classes` and the largest label plus one.
    pub fn read_csv<R: Read>(input: R, min_classes: usize) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        let n_cols = headers.len();
        if n_cols < 2 || &headers[n_cols - 1] != "label" {
            return Err(Error::invalid("dataset CSV must end with a `label` column"));
        }
        for (j, h) in headers.iter().take(n_cols - 1).enumerate() {
            if h != format!("x{j}") {
                return Err(Error::invalid(format!("unexpected column {h:?}, wanted x{j}")));
            }
        }
        let dim = n_cols - 1;
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            for field in rec.iter().take(dim) {
                inputs.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::invalid(format!("bad float {field:?}: {e}")))?,
                );
            }
            let l = &rec[dim];
            labels.push(
                l.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::invalid(format!("bad label {l:?}: {e}")))?,
            );
        }
        let classes = labels.iter().max().map_or(0, |m| m + 1).max(min_classes);
        Dataset::new(dim, inputs, labels, classes)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load_csv(path: &Path, min_classes: usize) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, min_classes)
    }
}

/// Two interleaved half circles with Gaussian jitter; labels 0 (upper moon)
/// and 1 (lower moon), row order shuffled. Deterministic per seed.
pub fn make_two_moons(n: usize, noise_std: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::invalid("two moons needs at least 2 points"));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::invalid(format!("noise_std must be >= 0, got {noise_std}")));
    }
    let n_upper = n / 2;
    let n_lower = n - n_upper;
    let angle = |k: usize, count: usize| {
        if count <= 1 {
            0.0
        } else {
            PI * k as f64 / (count - 1) as f64
        }
    };
    let mut points: Vec<([f64; 2], usize)> = Vec::with_capacity(n);
    for k in 0..n_upper {
        let t = angle(k, n_upper);
        points.push(([t.cos(), t.sin()], 0));
    }
    for k in 0..n_lower {
        let t = angle(k, n_lower);
        points.push(([1.0 - t.cos(), 0.5 - t.sin()], 1));
    }

    let mut rng = stream_rng(seed, Stream::Data);
    if noise_std > 0.0 {
        let normal = Normal::new(0.0, noise_std).map_err(|e| Error::invalid(e.to_string()))?;
        for (p, _) in &mut points {
            p[0] += normal.sample(&mut rng);
            p[1] += normal.sample(&mut rng);
        }
    }
    points.shuffle(&mut rng);

    let inputs = points.iter().flat_map(|(p, _)| *p).collect();
    let labels = points.iter().map(|(_, l)| *l).collect();
    Dataset::new(2, inputs, labels, 2)
}

/// Symmetric label noise: exactly `⌊rate·n⌋` distinct samples, chosen
/// uniformly, get a label drawn uniformly from the other classes.
pub fn inject_label_noise(dataset: &Dataset, rate: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::invalid(format!("noise rate {rate} outside [0, 1]")));
    }
    let mut out = dataset.clone();
    out.noise_rate = rate;
    let n = dataset.len();
    // Tolerance keeps e.g. 0.29·100 from flooring to 28.
    let count = ((rate * n as f64) + 1e-9).floor() as usize;
    let count = count.min(n);
    if count == 0 || dataset.num_classes < 2 {
        return Ok(out);
    }
    let mut rng = stream_rng(seed, Stream::Noise);
    let chosen = index::sample(&mut rng, n, count);
    for i in chosen.iter() {
        let old = out.labels[i];
        let mut new = rng.random_range(0..dataset.num_classes - 1);
        if new >= old {
            new += 1;
        }
        out.labels[i] = new;
    }
    Ok(out)
}
