use std::sync::Arc;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_layout, GradientOracle};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::tensor::{LayerMap, ParamVector};

/// `L(w) = ½ wᵀHw` with `H = QᵀDQ`, `D = diag(eigenvalues)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSpec {
    pub eigenvalues: Vec<f64>,
    /// Seed for a random orthogonal `Q`; `None` means `Q = I`.
    #[serde(default)]
    pub rotation_seed: Option<u64>,
    /// Require every eigenvalue to be non-negative.
    #[serde(default = "default_true")]
    pub psd: bool,
}

fn default_true() -> bool {
    true
}

impl QuadraticSpec {
    pub fn diagonal(eigenvalues: Vec<f64>) -> Self {
        QuadraticSpec {
            eigenvalues,
            rotation_seed: None,
            psd: true,
        }
    }

    pub fn rotated(eigenvalues: Vec<f64>, seed: u64) -> Self {
        QuadraticSpec {
            eigenvalues,
            rotation_seed: Some(seed),
            psd: true,
        }
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    fn validate(&self) -> Result<()> {
        if self.eigenvalues.is_empty() {
            return Err(Error::spec("quadratic needs at least one eigenvalue"));
        }
        if let Some(d) = self.eigenvalues.iter().find(|d| !d.is_finite()) {
            return Err(Error::spec(format!("non-finite eigenvalue {d}")));
        }
        if self.psd {
            if let Some(d) = self.eigenvalues.iter().find(|d| **d < 0.0) {
                return Err(Error::spec(format!("negative eigenvalue {d} in PSD mode")));
            }
        }
        Ok(())
    }
}

/// Haar-distributed orthogonal matrix from the QR factorisation of a Gaussian
/// matrix, with column signs fixed by the diagonal of `R`.
fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, Stream::Init);
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    spec: QuadraticSpec,
    layout: Arc<LayerMap>,
    // Row-major copy of H for a fixed-order matrix-vector product.
    rows: Vec<f64>,
    hessian: DMatrix<f64>,
}

impl QuadraticOracle {
    pub fn new(spec: QuadraticSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.dimension();
        let mut h = DMatrix::zeros(n, n);
        match spec.rotation_seed {
            None => {
                for (i, d) in spec.eigenvalues.iter().enumerate() {
                    h[(i, i)] = *d;
                }
            }
            Some(seed) => {
                let q = random_orthogonal(n, seed);
                // Upper triangle then mirror, so H is exactly symmetric.
                for i in 0..n {
                    for j in i..n {
                        let mut acc = 0.0;
                        for (k, d) in spec.eigenvalues.iter().enumerate() {
                            acc += q[(k, i)] * d * q[(k, j)];
                        }
                        h[(i, j)] = acc;
                        h[(j, i)] = acc;
                    }
                }
            }
        }
        let rows = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| h[(i, j)])
            .collect();
        Ok(QuadraticOracle {
            layout: Arc::new(LayerMap::single(n)),
            spec,
            rows,
            hessian: h,
        })
    }

    pub fn spec(&self) -> &QuadraticSpec {
        &self.spec
    }

    pub fn hessian_matrix(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    /// `H·w` with a fixed accumulation order.
    pub fn hessian_times(&self, w: &[f64]) -> Vec<f64> {
        let n = w.len();
        self.rows
            .chunks_exact(n)
            .map(|row| row.iter().zip(w).fold(0.0, |acc, (h, x)| acc + h * x))
            .collect()
    }
}

impl GradientOracle for QuadraticOracle {
    fn layout(&self) -> &Arc<LayerMap> {
        &self.layout
    }

    fn uses_batch(&self) -> bool {
        false
    }

    fn loss_and_gradient(&self, w: &ParamVector, _batch: &[usize]) -> Result<(f64, ParamVector)> {
        check_layout(&self.layout, w)?;
        let g = self.hessian_times(w.values());
        let loss = 0.5 * w.values().iter().zip(&g).fold(0.0, |acc, (x, y)| acc + x * y);
        Ok((loss, ParamVector::from_values(Arc::clone(&self.layout), g)?))
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn hessian(&self, _w: &ParamVector) -> Option<DMatrix<f64>> {
        Some(self.hessian.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64], o: &QuadraticOracle) -> ParamVector {
        ParamVector::from_values(Arc::clone(o.layout()), v.to_vec()).unwrap()
    }

    #[test]
    fn hand_example() {
        let o = QuadraticOracle::new(QuadraticSpec::diagonal(vec![1.0, 4.0])).unwrap();
        let (loss, g) = o.loss_and_gradient(&w(&[2.0, 1.0], &o), &[]).unwrap();
        assert_eq!(loss, 4.0);
        assert_eq!(g.values(), &[2.0, 4.0]);
    }

    #[test]
    fn minimum_at_origin() {
        let o = QuadraticOracle::new(QuadraticSpec::rotated(vec![1.0, 2.0, 3.0], 9)).unwrap();
        let (loss, g) = o.loss_and_gradient(&w(&[0.0; 3], &o), &[]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn trace_is_eigenvalue_sum() {
        let eig = vec![0.5, 1.5, 2.0, 7.0, 0.0];
        for seed in 0..10 {
            let o = QuadraticOracle::new(QuadraticSpec::rotated(eig.clone(), seed)).unwrap();
            let tr = o.hessian_matrix().trace();
            assert!((tr - 11.0).abs() < 1e-12, "seed {seed}: trace {tr}");
        }
    }

    #[test]
    fn rotated_spectrum_matches() {
        let eig = vec![0.25, 1.0, 3.0, 9.0];
        let o = QuadraticOracle::new(QuadraticSpec::rotated(eig.clone(), 3)).unwrap();
        let mut got: Vec<f64> = o.hessian_matrix().clone().symmetric_eigenvalues().iter().copied().collect();
        got.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&eig) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn hessian_exactly_symmetric() {
        let o = QuadraticOracle::new(QuadraticSpec::rotated(vec![1.0, 2.0, 5.0, 0.1, 3.3, 8.0], 77)).unwrap();
        let h = o.hessian_matrix();
        assert_eq!(h, &h.transpose());
    }

    #[test]
    fn loss_is_half_w_dot_gradient() {
        let o = QuadraticOracle::new(QuadraticSpec::rotated(vec![1.0, 2.0, 5.0], 4)).unwrap();
        let p = w(&[0.3, -1.7, 2.2], &o);
        let (loss, g) = o.loss_and_gradient(&p, &[]).unwrap();
        assert!((loss - 0.5 * p.dot(&g).unwrap()).abs() <= 1e-12);
        assert_eq!(g.values(), o.hessian_times(p.values()).as_slice());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(QuadraticOracle::new(QuadraticSpec::diagonal(vec![])).is_err());
        assert!(QuadraticOracle::new(QuadraticSpec::diagonal(vec![1.0, -1.0])).is_err());
        let indefinite = QuadraticSpec {
            eigenvalues: vec![1.0, -1.0],
            rotation_seed: None,
            psd: false,
        };
        assert!(QuadraticOracle::new(indefinite).is_ok());
    }

    #[test]
    fn layout_mismatch() {
        let o = QuadraticOracle::new(QuadraticSpec::diagonal(vec![1.0, 4.0])).unwrap();
        assert!(matches!(
            o.loss(&ParamVector::from_slice(&[1.0]), &[]),
            Err(Error::Shape(_))
        ));
    }
}
