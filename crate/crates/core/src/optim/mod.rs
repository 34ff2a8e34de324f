//! SGD, SAM, periodic SAM and the adaptive sample-and-reuse optimizers.
//!
//! SAM's gradient splits into the plain gradient and a second-order term,
//! the projection of the Hessian onto the normalised gradient (PSF):
//!
//! `∇L(w + ρ·g/‖g‖) ≈ g + ρ·H·g/‖g‖`
//!
//! The split is exact for quadratics. The adaptive optimizers compute the
//! full two-pass gradient only on sampled iterations, caching the PSF as the
//! difference of the two passes, and otherwise reuse the cached PSF on top
//! of a fresh plain gradient.

mod config;
mod engine;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::objectives::GradientOracle;
use crate::tensor::ParamVector;

pub use config::{LearningRate, OptimizerConfig, Variant};
pub use engine::{Engine, Mode, PsfCache, StepOutcome};

/// Gradient norms at or below this skip the perturbation.
pub const GRAD_FLOOR: f64 = 1e-12;

/// `ε̂ = ρ·g/‖g‖`, or zero when `‖g‖` is below [`GRAD_FLOOR`].
pub fn perturbation(g: &ParamVector, rho: f64) -> Result<ParamVector> {
    let norm = g.l2_norm()?;
    if norm <= GRAD_FLOOR {
        return Ok(g.scale(0.0));
    }
    Ok(g.scale(rho / norm))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamGradient {
    pub g_sgd: ParamVector,
    pub g_sam: ParamVector,
    pub loss: f64,
}

/// Gradient at `w + ε̂(direction)` on the same batch.
pub fn perturbed_gradient(
    oracle: &dyn GradientOracle,
    w: &ParamVector,
    batch: &[usize],
    direction: &ParamVector,
    rho: f64,
) -> Result<ParamVector> {
    let eps = perturbation(direction, rho)?;
    oracle.gradient(&w.add(&eps)?, batch)
}

/// Both SAM passes on one batch: exactly two gradient evaluations.
pub fn sam_gradient(oracle: &dyn GradientOracle, w: &ParamVector, batch: &[usize], rho: f64) -> Result<SamGradient> {
    let (loss, g_sgd) = oracle.loss_and_gradient(w, batch)?;
    let g_sam = perturbed_gradient(oracle, w, batch, &g_sgd, rho)?;
    Ok(SamGradient { g_sgd, g_sam, loss })
}

/// `g_sam − g_sgd`.
pub fn psf_extract(g_sam: &ParamVector, g_sgd: &ParamVector) -> Result<ParamVector> {
    g_sam.sub(g_sgd)
}

/// Closed-form PSF `ρ·H·g/‖g‖`.
pub fn exact_psf_quadratic(h: &DMatrix<f64>, g: &ParamVector, rho: f64) -> Result<ParamVector> {
    if h.nrows() != g.len() || h.ncols() != g.len() {
        return Err(Error::shape(format!(
            "{}x{} Hessian for a gradient of length {}",
            h.nrows(),
            h.ncols(),
            g.len()
        )));
    }
    let norm = g.l2_norm()?;
    if norm <= GRAD_FLOOR {
        return Err(Error::invalid("PSF is undefined at a zero gradient"));
    }
    let hg = h * DVector::from_column_slice(g.values());
    let values = hg.iter().map(|v| rho * v / norm).collect();
    ParamVector::from_values(std::sync::Arc::clone(g.layout()), values)
}

/// Heavy-ball update with an L2 penalty on the descent direction:
/// `v ← μ·v + (d + 2λw)`, `w ← w − η·v`.
pub fn apply_update(
    w: &mut ParamVector,
    direction: &ParamVector,
    eta: f64,
    momentum: f64,
    velocity: &mut ParamVector,
    lambda: f64,
) -> Result<()> {
    if !(w.same_layout(direction) && w.same_layout(velocity)) {
        return Err(Error::shape("update vectors have different layouts"));
    }
    let d = direction.values();
    let v = velocity.values_mut();
    let wv = w.values_mut();
    for j in 0..wv.len() {
        let mut step = d[j];
        if lambda != 0.0 {
            step += 2.0 * lambda * wv[j];
        }
        v[j] = momentum * v[j] + step;
        wv[j] -= eta * v[j];
    }
    if !w.is_finite() {
        return Err(Error::numeric("parameters became non-finite"));
    }
    Ok(())
}
