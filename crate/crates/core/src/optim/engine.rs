use std::sync::Arc;

use serde::Serialize;

use super::{apply_update, perturbation, OptimizerConfig, Variant};
use crate::error::{Error, Result};
use crate::objectives::GradientOracle;
use crate::scheduler::{IndicatorState, Observation, ScheduleParams, SegmentSchedule};
use crate::tensor::ParamVector;

/// How an iteration updated the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    /// Fresh two-pass SAM gradient.
    Sam,
    /// Fresh plain gradient plus the cached PSF.
    Reuse,
    /// Plain gradient only.
    SgdOnly,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sam => "SAM",
            Mode::Reuse => "REUSE",
            Mode::SgdOnly => "SGD_ONLY",
        }
    }
}

/// The PSF from the last SAM-mode iteration.
#[derive(Debug, Clone, Default)]
pub struct PsfCache {
    pub psf: Option<ParamVector>,
    pub origin_iteration: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepOutcome {
    pub iteration: u64,
    pub mode: Mode,
    pub loss: f64,
    pub norm_sgd: f64,
    pub norm_psf: Option<f64>,
    pub grad_evals: u32,
    /// Indicator update, on SAM-mode iterations.
    pub observation: Option<Observation>,
}

/// One optimizer run: parameters, momentum, PSF cache and sampling schedule.
#[derive(Debug, Clone)]
pub struct Engine {
    config: OptimizerConfig,
    params: ParamVector,
    velocity: ParamVector,
    cache: PsfCache,
    indicator: IndicatorState,
    schedule: Option<SegmentSchedule>,
    iteration: u64,
    grad_evals: u64,
    sam_steps: u64,
}

impl Engine {
    /// `seed` drives the sampling decisions of the adaptive variants.
    pub fn new(config: OptimizerConfig, params: ParamVector, schedule: &ScheduleParams, seed: u64) -> Result<Self> {
        config.validate()?;
        schedule.validate()?;
        if !params.is_finite() {
            return Err(Error::invalid("initial parameters are not finite"));
        }
        let indicator = IndicatorState::new(schedule.beta)?;
        let schedule = if config.variant.is_adaptive() {
            Some(SegmentSchedule::new(schedule, seed)?)
        } else {
            None
        };
        Ok(Engine {
            velocity: ParamVector::zeros(Arc::clone(params.layout())),
            params,
            cache: PsfCache::default(),
            indicator,
            schedule,
            config,
            iteration: 0,
            grad_evals: 0,
            sam_steps: 0,
        })
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn into_params(self) -> ParamVector {
        self.params
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn cache(&self) -> &PsfCache {
        &self.cache
    }

    pub fn indicator(&self) -> &IndicatorState {
        &self.indicator
    }

    pub fn schedule(&self) -> Option<&SegmentSchedule> {
        self.schedule.as_ref()
    }

    /// Completed iterations.
    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn grad_evals(&self) -> u64 {
        self.grad_evals
    }

    pub fn sam_steps(&self) -> u64 {
        self.sam_steps
    }

    /// Run one iteration. On error the engine is left exactly as it was.
    pub fn step(&mut self, oracle: &dyn GradientOracle, batch: &[usize]) -> Result<StepOutcome> {
        let i = self.iteration + 1;
        let cfg = &self.config;
        let selector = cfg.norm_selector;
        let numeric = |e: Error| match e {
            Error::InvalidInput(what) => Error::Numeric {
                iteration: Some(i),
                what,
            },
            other => other.at_iteration(i),
        };

        let (loss, g_sgd) = oracle.loss_and_gradient(&self.params, batch).map_err(numeric)?;
        let norm_sgd = g_sgd.selected_norm(selector).map_err(numeric)?;

        let mut schedule = self.schedule.clone();
        let sample = match cfg.variant {
            Variant::Sgd => false,
            Variant::Sam => true,
            Variant::SamK(k) => i.is_multiple_of(k),
            Variant::Arsam | Variant::ArsamA => {
                let s = schedule.as_mut().expect("adaptive variants own a schedule");
                s.in_warmup(i) || s.sample_decision()
            }
        };

        let mut indicator = self.indicator.clone();
        let mut cache = None;
        let (mode, direction, norm_psf, observation) = if sample {
            let basis = if cfg.decay_in_perturbation && cfg.weight_decay != 0.0 {
                ParamVector::linear_combine(1.0, &g_sgd, 2.0 * cfg.weight_decay, &self.params).map_err(numeric)?
            } else {
                g_sgd.clone()
            };
            let eps = perturbation(&basis, cfg.rho).map_err(numeric)?;
            let probe = self.params.add(&eps)?;
            let g_sam = oracle.gradient(&probe, batch).map_err(numeric)?;
            let psf = g_sam.sub(&g_sgd)?;
            let norm_psf = psf.selected_norm(selector).map_err(numeric)?;
            let obs = indicator.observe(norm_psf, norm_sgd);
            cache = Some(psf);
            (Mode::Sam, g_sam, Some(norm_psf), Some(obs))
        } else {
            let reusable = match (&self.cache.psf, cfg.variant) {
                (Some(psf), Variant::Arsam) => {
                    let lag = i - self.cache.origin_iteration;
                    cfg.reuse_window.is_none_or(|w| lag <= w).then_some(psf)
                }
                _ => None,
            };
            match reusable {
                Some(psf) => {
                    let norm_psf = psf.selected_norm(selector).map_err(numeric)?;
                    (Mode::Reuse, g_sgd.add(psf)?, Some(norm_psf), None)
                }
                None => (Mode::SgdOnly, g_sgd, None, None),
            }
        };

        let mut params = self.params.clone();
        let mut velocity = self.velocity.clone();
        apply_update(
            &mut params,
            &direction,
            cfg.lr.at(i),
            cfg.momentum,
            &mut velocity,
            cfg.weight_decay,
        )
        .map_err(numeric)?;

        if let Some(s) = schedule.as_mut() {
            if s.is_boundary(i) {
                s.segment_update_at(i, indicator.r_hat);
            }
        }

        let grad_evals = if mode == Mode::Sam { 2 } else { 1 };
        self.params = params;
        self.velocity = velocity;
        self.indicator = indicator;
        self.schedule = schedule;
        if let Some(psf) = cache {
            self.cache = PsfCache {
                psf: Some(psf),
                origin_iteration: i,
            };
            self.sam_steps += 1;
        }
        self.iteration = i;
        self.grad_evals += u64::from(grad_evals);

        Ok(StepOutcome {
            iteration: i,
            mode,
            loss,
            norm_sgd,
            norm_psf,
            grad_evals,
            observation,
        })
    }
}
