//! Reproducible training runs: config in, telemetry and a summary out.

mod config;
mod metrics;
mod telemetry;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::net::write_checkpoint;
use crate::objectives::GradientOracle;
use crate::optim::{Engine, Mode};
use crate::rng::{stream_rng, Rng, Stream};
use crate::scheduler::SegmentRecord;
use crate::tensor::{LayerMap, ParamVector};

pub use config::{DataConfig, ObjectiveConfig, OutputConfig, RunConfig};
pub use metrics::{compute_ais, compute_pct_sam, evaluate_accuracy};
pub use telemetry::{save_telemetry, write_telemetry, TelemetryRecord, TELEMETRY_HEADER};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleSummary {
    pub final_s: f64,
    pub final_p: f64,
    /// `(s, p)` after every segment update.
    pub trajectory: Vec<SegmentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorSummary {
    pub samples: u64,
    pub final_r_hat: f64,
    pub clip_events: u64,
    pub degenerate_events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub variant: String,
    pub seed: u64,
    /// False when a numeric failure stopped the run early.
    pub complete: bool,
    pub error: Option<String>,
    pub iterations: u64,
    pub final_loss: Option<f64>,
    /// Percent.
    pub train_accuracy: Option<f64>,
    /// Percent, on the clean test split.
    pub test_accuracy: Option<f64>,
    pub pct_sam: f64,
    pub sam_steps: u64,
    pub reuse_steps: u64,
    pub sgd_only_steps: u64,
    pub grad_evals_total: u64,
    pub wall_seconds: f64,
    /// Training samples per second.
    pub ais: f64,
    /// Estimated time plain SAM would need for the same iterations, divided
    /// by this run's time. Extrapolated from the measured cost of a gradient
    /// evaluation.
    pub measured_speed_ratio_vs_sam: f64,
    /// `2I / (I + #SAM)`: the ratio if gradient evaluations were all that cost.
    pub eval_speed_ratio_vs_sam: f64,
    pub schedule: Option<ScheduleSummary>,
    pub indicator: IndicatorSummary,
    /// Final parameters of analytic objectives.
    pub final_point: Option<Vec<f64>>,
    pub config: RunConfig,
}

pub struct RunOutput {
    pub summary: RunSummary,
    pub telemetry: Vec<TelemetryRecord>,
    pub params: ParamVector,
}

/// Times every gradient evaluation that passes through it.
struct Timed<'a> {
    inner: &'a dyn GradientOracle,
    nanos: AtomicU64,
    calls: AtomicU64,
}

impl GradientOracle for Timed<'_> {
    fn layout(&self) -> &Arc<LayerMap> {
        self.inner.layout()
    }

    fn uses_batch(&self) -> bool {
        self.inner.uses_batch()
    }

    fn num_samples(&self) -> Option<usize> {
        self.inner.num_samples()
    }

    fn loss_and_gradient(&self, w: &ParamVector, batch: &[usize]) -> Result<(f64, ParamVector)> {
        let start = Instant::now();
        let out = self.inner.loss_and_gradient(w, batch);
        self.nanos.fetch_add(start.elapsed().as_nanos() as u64, Ordering::Relaxed);
        self.calls.fetch_add(1, Ordering::Relaxed);
        out
    }
}

/// Epoch-wise reshuffled minibatches. A fresh permutation is drawn whenever
/// the remainder of the current one cannot fill a batch.
struct Batcher {
    order: Vec<usize>,
    pos: usize,
    size: usize,
    rng: Rng,
}

impl Batcher {
    fn new(n: usize, size: usize, seed: u64) -> Result<Self> {
        if size > n {
            return Err(Error::Config(format!("batch_size {size} exceeds the {n} training samples")));
        }
        let mut b = Batcher {
            order: (0..n).collect(),
            pos: 0,
            size,
            rng: stream_rng(seed, Stream::Shuffle),
        };
        b.order.shuffle(&mut b.rng);
        Ok(b)
    }

    fn next(&mut self) -> &[usize] {
        if self.pos + self.size > self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
        }
        let batch = &self.order[self.pos..self.pos + self.size];
        self.pos += self.size;
        batch
    }
}

/// Run one training job. Configuration and construction problems are
/// errors; a numeric failure mid-run is reported in the summary with
/// `complete = false`, keeping the last good parameters.
pub fn train(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let built = config.objective.build(config.seed)?;
    let timed = Timed {
        inner: built.oracle.as_ref(),
        nanos: AtomicU64::new(0),
        calls: AtomicU64::new(0),
    };
    let mut batcher = match built.oracle.num_samples() {
        Some(n) if built.oracle.uses_batch() => Some(Batcher::new(n, config.batch_size, config.seed)?),
        _ => None,
    };
    let mut engine = Engine::new(
        config.optimizer.clone(),
        built.init.clone(),
        &config.schedule,
        config.seed,
    )?;

    let mut telemetry = Vec::with_capacity(config.iterations as usize);
    let mut failure = None;
    let mut last_wall = 0u64;
    let start = Instant::now();
    for _ in 0..config.iterations {
        let batch: &[usize] = match batcher.as_mut() {
            Some(b) => b.next(),
            None => &[],
        };
        let out = match engine.step(&timed, batch) {
            Ok(out) => out,
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        let clock = if config.output.logical_clock {
            engine.grad_evals()
        } else {
            start.elapsed().as_nanos() as u64
        };
        last_wall = clock.max(last_wall + 1);
        let schedule = engine.schedule();
        telemetry.push(TelemetryRecord {
            iter: out.iteration,
            mode: out.mode,
            loss: out.loss,
            norm_sgd: out.norm_sgd,
            norm_psf: out.norm_psf,
            c: out.observation.map(|o| o.c),
            r: out.observation.and_then(|o| o.r),
            r_hat: engine.indicator().r_hat,
            s: schedule.map(|s| s.s()),
            p: schedule.map(|s| s.p()),
            wall_ns: last_wall,
        });
    }
    let wall_seconds = start.elapsed().as_secs_f64().max(1e-9);

    let params = engine.params().clone();
    let iterations = engine.iteration();
    let count = |m: Mode| telemetry.iter().filter(|r| r.mode == m).count() as u64;
    let sam_steps = count(Mode::Sam);

    let (train_accuracy, test_accuracy) = match &built.classifier {
        Some(clf) => (
            built.train.as_ref().map(|d| evaluate_accuracy(clf.as_ref(), &params, d)).transpose()?,
            built.test.as_ref().map(|d| evaluate_accuracy(clf.as_ref(), &params, d)).transpose()?,
        ),
        None => (None, None),
    };

    let calls = timed.calls.load(Ordering::Relaxed).max(1);
    let eval_seconds = timed.nanos.load(Ordering::Relaxed) as f64 * 1e-9 / calls as f64;
    let missing = (iterations - sam_steps) as f64;
    let measured_speed_ratio_vs_sam = (wall_seconds + missing * eval_seconds) / wall_seconds;
    let eval_speed_ratio_vs_sam = if iterations == 0 {
        1.0
    } else {
        2.0 * iterations as f64 / (iterations + sam_steps) as f64
    };
    let samples = match batcher {
        Some(_) => iterations * config.batch_size as u64,
        None => iterations,
    };

    let indicator = engine.indicator();
    let summary = RunSummary {
        variant: config.optimizer.variant.to_string(),
        seed: config.seed,
        complete: failure.is_none(),
        error: failure.as_ref().map(|e| e.to_string()),
        iterations,
        final_loss: telemetry.last().map(|r| r.loss),
        train_accuracy,
        test_accuracy,
        pct_sam: compute_pct_sam(&telemetry),
        sam_steps,
        reuse_steps: count(Mode::Reuse),
        sgd_only_steps: count(Mode::SgdOnly),
        grad_evals_total: engine.grad_evals(),
        wall_seconds,
        ais: compute_ais(samples as f64, 1.0, wall_seconds)?,
        measured_speed_ratio_vs_sam,
        eval_speed_ratio_vs_sam,
        schedule: engine.schedule().map(|s| ScheduleSummary {
            final_s: s.s(),
            final_p: s.p(),
            trajectory: s.history().to_vec(),
        }),
        indicator: IndicatorSummary {
            samples: indicator.samples_seen,
            final_r_hat: indicator.r_hat,
            clip_events: indicator.clip_events,
            degenerate_events: indicator.degenerate_events,
        },
        final_point: built.train.is_none().then(|| params.values().to_vec()),
        config: config.clone(),
    };

    let out = &config.output;
    if let Some(path) = &out.telemetry_csv {
        save_telemetry(path, &telemetry)?;
    }
    if let Some(path) = &out.summary_json {
        std::fs::write(path, serde_json::to_string_pretty(&summary)?)?;
    }
    if let (Some(path), Some(spec)) = (&out.checkpoint, &built.mlp) {
        let file = std::fs::File::create(path)?;
        write_checkpoint(std::io::BufWriter::new(file), spec, &params)?;
    }

    Ok(RunOutput {
        summary,
        telemetry,
        params,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub pct_sam: f64,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub grad_evals_total: u64,
    pub wall_seconds: f64,
    pub measured_speed_ratio_vs_sam: f64,
}

/// Re-run `base` once per `α`, everything else fixed. Output paths are
/// ignored.
pub fn sweep(base: &RunConfig, alphas: &[f64]) -> Result<Vec<SweepRow>> {
    if !base.optimizer.variant.is_adaptive() {
        return Err(Error::Config(format!(
            "an alpha sweep needs an adaptive optimizer, not {}",
            base.optimizer.variant
        )));
    }
    alphas
        .iter()
        .map(|&alpha| {
            let mut cfg = base.clone();
            cfg.schedule.alpha = alpha;
            cfg.output = OutputConfig::default();
            let s = train(&cfg)?.summary;
            if let Some(e) = s.error {
                return Err(Error::Numeric {
                    iteration: Some(s.iterations + 1),
                    what: format!("alpha {alpha}: {e}"),
                });
            }
            Ok(SweepRow {
                alpha,
                pct_sam: s.pct_sam,
                train_accuracy: s.train_accuracy,
                test_accuracy: s.test_accuracy,
                grad_evals_total: s.grad_evals_total,
                wall_seconds: s.wall_seconds,
                measured_speed_ratio_vs_sam: s.measured_speed_ratio_vs_sam,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::QuadraticSpec;
    use crate::optim::{LearningRate, Variant};

    fn quadratic(variant: Variant, iterations: u64) -> RunConfig {
        let mut cfg = RunConfig {
            iterations,
            objective: ObjectiveConfig::Quadratic {
                spec: QuadraticSpec::diagonal(vec![1.0, 4.0]),
                init: Some(vec![2.0, 1.0]),
            },
            ..RunConfig::default()
        };
        cfg.optimizer.variant = variant;
        cfg.optimizer.lr = LearningRate::Constant(0.05);
        cfg.output.logical_clock = true;
        cfg
    }

    #[test]
    fn batches_cover_each_epoch_once() {
        let mut b = Batcher::new(10, 5, 1).unwrap();
        let mut seen: Vec<usize> = b.next().to_vec();
        seen.extend(b.next());
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert!(Batcher::new(3, 4, 1).is_err());
    }

    #[test]
    fn sam_run_counts() {
        let run = train(&quadratic(Variant::Sam, 100)).unwrap();
        let s = &run.summary;
        assert!(s.complete);
        assert_eq!(s.pct_sam, 100.0);
        assert_eq!(s.grad_evals_total, 200);
        assert_eq!(s.measured_speed_ratio_vs_sam, 1.0);
        assert_eq!(s.eval_speed_ratio_vs_sam, 1.0);
        assert!(s.schedule.is_none());
        assert_eq!(run.telemetry.len(), 100);
        assert!(s.final_loss.unwrap() < 1e-3);
        assert_eq!(s.final_point.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn periodic_sam_percentage() {
        let run = train(&quadratic(Variant::SamK(5), 1000)).unwrap();
        assert_eq!(run.summary.pct_sam, 20.0);
        assert_eq!(run.summary.pct_sam, compute_pct_sam(&run.telemetry));
        assert_eq!(run.summary.grad_evals_total, 1200);
    }

    #[test]
    fn warmup_is_all_sam() {
        let run = train(&quadratic(Variant::Arsam, 120)).unwrap();
        assert!(run.telemetry[..50].iter().all(|r| r.mode == Mode::Sam));
        assert!(run.telemetry.iter().all(|r| r.s.is_some() && r.p.is_some()));
        let sched = run.summary.schedule.unwrap();
        assert_eq!(sched.trajectory.len(), 1);
        assert_eq!(sched.trajectory[0].iteration, 100);
    }

    #[test]
    fn logical_clock_is_reproducible() {
        let cfg = quadratic(Variant::Arsam, 300);
        let a = train(&cfg).unwrap().telemetry;
        let b = train(&cfg).unwrap().telemetry;
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].wall_ns < w[1].wall_ns));
    }

    #[test]
    fn divergence_is_reported_not_raised() {
        let mut cfg = quadratic(Variant::Sgd, 5000);
        cfg.optimizer.lr = LearningRate::Constant(10.0);
        cfg.optimizer.momentum = 0.0;
        let run = train(&cfg).unwrap();
        assert!(!run.summary.complete);
        assert!(run.summary.error.is_some());
        assert!(run.summary.iterations < 5000);
        assert!(run.params.is_finite());
        assert_eq!(run.telemetry.len() as u64, run.summary.iterations);
    }

    #[test]
    fn sweep_requires_adaptive_variant() {
        assert!(sweep(&quadratic(Variant::Sam, 10), &[0.1]).is_err());
        let rows = sweep(&quadratic(Variant::Arsam, 200), &[0.1, 0.8]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].alpha, 0.8);
    }
}
