//! Adaptive PSF sampling.
//!
//! Each full SAM iteration yields two norms, from which the indicator
//! `c = ‖PSF‖ / ‖g_sgd‖` is formed. Its relative change `r` against the
//! previous observation is clipped and smoothed into `r̂` by an EMA. Every `M`
//! iterations after warmup the per-segment budget is updated
//! autoregressively, `s ← clamp(s·(1 + α·r̂), s_min, s_max)`, and the
//! sampling probability for the next segment becomes `p = s / M`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Rng, Stream};

/// Denominator floor for the indicator and the relative change.
pub const NORM_FLOOR: f64 = 1e-12;
/// Bounds applied to a single relative change before smoothing.
pub const R_CLIP_MIN: f64 = -0.9;
pub const R_CLIP_MAX: f64 = 9.0;

pub fn indicator(norm_psf: f64, norm_sgd: f64) -> f64 {
    norm_psf / norm_sgd.max(NORM_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeChange {
    pub value: f64,
    /// The previous indicator was at or below the floor; `value` is 0.
    pub degenerate: bool,
}

pub fn relative_change(c: f64, c_prev: f64) -> RelativeChange {
    if c_prev <= NORM_FLOOR {
        RelativeChange {
            value: 0.0,
            degenerate: true,
        }
    } else {
        RelativeChange {
            value: (c - c_prev) / c_prev,
            degenerate: false,
        }
    }
}

/// What one SAM-mode iteration contributed to the indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    pub c: f64,
    /// Absent on the first observation.
    pub r: Option<f64>,
    pub r_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorState {
    pub c_prev: Option<f64>,
    pub r_hat: f64,
    pub beta: f64,
    pub samples_seen: u64,
    pub clip_events: u64,
    pub degenerate_events: u64,
}

impl IndicatorState {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::invalid(format!("EMA weight {beta} outside [0, 1)")));
        }
        Ok(IndicatorState {
            c_prev: None,
            r_hat: 0.0,
            beta,
            samples_seen: 0,
            clip_events: 0,
            degenerate_events: 0,
        })
    }

    /// `r̂ ← β·r̂ + (1−β)·r`.
    pub fn ema_update(&mut self, r: f64) {
        self.r_hat = self.beta * self.r_hat + (1.0 - self.beta) * r;
    }

    /// Feed the norms from one SAM-mode iteration.
    pub fn observe(&mut self, norm_psf: f64, norm_sgd: f64) -> Observation {
        let c = indicator(norm_psf, norm_sgd);
        let r = self.c_prev.map(|prev| {
            let change = relative_change(c, prev);
            if change.degenerate {
                self.degenerate_events += 1;
            }
            let clipped = change.value.clamp(R_CLIP_MIN, R_CLIP_MAX);
            if clipped != change.value {
                self.clip_events += 1;
            }
            self.ema_update(clipped);
            clipped
        });
        self.c_prev = Some(c);
        self.samples_seen += 1;
        Observation {
            c,
            r,
            r_hat: self.r_hat,
        }
    }
}

impl Default for IndicatorState {
    fn default() -> Self {
        IndicatorState::new(0.9).expect("0.9 is a valid EMA weight")
    }
}

/// User-facing schedule parameters; `None` fields take the defaults listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleParams {
    /// Segment length `M`.
    pub segment_len: u64,
    pub alpha: f64,
    /// Initial per-segment budget `s₀`.
    pub s0: f64,
    pub beta: f64,
    /// Warmup `I_start`; defaults to `M`.
    pub warmup: Option<u64>,
    /// Defaults to 1.
    pub s_min: Option<f64>,
    /// Defaults to `M`.
    pub s_max: Option<f64>,
    /// Pin `p` to a constant regardless of the indicator.
    pub forced_p: Option<f64>,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams {
            segment_len: 50,
            alpha: 0.4,
            s0: 1.0,
            beta: 0.9,
            warmup: None,
            s_min: None,
            s_max: None,
            forced_p: None,
        }
    }
}

impl ScheduleParams {
    pub fn warmup(&self) -> u64 {
        self.warmup.unwrap_or(self.segment_len)
    }

    pub fn s_min(&self) -> f64 {
        self.s_min.unwrap_or(1.0)
    }

    pub fn s_max(&self) -> f64 {
        self.s_max.unwrap_or(self.segment_len as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segment_len == 0 {
            return Err(Error::invalid("segment length M must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::invalid(format!("beta {} outside [0, 1)", self.beta)));
        }
        if !(self.s_min() >= 0.0 && self.s_min() <= self.s_max()) {
            return Err(Error::invalid(format!(
                "need 0 <= s_min <= s_max, got {} and {}",
                self.s_min(),
                self.s_max()
            )));
        }
        if !(self.s0 >= self.s_min() && self.s0 <= self.s_max()) {
            return Err(Error::invalid(format!("s0 = {} outside [s_min, s_max]", self.s0)));
        }
        if let Some(p) = self.forced_p {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("forced p {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentRecord {
    pub iteration: u64,
    pub s: f64,
    pub p: f64,
}

/// Per-segment sampling budget and its Bernoulli generator.
#[derive(Debug, Clone)]
pub struct SegmentSchedule {
    segment_len: u64,
    alpha: f64,
    s: f64,
    p: f64,
    warmup: u64,
    s_min: f64,
    s_max: f64,
    forced_p: Option<f64>,
    rng: Rng,
    history: Vec<SegmentRecord>,
}

impl SegmentSchedule {
    /// Sampling draws come from a stream derived from `seed` that no other
    /// consumer uses.
    pub fn new(params: &ScheduleParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut schedule = SegmentSchedule {
            segment_len: params.segment_len,
            alpha: params.alpha,
            s: params.s0,
            p: 0.0,
            warmup: params.warmup(),
            s_min: params.s_min(),
            s_max: params.s_max(),
            forced_p: params.forced_p,
            rng: stream_rng(seed, Stream::Sampling),
            history: Vec::new(),
        };
        schedule.p = schedule.probability();
        Ok(schedule)
    }

    fn probability(&self) -> f64 {
        self.forced_p
            .unwrap_or_else(|| (self.s / self.segment_len as f64).clamp(0.0, 1.0))
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn segment_len(&self) -> u64 {
        self.segment_len
    }

    pub fn warmup(&self) -> u64 {
        self.warmup
    }

    pub fn history(&self) -> &[SegmentRecord] {
        &self.history
    }

    /// Whether iteration `i` (1-based) closes a segment after warmup.
    pub fn is_boundary(&self, i: u64) -> bool {
        i > self.warmup && i.is_multiple_of(self.segment_len)
    }

    pub fn in_warmup(&self, i: u64) -> bool {
        i <= self.warmup
    }

    pub fn segment_update(&mut self, r_hat: f64) {
        if r_hat.is_finite() {
            let next = self.s * (1.0 + self.alpha * r_hat);
            self.s = next.clamp(self.s_min, self.s_max);
        }
        self.p = self.probability();
    }

    /// Segment update that also appends to the schedule history.
    pub(crate) fn segment_update_at(&mut self, iteration: u64, r_hat: f64) {
        self.segment_update(r_hat);
        self.history.push(SegmentRecord {
            iteration,
            s: self.s,
            p: self.p,
        });
    }

    /// One Bernoulli(p) draw; consumes exactly one uniform.
    pub fn sample_decision(&mut self) -> bool {
        let u: f64 = self.rng.random();
        u < self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedupPrediction {
    /// Total predicted SAM-mode iterations.
    pub s_star: f64,
    /// Predicted speed ratio over SAM.
    pub v: f64,
}

/// Closed-form speedup model for an indicator trend `r̂(i) = γ·i²`.
///
/// `s_j = s_{j−1}·(1 + α·γ·(j·M)²)` from `s₀`, each clamped to `[s_min, M]`;
/// a trailing partial segment counts pro rata. `v = 2I / (I + s*)`.
pub fn predict_speedup(iters: u64, segment_len: u64, s0: f64, alpha: f64, gamma: f64, s_min: f64) -> Result<SpeedupPrediction> {
    if segment_len == 0 {
        return Err(Error::invalid("segment length must be at least 1"));
    }
    if iters == 0 {
        return Err(Error::invalid("iteration count must be positive"));
    }
    let m = segment_len as f64;
    let full = iters / segment_len;
    let rem = iters % segment_len;
    let mut s = s0;
    let mut s_star = 0.0;
    let segments = full + u64::from(rem > 0);
    for j in 1..=segments {
        let k = (j * segment_len) as f64;
        s = (s * (1.0 + alpha * gamma * k * k)).clamp(s_min, m);
        let weight = if j > full { rem as f64 / m } else { 1.0 };
        s_star += weight * s;
    }
    let i = iters as f64;
    Ok(SpeedupPrediction {
        s_star,
        v: 2.0 * i / (i + s_star),
    })
}
