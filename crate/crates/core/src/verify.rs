//! Property checks for the SAM gradient decomposition, the PSF norm bound,
//! stale-PSF error growth, flat-basin selection and the Bernoulli sampler.
//!
//! Every check is deterministic in its seed. Trial `k` draws from
//! `trial_rng(seed, k)`, so results do not depend on evaluation order.

use std::ops::RangeInclusive;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::objectives::{GradientOracle, QuadraticOracle, QuadraticSpec, TwoWellOracle, TwoWellSpec};
use crate::optim::{exact_psf_quadratic, psf_extract, sam_gradient, Engine, LearningRate, OptimizerConfig, Variant};
use crate::rng::{trial_rng, Rng};
use crate::scheduler::{ScheduleParams, SegmentSchedule};
use crate::tensor::ParamVector;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub trials: u64,
    pub failures: u64,
    /// Trials excluded because the trajectory diverged.
    pub inconclusive: u64,
    /// Worst observed value of the check statistic; its meaning is given in
    /// `details`.
    pub worst_margin: f64,
    pub pass: bool,
    pub details: String,
}

impl CheckReport {
    fn new(name: &str, trials: u64, failures: u64, worst_margin: f64, details: String) -> Self {
        CheckReport {
            name: name.to_string(),
            trials,
            failures,
            inconclusive: 0,
            worst_margin,
            pass: failures == 0,
            details,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} trials, {} failures, worst {:.3e}{}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.trials,
            self.failures,
            self.worst_margin,
            if self.inconclusive > 0 {
                format!(", {} inconclusive", self.inconclusive)
            } else {
                String::new()
            }
        )
    }
}

fn draw(rng: &mut Rng, range: &RangeInclusive<f64>) -> f64 {
    let (lo, hi) = (*range.start(), *range.end());
    if lo == hi {
        lo
    } else if lo > 0.0 {
        // log-uniform, so small radii get as many trials as large ones
        (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
    } else {
        lo + rng.random::<f64>() * (hi - lo)
    }
}

fn check_ranges(trials: u64, dims: &RangeInclusive<usize>, rho: &RangeInclusive<f64>) -> Result<()> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if *dims.start() == 0 || dims.is_empty() {
        return Err(Error::invalid(format!("bad dimension range {dims:?}")));
    }
    if !(*rho.start() >= 0.0 && rho.start() <= rho.end() && rho.end().is_finite()) {
        return Err(Error::invalid(format!("bad radius range {rho:?}")));
    }
    Ok(())
}

/// A random PSD quadratic with log-uniform spectrum in `[1e-3, 1e2]`, a
/// random rotation and a standard-normal evaluation point.
fn random_problem(rng: &mut Rng, dims: &RangeInclusive<usize>) -> Result<(QuadraticOracle, ParamVector)> {
    let dim = rng.random_range(dims.clone());
    let eigenvalues: Vec<f64> = (0..dim).map(|_| draw(rng, &(1e-3..=1e2))).collect();
    let oracle = QuadraticOracle::new(QuadraticSpec::rotated(eigenvalues, rng.random()))?;
    let values = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let w = ParamVector::from_values(Arc::clone(oracle.layout()), values)?;
    Ok((oracle, w))
}

/// Two-pass PSF against the closed form on random quadratics. Statistic:
/// largest per-coordinate difference, required ≤ 1e-10.
pub fn verify_decomposition(
    trials: u64,
    dims: RangeInclusive<usize>,
    rho: RangeInclusive<f64>,
    seed: u64,
) -> Result<CheckReport> {
    const TOL: f64 = 1e-10;
    check_ranges(trials, &dims, &rho)?;
    let mut worst = 0.0f64;
    let mut failures = 0;
    for k in 0..trials {
        let mut rng = trial_rng(seed, k);
        let (oracle, w) = random_problem(&mut rng, &dims)?;
        let r = draw(&mut rng, &rho);
        let sg = sam_gradient(&oracle, &w, &[], r)?;
        let psf = psf_extract(&sg.g_sam, &sg.g_sgd)?;
        let exact = exact_psf_quadratic(oracle.hessian_matrix(), &sg.g_sgd, r)?;
        let err = psf.max_abs_diff(&exact)?;
        worst = worst.max(err);
        if err.is_nan() || err > TOL {
            failures += 1;
        }
    }
    Ok(CheckReport::new(
        "decomposition",
        trials,
        failures,
        worst,
        format!("max |two-pass PSF - rho*H*g/|g||_inf over trials; tolerance {TOL:e}"),
    ))
}

/// `‖PSF‖ ≤ ρ·Σδᵢ` on random PSD quadratics. Statistic: largest ratio of the
/// two sides.
pub fn verify_theorem1(
    trials: u64,
    dims: RangeInclusive<usize>,
    rho: RangeInclusive<f64>,
    seed: u64,
) -> Result<CheckReport> {
    check_ranges(trials, &dims, &rho)?;
    let mut worst = 0.0f64;
    let mut failures = 0;
    for k in 0..trials {
        let mut rng = trial_rng(seed, k);
        let (oracle, w) = random_problem(&mut rng, &dims)?;
        let r = draw(&mut rng, &rho);
        let g = oracle.gradient(&w, &[])?;
        let norm = exact_psf_quadratic(oracle.hessian_matrix(), &g, r)?.l2_norm()?;
        let bound = r * oracle.spec().eigenvalues.iter().sum::<f64>();
        if bound > 0.0 {
            worst = worst.max(norm / bound);
        }
        if norm.is_nan() || norm > bound + 1e-10 {
            failures += 1;
        }
    }
    Ok(CheckReport::new(
        "psf_norm_bound",
        trials,
        failures,
        worst,
        "max |PSF| / (rho * sum of eigenvalues)".into(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReuseErrorReport {
    pub check: CheckReport,
    pub lags: Vec<u64>,
    /// Mean `‖PSF(w_t) − PSF(w_{t+n})‖` per lag at step size `η`.
    pub mean_error: Vec<f64>,
    /// The same at `η/2`.
    pub mean_error_half_eta: Vec<f64>,
}

/// Mean PSF drift per lag along gradient-descent trajectories from random
/// starts. Checkpoints sit at fixed multiples of `η·t`, so the `η/2` run is
/// compared at the same distance along the flow.
fn reuse_errors(
    oracle: &QuadraticOracle,
    eta: f64,
    rho: f64,
    lags: &[u64],
    seeds: u64,
    seed: u64,
) -> Option<(Vec<f64>, u64)> {
    const CHECKPOINT_TIMES: [f64; 4] = [0.0, 0.25, 0.5, 1.0];
    let h = oracle.hessian_matrix();
    let max_lag = *lags.last().unwrap_or(&0);
    let mut sums = vec![0.0; lags.len()];
    let mut count = 0u64;
    let mut diverged = 0u64;
    let psf_at = |w: &ParamVector| -> Option<ParamVector> {
        let g = oracle.gradient(w, &[]).ok()?;
        exact_psf_quadratic(h, &g, rho).ok()
    };
    'seed: for k in 0..seeds {
        let mut rng = trial_rng(seed, k);
        let start: Vec<f64> = (0..oracle.spec().dimension()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let checkpoints: Vec<u64> = if eta > 0.0 {
            CHECKPOINT_TIMES.iter().map(|t| (t / eta).round() as u64).collect()
        } else {
            vec![0]
        };
        let horizon = checkpoints.last().copied().unwrap_or(0) + max_lag;
        let mut w = ParamVector::from_values(Arc::clone(oracle.layout()), start).ok()?;
        let mut path = Vec::with_capacity(horizon as usize + 1);
        path.push(w.clone());
        // Stable gradient descent on a convex quadratic never raises the loss.
        let mut loss = oracle.loss(&w, &[]).ok()?;
        for _ in 0..horizon {
            let g = oracle.gradient(&w, &[]).ok()?;
            let next = ParamVector::linear_combine(1.0, &w, -eta, &g).ok();
            let next_loss = next.as_ref().and_then(|n| oracle.loss(n, &[]).ok());
            match (next, next_loss) {
                (Some(n), Some(l)) if l.is_finite() && l <= loss => {
                    w = n;
                    loss = l;
                }
                _ => {
                    diverged += 1;
                    continue 'seed;
                }
            }
            path.push(w.clone());
        }
        let mut local = vec![0.0; lags.len()];
        for &t in &checkpoints {
            let Some(base) = psf_at(&path[t as usize]) else {
                continue;
            };
            for (slot, &n) in local.iter_mut().zip(lags) {
                let later = psf_at(&path[(t + n) as usize])?;
                *slot += base.sub(&later).ok()?.l2_norm().ok()? / checkpoints.len() as f64;
            }
        }
        for (s, l) in sums.iter_mut().zip(local) {
            *s += l;
        }
        count += 1;
    }
    if count == 0 {
        return None;
    }
    Some((sums.iter().map(|s| s / count as f64).collect(), diverged))
}

/// Stale-PSF error must grow with the lag and shrink with the step size:
/// `e(n) ≤ 1.1·e(n+1)` and `e_{η/2}(n) ≤ 1.05·e_η(n)`. Statistic: the largest
/// left/right ratio over both families, normalised by the slack (≤ 1 passes).
/// Diverging trajectories are excluded and counted as inconclusive.
pub fn verify_reuse_error(spec: &QuadraticSpec, eta: f64, rho: f64, lags: &[u64], seeds: u64, seed: u64) -> Result<ReuseErrorReport> {
    if lags.is_empty() || lags[0] == 0 || lags.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("lags must be positive and strictly increasing"));
    }
    if seeds == 0 || !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid("need at least one seed and a finite eta >= 0"));
    }
    let oracle = QuadraticOracle::new(spec.clone())?;
    let full = reuse_errors(&oracle, eta, rho, lags, seeds, seed);
    let half = reuse_errors(&oracle, eta / 2.0, rho, lags, seeds, seed);
    let (Some((full, div_full)), Some((half, div_half))) = (full, half) else {
        let mut check = CheckReport::new("reuse_error", seeds, 0, 0.0, "every trajectory diverged".into());
        check.inconclusive = seeds;
        return Ok(ReuseErrorReport {
            check,
            lags: lags.to_vec(),
            mean_error: Vec::new(),
            mean_error_half_eta: Vec::new(),
        });
    };

    let ratio = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a / b };
    let mut failures = 0;
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for (j, w) in full.windows(2).enumerate() {
        let q = ratio(w[0], 1.1 * w[1]);
        worst = worst.max(q);
        if q > 1.0 {
            failures += 1;
            notes.push(format!("e({}) = {:.3e} > 1.1 * e({}) = {:.3e}", lags[j], w[0], lags[j + 1], 1.1 * w[1]));
        }
    }
    for (j, (h, f)) in half.iter().zip(&full).enumerate() {
        let q = ratio(*h, 1.05 * f);
        worst = worst.max(q);
        if q > 1.0 {
            failures += 1;
            notes.push(format!("eta/2 error at lag {} = {:.3e} > 1.05 * {:.3e}", lags[j], h, f));
        }
    }
    let details = if notes.is_empty() {
        "max of e(n)/(1.1 e(n+1)) and e_half(n)/(1.05 e(n))".to_string()
    } else {
        notes.join("; ")
    };
    let mut check = CheckReport::new("reuse_error", seeds, failures, worst, details);
    check.inconclusive = div_full.max(div_half);
    Ok(ReuseErrorReport {
        check,
        lags: lags.to_vec(),
        mean_error: full,
        mean_error_half_eta: half,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basin {
    Sharp,
    Flat,
    Unconverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BasinCounts {
    pub sharp: u64,
    pub flat: u64,
    pub unconverged: u64,
}

impl BasinCounts {
    fn add(&mut self, b: Basin) {
        match b {
            Basin::Sharp => self.sharp += 1,
            Basin::Flat => self.flat += 1,
            Basin::Unconverged => self.unconverged += 1,
        }
    }
}

/// Perturbed loss `max_{|ε|≤ρ} L(w+ε)` tabulated on a grid.
pub struct PerturbedLossGrid {
    pub lo: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl PerturbedLossGrid {
    /// Grid of spacing `step` over `[lo, hi]`; the inner maximum runs over
    /// the same spacing.
    pub fn new(spec: &TwoWellSpec, rho: f64, lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && hi > lo && rho >= 0.0) {
            return Err(Error::invalid("bad perturbed-loss grid"));
        }
        let n = ((hi - lo) / step).round() as usize + 1;
        let inner = (rho / step).round() as i64;
        let raw: Vec<f64> = (-inner..n as i64 + inner)
            .map(|k| spec.value(lo + k as f64 * step))
            .collect();
        let window = 2 * inner as usize + 1;
        let values = (0..n)
            .map(|i| raw[i..i + window].iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Ok(PerturbedLossGrid { lo, step, values })
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    pub fn argmin(&self) -> f64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best });
        self.point(i)
    }

    /// Follow strictly decreasing grid neighbours from `w0`. Stops on
    /// plateaus, where the result belongs to neither basin.
    pub fn descend(&self, w0: f64) -> f64 {
        let last = self.values.len() - 1;
        let mut i = (((w0 - self.lo) / self.step).round().max(0.0) as usize).min(last);
        loop {
            let mut best = i;
            if i > 0 && self.values[i - 1] < self.values[best] {
                best = i - 1;
            }
            if i < last && self.values[i + 1] < self.values[best] {
                best = i + 1;
            }
            if best == i {
                return self.point(i);
            }
            i = best;
        }
    }
}

/// Setup for the flat-basin check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatBasinSetup {
    pub spec: TwoWellSpec,
    pub rho: f64,
    pub inits: u64,
    /// Initial points are uniform over this interval.
    pub init_range: (f64, f64),
    pub iterations: u64,
    pub lr: f64,
    pub momentum: f64,
    pub schedule: ScheduleParams,
    pub seed: u64,
}

impl Default for FlatBasinSetup {
    fn default() -> Self {
        FlatBasinSetup {
            spec: TwoWellSpec::reference(),
            rho: 0.3,
            inits: 200,
            init_range: (-2.6, 4.0),
            iterations: 5000,
            lr: 0.01,
            momentum: 0.9,
            schedule: ScheduleParams::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatBasinReport {
    pub check: CheckReport,
    pub certified_argmin: f64,
    pub brute_force: BasinCounts,
    pub sgd: BasinCounts,
    pub sam: BasinCounts,
    pub arsam: BasinCounts,
    /// Fraction of initializations where ARSAM and SAM end in the same basin.
    pub arsam_sam_agreement: f64,
    /// The same, over initializations from which brute-force descent reaches
    /// a basin. Starts on the plateau between the wells, where the perturbed
    /// loss is constant, are left out.
    pub arsam_sam_agreement_certified: f64,
}

impl FlatBasinSetup {
    /// Basin whose centre lies within one well width of every point in
    /// `[lo, hi]`.
    fn classify(&self, lo: f64, hi: f64) -> Basin {
        let s = &self.spec;
        let inside = |c: f64, width: f64| lo >= c - width && hi <= c + width;
        if inside(s.flat_center, s.flat_width) {
            Basin::Flat
        } else if inside(s.sharp_center, s.sharp_width) {
            Basin::Sharp
        } else {
            Basin::Unconverged
        }
    }

    fn run(&self, oracle: &TwoWellOracle, variant: Variant, w0: f64, seed: u64) -> Result<Basin> {
        let config = OptimizerConfig {
            variant,
            lr: LearningRate::Constant(self.lr),
            momentum: self.momentum,
            rho: self.rho,
            ..OptimizerConfig::default()
        };
        let mut engine = Engine::new(config, oracle.point(w0), &self.schedule, seed)?;
        // Range of the iterates over the last fifth of the run.
        let tail_start = self.iterations - self.iterations / 5;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..self.iterations {
            if engine.step(oracle, &[]).is_err() {
                return Ok(Basin::Unconverged);
            }
            if i >= tail_start {
                let w = engine.params().values()[0];
                lo = lo.min(w);
                hi = hi.max(w);
            }
        }
        Ok(self.classify(lo, hi))
    }
}

/// SAM and ARSAM must end in the flat basin from every start where
/// brute-force descent of the perturbed loss does. Statistic: number of
/// such starts where either failed.
pub fn verify_flat_basin(setup: &FlatBasinSetup) -> Result<FlatBasinReport> {
    setup.spec.validate()?;
    if setup.inits == 0 || setup.init_range.0.partial_cmp(&setup.init_range.1) != Some(std::cmp::Ordering::Less) {
        return Err(Error::invalid("flat-basin check needs initializations over a non-empty range"));
    }
    let spec = &setup.spec;
    let span = 4.0 * spec.flat_width;
    let lo = spec.sharp_center.min(spec.flat_center) - span;
    let hi = spec.sharp_center.max(spec.flat_center) + span;
    let grid = PerturbedLossGrid::new(spec, setup.rho, lo, hi, 1e-3)?;
    let certified = grid.argmin();
    if !spec.in_flat_basin(certified) {
        return Err(Error::spec(format!(
            "perturbed-loss minimum {certified} at rho {} is not in the flat basin",
            setup.rho
        )));
    }

    let oracle = TwoWellOracle::new(*spec)?;
    let mut report = FlatBasinReport {
        check: CheckReport::new("flat_basin", setup.inits, 0, 0.0, String::new()),
        certified_argmin: certified,
        brute_force: BasinCounts::default(),
        sgd: BasinCounts::default(),
        sam: BasinCounts::default(),
        arsam: BasinCounts::default(),
        arsam_sam_agreement: 0.0,
        arsam_sam_agreement_certified: 0.0,
    };
    let (a, b) = setup.init_range;
    let mut failures = 0u64;
    let mut agree = 0u64;
    let (mut certified_starts, mut certified_agree) = (0u64, 0u64);
    let mut notes = Vec::new();
    for k in 0..setup.inits {
        let mut rng = trial_rng(setup.seed, k);
        let w0 = a + rng.random::<f64>() * (b - a);
        let end = grid.descend(w0);
        let brute = setup.classify(end, end);
        let sgd = setup.run(&oracle, Variant::Sgd, w0, setup.seed.wrapping_add(k))?;
        let sam = setup.run(&oracle, Variant::Sam, w0, setup.seed.wrapping_add(k))?;
        let arsam = setup.run(&oracle, Variant::Arsam, w0, setup.seed.wrapping_add(k))?;
        report.brute_force.add(brute);
        report.sgd.add(sgd);
        report.sam.add(sam);
        report.arsam.add(arsam);
        if sam == arsam {
            agree += 1;
        }
        if brute != Basin::Unconverged {
            certified_starts += 1;
            certified_agree += u64::from(sam == arsam);
        }
        if brute == Basin::Flat && (sam != Basin::Flat || arsam != Basin::Flat) {
            failures += 1;
            if notes.len() < 5 {
                notes.push(format!("w0 = {w0:.4}: sam {sam:?}, arsam {arsam:?}"));
            }
        }
    }
    report.arsam_sam_agreement = agree as f64 / setup.inits as f64;
    report.arsam_sam_agreement_certified = certified_agree as f64 / certified_starts.max(1) as f64;
    let mut details = format!(
        "starts where brute force reaches the flat basin but SAM or ARSAM does not; SGD sharp-basin count {}",
        report.sgd.sharp
    );
    if !notes.is_empty() {
        details = format!("{details}; {}", notes.join("; "));
    }
    report.check = CheckReport::new("flat_basin", setup.inits, failures, failures as f64, details);
    Ok(report)
}

/// Empirical frequency of `draws` Bernoulli(p) decisions against a 3σ
/// binomial band. Statistic: `|freq − p| / 3σ` (0 when σ = 0 and exact).
pub fn verify_scheduler_stats(p: f64, draws: u64, seed: u64) -> Result<CheckReport> {
    if !(0.0..=1.0).contains(&p) || draws == 0 {
        return Err(Error::invalid("need p in [0, 1] and at least one draw"));
    }
    let params = ScheduleParams {
        forced_p: Some(p),
        ..ScheduleParams::default()
    };
    let mut schedule = SegmentSchedule::new(&params, seed)?;
    let hits = (0..draws).filter(|_| schedule.sample_decision()).count();
    let freq = hits as f64 / draws as f64;
    let band = 3.0 * (p * (1.0 - p) / draws as f64).sqrt();
    let dev = (freq - p).abs();
    let (failed, stat) = if band == 0.0 {
        (dev != 0.0, if dev == 0.0 { 0.0 } else { f64::INFINITY })
    } else {
        (dev > band, dev / band)
    };
    Ok(CheckReport::new(
        &format!("sampler_p={p}"),
        draws,
        u64::from(failed),
        stat,
        format!("frequency {freq:.5} vs p = {p}, 3-sigma band {band:.5}"),
    ))
}

/// Sizes for the whole suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: u64,
    pub max_dim: usize,
    pub rho: (f64, f64),
    pub reuse_spec: QuadraticSpec,
    pub reuse_eta: f64,
    pub reuse_rho: f64,
    pub reuse_lags: Vec<u64>,
    pub reuse_seeds: u64,
    pub flat_basin: FlatBasinSetup,
    pub sampler_p: Vec<f64>,
    pub sampler_draws: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 1,
            trials: 1000,
            max_dim: 50,
            rho: (1e-3, 1.0),
            reuse_spec: QuadraticSpec::diagonal(vec![1.0, 4.0]),
            reuse_eta: 0.01,
            reuse_rho: 0.05,
            reuse_lags: vec![1, 2, 3, 4, 5],
            reuse_seeds: 32,
            flat_basin: FlatBasinSetup::default(),
            sampler_p: vec![0.0, 0.2, 1.0],
            sampler_draws: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub pass: bool,
    pub checks: Vec<CheckReport>,
    pub reuse_error: ReuseErrorReport,
    pub flat_basin: FlatBasinReport,
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let rho = cfg.rho.0..=cfg.rho.1;
    let dims = 1..=cfg.max_dim;
    let mut checks = vec![
        verify_decomposition(cfg.trials, dims.clone(), rho.clone(), cfg.seed)?,
        verify_theorem1(cfg.trials, dims, rho, cfg.seed)?,
    ];
    let reuse_error = verify_reuse_error(
        &cfg.reuse_spec,
        cfg.reuse_eta,
        cfg.reuse_rho,
        &cfg.reuse_lags,
        cfg.reuse_seeds,
        cfg.seed,
    )?;
    checks.push(reuse_error.check.clone());
    let flat_basin = verify_flat_basin(&cfg.flat_basin)?;
    checks.push(flat_basin.check.clone());
    for &p in &cfg.sampler_p {
        checks.push(verify_scheduler_stats(p, cfg.sampler_draws, cfg.seed)?);
    }
    Ok(SuiteReport {
        pass: checks.iter().all(|c| c.pass),
        checks,
        reuse_error,
        flat_basin,
    })
}
