//! The acceptance suite. Runs every criterion in order, prints one PASS/FAIL
//! line each, and exits non-zero if any failed.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use arsam::harness::{sweep, train, ObjectiveConfig, RunConfig, RunSummary};
use arsam::net::{Activation, MlpOracle, MlpSpec};
use arsam::objectives::{
    finite_difference_gradient, make_two_moons, relative_error, GradientOracle, LogisticOracle, QuadraticSpec,
};
use arsam::optim::{LearningRate, Variant};
use arsam::rng::trial_rng;
use arsam::scheduler::{ScheduleParams, SegmentSchedule};
use arsam::verify::{
    verify_decomposition, verify_flat_basin, verify_reuse_error, verify_scheduler_stats, verify_theorem1,
    FlatBasinSetup,
};
use arsam::ParamVector;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Two-moons (n = 1000, noise 0.2), (2, 32, 32, 2) ReLU MLP, batch 64.
fn moons(seed: u64, variant: Variant, alpha: f64, label_noise: f64) -> RunConfig {
    let mut cfg = RunConfig {
        seed,
        iterations: 4000,
        batch_size: 64,
        ..RunConfig::default()
    };
    if let ObjectiveConfig::Mlp { data, .. } = &mut cfg.objective {
        data.label_noise = label_noise;
    }
    cfg.optimizer.variant = variant;
    cfg.optimizer.lr = LearningRate::Constant(0.02);
    cfg.optimizer.rho = 0.05;
    cfg.schedule.alpha = alpha;
    cfg
}

fn run(cfg: &RunConfig) -> RunSummary {
    let s = train(cfg).expect("training run").summary;
    assert!(s.complete, "run stopped early: {:?}", s.error);
    s
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn decomposition() -> Outcome {
    let r = verify_decomposition(1000, 1..=50, 1e-3..=1.0, 1).map_err(|e| e.to_string())?;
    check(
        r.pass && r.worst_margin <= 1e-10,
        format!("{} trials, worst per-coordinate error {:.2e} (limit 1e-10)", r.trials, r.worst_margin),
    )
}

fn psf_bound() -> Outcome {
    let r = verify_theorem1(1000, 1..=50, 1e-3..=1.0, 1).map_err(|e| e.to_string())?;
    check(
        r.failures == 0,
        format!("{} violations in {} trials, max |PSF|/(rho*sum) = {:.6}", r.failures, r.trials, r.worst_margin),
    )
}

fn degenerate_schedules() -> Outcome {
    let base = {
        let mut c = moons(7, Variant::Sam, 0.4, 0.0);
        c.iterations = 500;
        c
    };
    let sam = train(&base).map_err(|e| e.to_string())?;
    let mut forced = base.clone();
    forced.optimizer.variant = Variant::Arsam;
    forced.schedule.forced_p = Some(1.0);
    let arsam = train(&forced).map_err(|e| e.to_string())?;
    let same_params = sam.params.values().iter().zip(arsam.params.values()).all(|(a, b)| a.to_bits() == b.to_bits());
    let same_losses = sam.telemetry.len() == arsam.telemetry.len()
        && sam.telemetry.iter().zip(&arsam.telemetry).all(|(a, b)| a.loss.to_bits() == b.loss.to_bits());

    let mut sgd_cfg = base.clone();
    sgd_cfg.optimizer.variant = Variant::Sgd;
    let sgd = train(&sgd_cfg).map_err(|e| e.to_string())?;
    let mut ablation = base;
    ablation.optimizer.variant = Variant::ArsamA;
    ablation.schedule.forced_p = Some(0.0);
    ablation.schedule.warmup = Some(0);
    let arsam_a = train(&ablation).map_err(|e| e.to_string())?;
    let same_sgd = sgd.params.values().iter().zip(arsam_a.params.values()).all(|(a, b)| a.to_bits() == b.to_bits())
        && sgd.telemetry.iter().zip(&arsam_a.telemetry).all(|(a, b)| a.loss.to_bits() == b.loss.to_bits());
    check(
        same_params && same_losses && same_sgd,
        format!(
            "p=1 ARSAM vs SAM bitwise: {}; p=0 ARSAM-A vs SGD bitwise: {} (500 iterations)",
            same_params && same_losses,
            same_sgd
        ),
    )
}

fn flat_basin() -> Outcome {
    let r = verify_flat_basin(&FlatBasinSetup::default()).map_err(|e| e.to_string())?;
    check(
        r.check.failures == 0 && r.sgd.sharp >= 1,
        format!(
            "{} starts; brute-force flat {}; SAM/ARSAM misses {}; SGD sharp {}; ARSAM-SAM agreement {:.1}% ({:.1}% on certified starts)",
            r.check.trials,
            r.brute_force.flat,
            r.check.failures,
            r.sgd.sharp,
            100.0 * r.arsam_sam_agreement,
            100.0 * r.arsam_sam_agreement_certified
        ),
    )
}

fn generalization_parity() -> Outcome {
    let seeds = 0..5u64;
    let sam: Vec<RunSummary> = seeds.clone().map(|s| run(&moons(s, Variant::Sam, 0.2, 0.0))).collect();
    let arsam: Vec<RunSummary> = seeds.map(|s| run(&moons(s, Variant::Arsam, 0.2, 0.0))).collect();
    let acc = |rs: &[RunSummary]| mean(&rs.iter().map(|r| r.test_accuracy.unwrap()).collect::<Vec<_>>());
    let evals = |rs: &[RunSummary]| rs.iter().map(|r| r.grad_evals_total).sum::<u64>() as f64;
    let (a_sam, a_arsam) = (acc(&sam), acc(&arsam));
    let pct = mean(&arsam.iter().map(|r| r.pct_sam).collect::<Vec<_>>());
    let ratio = evals(&arsam) / evals(&sam);
    check(
        (a_arsam - a_sam).abs() <= 1.0 && pct <= 60.0 && ratio <= 0.85,
        format!(
            "test accuracy ARSAM {a_arsam:.2}% vs SAM {a_sam:.2}% (gap {:.2} pp, limit 1.0); %SAM {pct:.1} (limit 60); grad evals {ratio:.3}x SAM (limit 0.85)",
            (a_arsam - a_sam).abs()
        ),
    )
}

fn speedup_model() -> Outcome {
    let cfg = |variant| {
        let mut c = moons(0, variant, 0.2, 0.0);
        c.iterations = 2000;
        c.batch_size = 256;
        c
    };
    let (sam_cfg, arsam_cfg) = (cfg(Variant::Sam), cfg(Variant::Arsam));
    // Interleaved repeats; the fastest of each is the least disturbed by
    // other load on the machine.
    let mut best = [f64::INFINITY; 2];
    let mut predicted = 0.0;
    for _ in 0..5 {
        best[0] = best[0].min(run(&sam_cfg).wall_seconds);
        let a = run(&arsam_cfg);
        best[1] = best[1].min(a.wall_seconds);
        predicted = a.eval_speed_ratio_vs_sam;
    }
    let measured = best[0] / best[1];
    let rel = (measured - predicted).abs() / predicted;
    check(
        rel <= 0.15,
        format!("measured SAM/ARSAM time ratio {measured:.3} vs predicted {predicted:.3} (off by {:.1}%, limit 15%)", 100.0 * rel),
    )
}

fn reuse_error_trend() -> Outcome {
    let r = verify_reuse_error(&QuadraticSpec::diagonal(vec![1.0, 4.0]), 0.01, 0.05, &[1, 2, 3, 4, 5], 32, 1)
        .map_err(|e| e.to_string())?;
    let fmt = |v: &[f64]| v.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ");
    check(
        r.check.pass && r.check.inconclusive == 0,
        format!(
            "mean error by lag [{}], at eta/2 [{}], worst normalised ratio {:.3}",
            fmt(&r.mean_error),
            fmt(&r.mean_error_half_eta),
            r.check.worst_margin
        ),
    )
}

fn label_noise() -> Outcome {
    let seeds = 0..5u64;
    let sgd: Vec<f64> = seeds.clone().map(|s| run(&moons(s, Variant::Sgd, 0.4, 0.4)).test_accuracy.unwrap()).collect();
    let arsam: Vec<f64> = seeds.map(|s| run(&moons(s, Variant::Arsam, 0.4, 0.4)).test_accuracy.unwrap()).collect();
    let (m_sgd, m_arsam) = (mean(&sgd), mean(&arsam));
    check(
        m_arsam >= m_sgd,
        format!("40% label noise, clean-test accuracy ARSAM {m_arsam:.2}% vs SGD {m_sgd:.2}%"),
    )
}

fn scheduler_stats() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for p in [0.0, 0.2, 1.0] {
        let r = verify_scheduler_stats(p, 10_000, 1).map_err(|e| e.to_string())?;
        ok &= r.pass;
        lines.push(format!("p={p}: {}", r.details));
    }
    let params = ScheduleParams::default();
    let mut schedule = SegmentSchedule::new(&params, 1).map_err(|e| e.to_string())?;
    let mut rng = trial_rng(99, 0);
    let mut clamp_ok = true;
    for _ in 0..100_000 {
        let r_hat = rng.random_range(-1e6..=1e6);
        schedule.segment_update(r_hat);
        let (s, p) = (schedule.s(), schedule.p());
        clamp_ok &= (params.s_min()..=params.s_max()).contains(&s)
            && (0.0..=1.0).contains(&p)
            && p == s / params.segment_len as f64;
    }
    lines.push(format!("clamps held over 100000 fuzzed updates: {clamp_ok}"));
    check(ok && clamp_ok, lines.join("; "))
}

fn alpha_monotonicity() -> Outcome {
    let alphas = [0.1, 0.2, 0.3, 0.4, 0.5];
    let rows = sweep(&moons(0, Variant::Arsam, 0.4, 0.0), &alphas).map_err(|e| e.to_string())?;
    let pct: Vec<f64> = rows.iter().map(|r| r.pct_sam).collect();
    check(
        pct.windows(2).all(|w| w[0] <= w[1]),
        format!(
            "%SAM by alpha: {}",
            alphas.iter().zip(&pct).map(|(a, p)| format!("{a}->{p:.1}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn gradient_correctness() -> Outcome {
    let data = Arc::new(make_two_moons(200, 0.2, 3).map_err(|e| e.to_string())?);
    let mut worst_mlp = 0.0f64;
    for probe in 0..100u64 {
        let mut rng = trial_rng(11, probe);
        let activation = if probe % 2 == 0 { Activation::Tanh } else { Activation::Relu };
        let spec = MlpSpec::new(vec![2, 32, 32, 2], activation, probe).map_err(|e| e.to_string())?;
        let oracle = MlpOracle::new(spec, Arc::clone(&data)).map_err(|e| e.to_string())?;
        let w = oracle.init_params().map_err(|e| e.to_string())?;
        let batch: Vec<usize> = (0..16).map(|_| rng.random_range(0..data.len())).collect();
        let g = oracle.gradient(&w, &batch).map_err(|e| e.to_string())?;
        let fd = finite_difference_gradient(&oracle, &w, &batch, 1e-6).map_err(|e| e.to_string())?;
        worst_mlp = worst_mlp.max(relative_error(&g, &fd, 1e-8).map_err(|e| e.to_string())?);
    }
    let mut worst_logistic = 0.0f64;
    for probe in 0..20u64 {
        let mut rng = trial_rng(12, probe);
        let oracle = LogisticOracle::new(Arc::clone(&data), 1e-3).map_err(|e| e.to_string())?;
        let values = (0..oracle.layout().total_len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let w = ParamVector::from_values(Arc::clone(oracle.layout()), values).map_err(|e| e.to_string())?;
        let batch: Vec<usize> = (0..32).map(|_| rng.random_range(0..data.len())).collect();
        let g = oracle.gradient(&w, &batch).map_err(|e| e.to_string())?;
        let fd = finite_difference_gradient(&oracle, &w, &batch, 1e-6).map_err(|e| e.to_string())?;
        worst_logistic = worst_logistic.max(relative_error(&g, &fd, 1e-8).map_err(|e| e.to_string())?);
    }
    check(
        worst_mlp <= 1e-4 && worst_logistic <= 1e-5,
        format!("MLP worst relative error {worst_mlp:.2e} over 100 probes (limit 1e-4); logistic {worst_logistic:.2e} (limit 1e-5)"),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    // `cargo test -- --list` and similar probes expect libtest behaviour.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [Criterion; 11] = [
        (1, "decomposition exactness", Duration::from_secs(10), decomposition),
        (2, "PSF norm bound", Duration::from_secs(10), psf_bound),
        (3, "degenerate-schedule equivalences", Duration::from_secs(120), degenerate_schedules),
        (4, "flat-basin selection", Duration::from_secs(120), flat_basin),
        (5, "generalization parity", Duration::from_secs(300), generalization_parity),
        (6, "speedup model", Duration::from_secs(300), speedup_model),
        (7, "reuse-error trend", Duration::from_secs(60), reuse_error_trend),
        (8, "label-noise robustness", Duration::from_secs(300), label_noise),
        (9, "scheduler statistics", Duration::from_secs(10), scheduler_stats),
        (10, "alpha monotonicity", Duration::from_secs(600), alpha_monotonicity),
        (11, "gradient correctness", Duration::from_secs(30), gradient_correctness),
    ];
    let mut failed = 0;
    for (n, name, limit, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let (ok, msg) = match outcome {
            Ok(m) => (took <= limit, m),
            Err(m) => (false, m),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {n:>2} {name}: {msg} [{:.1}s, limit {}s]",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
