use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use arsam::harness::{self, RunConfig};
use arsam::optim::Variant;
use arsam::scheduler::predict_speedup;
use arsam::verify::{self, SuiteConfig};

#[derive(Parser)]
#[command(name = "arsam", version, about = "Sharpness-aware training with adaptive PSF sampling and reuse")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train from a TOML config and print the run summary as JSON.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the optimizer variant (sgd, sam, sam_k(K), arsam, arsam_a).
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long)]
        iterations: Option<u64>,
    },
    /// Run the verification suite; exits 1 if any check fails.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Where to write the JSON report.
        #[arg(long, default_value = "verify-report.json")]
        report: PathBuf,
        /// Trials per randomized check.
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
    /// Predicted SAM-mode count and speed ratio of the adaptive schedule.
    PredictSpeedup {
        #[arg(long)]
        iters: u64,
        #[arg(long, default_value_t = 50)]
        segment: u64,
        #[arg(long, default_value_t = 1.0)]
        s0: f64,
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        /// Growth rate of the indicator's relative change per iteration squared.
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        s_min: f64,
    },
    /// Re-run a config once per alpha and print one CSV row per run.
    Sweep {
        /// Defaults to the two-moons MLP reference run.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn train(config: PathBuf, seed: Option<u64>, variant: Option<Variant>, iterations: Option<u64>) -> Result<bool> {
    let mut cfg = RunConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(v) = variant {
        cfg.optimizer.variant = v;
    }
    if let Some(n) = iterations {
        cfg.iterations = n;
    }
    let run = harness::train(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&run.summary)?);
    if let Some(e) = &run.summary.error {
        eprintln!("run stopped after {} iterations: {e}", run.summary.iterations);
    }
    Ok(run.summary.complete)
}

fn verify(seed: u64, report: PathBuf, trials: u64) -> Result<bool> {
    let cfg = SuiteConfig {
        seed,
        trials,
        ..SuiteConfig::default()
    };
    let out = verify::run_suite(&cfg)?;
    for check in &out.checks {
        println!("{}", check.line());
    }
    std::fs::write(&report, serde_json::to_string_pretty(&out)?)
        .with_context(|| format!("writing {}", report.display()))?;
    Ok(out.pass)
}

fn sweep(config: Option<PathBuf>, alphas: Vec<f64>, seed: Option<u64>) -> Result<()> {
    let mut cfg = match config {
        Some(path) => RunConfig::load(&path).with_context(|| format!("loading {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let rows = harness::sweep(&cfg, &alphas)?;
    println!("alpha,pct_sam,train_accuracy,test_accuracy,grad_evals_total,wall_seconds,measured_speed_ratio_vs_sam");
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        println!(
            "{},{},{},{},{},{},{}",
            r.alpha,
            r.pct_sam,
            opt(r.train_accuracy),
            opt(r.test_accuracy),
            r.grad_evals_total,
            r.wall_seconds,
            r.measured_speed_ratio_vs_sam
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train {
            config,
            seed,
            variant,
            iterations,
        } => train(config, seed, variant, iterations),
        Command::Verify { seed, report, trials } => verify(seed, report, trials),
        Command::PredictSpeedup {
            iters,
            segment,
            s0,
            alpha,
            gamma,
            s_min,
        } => {
            if iters == 0 {
                bail!("--iters must be positive");
            }
            let p = predict_speedup(iters, segment, s0, alpha, gamma, s_min)?;
            println!("s* = {}", p.s_star);
            println!("v = {}", p.v);
            Ok(true)
        }
        Command::Sweep { config, alpha, seed } => sweep(config, alpha, seed).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
