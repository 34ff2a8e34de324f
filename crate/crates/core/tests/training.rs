use std::fs;

use arsam::harness::{compute_pct_sam, train, ObjectiveConfig, RunConfig, TELEMETRY_HEADER};
use arsam::net::read_checkpoint;
use arsam::optim::{LearningRate, Mode, Variant};

fn small_moons(variant: Variant, iterations: u64) -> RunConfig {
    let mut cfg = RunConfig {
        iterations,
        ..RunConfig::default()
    };
    cfg.optimizer.variant = variant;
    cfg.output.logical_clock = true;
    cfg
}

// Frozen from the first verified run of the default two-moons config.
#[test]
fn reference_sgd_run() {
    let s = train(&small_moons(Variant::Sgd, 2000)).unwrap().summary;
    assert!(s.complete);
    let acc = s.test_accuracy.unwrap();
    assert!(acc >= 95.0);
    assert!((acc - 95.4).abs() < 1e-9, "test accuracy {acc}");
    assert_eq!(s.grad_evals_total, 2000);
    assert_eq!(s.pct_sam, 0.0);
}

#[test]
fn arsam_skips_second_passes() {
    let run = train(&small_moons(Variant::Arsam, 600)).unwrap();
    let s = &run.summary;
    assert!(s.pct_sam < 100.0);
    assert!(s.grad_evals_total < 2 * 600);
    assert_eq!(s.pct_sam, compute_pct_sam(&run.telemetry));
    assert_eq!(s.sam_steps + s.reuse_steps + s.sgd_only_steps, 600);
    assert!(run.telemetry.iter().any(|r| r.mode == Mode::Reuse));
    assert!((0.0..=100.0).contains(&s.pct_sam));
    assert!(s.ais > 0.0);
}

#[test]
fn forced_full_sampling_reproduces_sam() {
    let sam = train(&small_moons(Variant::Sam, 200)).unwrap();
    let mut cfg = small_moons(Variant::Arsam, 200);
    cfg.schedule.forced_p = Some(1.0);
    let arsam = train(&cfg).unwrap();
    assert_eq!(sam.params, arsam.params);
    assert_eq!(sam.summary.test_accuracy, arsam.summary.test_accuracy);
    for (a, b) in sam.telemetry.iter().zip(&arsam.telemetry) {
        assert_eq!(a.loss.to_bits(), b.loss.to_bits());
        assert_eq!(a.mode, b.mode);
    }
}

#[test]
fn identical_configs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for k in 0..2 {
        let mut cfg = small_moons(Variant::Arsam, 300);
        cfg.output.telemetry_csv = Some(dir.path().join(format!("t{k}.csv")));
        cfg.output.summary_json = Some(dir.path().join(format!("s{k}.json")));
        train(&cfg).unwrap();
        paths.push(cfg.output.telemetry_csv.unwrap());
    }
    let a = fs::read(&paths[0]).unwrap();
    assert_eq!(a, fs::read(&paths[1]).unwrap());

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), TELEMETRY_HEADER);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 300);
    let mut last_wall = 0u64;
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 11);
        assert_eq!(row[0], (i + 1).to_string());
        let wall: u64 = row[10].parse().unwrap();
        assert!(wall > last_wall);
        last_wall = wall;
        if row[1] == "SAM" {
            assert!(!row[4].is_empty() && !row[5].is_empty());
        } else {
            assert!(row[5].is_empty() && row[6].is_empty());
        }
    }

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("s0.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["iterations"], 300);
    assert_eq!(summary["config"]["schedule"]["segment_len"], 50);
    assert_eq!(summary["seed"], 0);
    assert!(summary["pct_sam"].as_f64().unwrap() < 100.0);
}

#[test]
fn divergence_keeps_last_good_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_moons(Variant::Sam, 500);
    cfg.optimizer.lr = LearningRate::Constant(1e300);
    cfg.output.checkpoint = Some(dir.path().join("last.ckpt"));
    cfg.output.telemetry_csv = Some(dir.path().join("t.csv"));
    let run = train(&cfg).unwrap();
    let s = &run.summary;
    assert!(!s.complete);
    assert!(s.error.as_deref().unwrap().contains("iteration"));
    assert!(s.iterations < 500);
    assert_eq!(run.telemetry.len() as u64, s.iterations);

    let ckpt = read_checkpoint(fs::File::open(dir.path().join("last.ckpt")).unwrap()).unwrap();
    assert_eq!(ckpt.params, run.params);
    assert!(ckpt.params.is_finite());
    let rows = fs::read_to_string(dir.path().join("t.csv")).unwrap().lines().count();
    assert_eq!(rows as u64, s.iterations + 1);
}

#[test]
fn config_file_paths_resolve_next_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(
        &path,
        r#"
        seed = 5
        iterations = 50

        [objective]
        kind = "logistic"
        l2_lambda = 0.001
        [objective.data]
        n_train = 200
        n_test = 100

        [optimizer]
        variant = "sam_k(5)"

        [output]
        summary_json = "out/summary.json"
        "#,
    )
    .unwrap();
    fs::create_dir(dir.path().join("out")).unwrap();
    let cfg = RunConfig::load(&path).unwrap();
    assert!(matches!(cfg.objective, ObjectiveConfig::Logistic { .. }));
    let s = train(&cfg).unwrap().summary;
    assert_eq!(s.pct_sam, 20.0);
    assert!(dir.path().join("out/summary.json").exists());
    assert!(s.test_accuracy.unwrap() > 70.0);
}

#[test]
fn two_well_run_reports_its_endpoint() {
    let cfg = RunConfig::from_toml_str(
        r#"
        iterations = 3000
        [objective]
        kind = "two_well"
        init = 1.0
        [optimizer]
        variant = "sam"
        lr = 0.01
        rho = 0.3
        "#,
    )
    .unwrap();
    let s = train(&cfg).unwrap().summary;
    let w = s.final_point.unwrap()[0];
    assert!((w - 2.0).abs() < 0.1, "ended at {w}");
    assert!(s.test_accuracy.is_none());
}
