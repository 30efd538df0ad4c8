//! The twelve acceptance criteria, run sequentially so runtime budgets are
//! measured without contention. One PASS/FAIL line per criterion.

use std::process::Command;
use std::time::Instant;

use trapwalk_cli::checks::{self, run_check, CheckResult};
use trapwalk_cli::ExperimentConfig;

const SEED: u64 = 1;

/// Stated value of the unit-volume disc eigenvalue.
const LAMBDA1_STATED: f64 = 4.541649;

fn validation_suite_quick() -> CheckResult {
    run_check("validate --level quick", Some(12), Some(300.0), |pr| {
        let dir = tempfile::tempdir().expect("tempdir");
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_trapwalk"))
            .args(["validate", "--level", "quick", "--seed", &SEED.to_string(), "--out"])
            .arg(dir.path())
            .output()
            .expect("spawn trapwalk");
        pr.set("wall_seconds", start.elapsed().as_secs_f64());
        let stdout = String::from_utf8_lossy(&out.stdout);
        let failed: Vec<&str> = stdout.lines().filter(|l| l.starts_with("FAIL")).collect();
        pr.set("failed_checks", failed.len() as f64);
        if !failed.is_empty() {
            pr.note(failed.join(" | "));
        }
        Ok(out.status.success() && dir.path().join("validation_quick.json").exists())
    })
}

#[test]
fn acceptance_criteria() {
    let scaling = {
        let dir = tempfile::tempdir().expect("tempdir");
        let mut cfg = ExperimentConfig::default();
        cfg.model.seed = SEED;
        cfg.output_dir = dir.path().to_path_buf();
        cfg
    };
    let runs: Vec<Box<dyn FnOnce() -> CheckResult>> = vec![
        Box::new(checks::oracle_exactness),
        Box::new(|| checks::sampler_path_law(6, 10_000_000, SEED)),
        Box::new(|| checks::sampler_moment(10, 4, 200_000, SEED)),
        Box::new(|| checks::eigen_rate(&[10.0, 15.0, 20.0, 30.0, 40.0])),
        Box::new(|| checks::continuum_constants(LAMBDA1_STATED)),
        Box::new(|| checks::parity(15.0)),
        Box::new(|| checks::faber_krahn(50, SEED)),
        Box::new(|| checks::green_function(20, 100_000, SEED)),
        Box::new(|| checks::heat_kernel_laws(20, 400, SEED)),
        Box::new(move || checks::scaling_trend(&scaling)),
        Box::new(|| checks::skeleton_invariants(1000, SEED)),
        Box::new(validation_suite_quick),
    ];
    let mut failed = Vec::new();
    for (i, run) in runs.into_iter().enumerate() {
        let r = run();
        let measured: Vec<String> = r.measured.iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
        println!(
            "criterion {:>2}: {} {} ({:.1}s) {}{}",
            i + 1,
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.seconds,
            measured.join(" "),
            if r.detail.is_empty() { String::new() } else { format!(" [{}]", r.detail) }
        );
        if !r.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
