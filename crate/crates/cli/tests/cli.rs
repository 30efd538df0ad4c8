use std::process::Command;

use trapwalk_cli::checks::{gamma_monotone, scaling_oracle_row};
use trapwalk_cli::scaling::{config_from_header, rows_to_csv};
use trapwalk_cli::{run_scaling_experiment, ExperimentConfig};
use trapwalk_core::geometry::gamma;
use trapwalk_core::mcmc::BurnIn;
use trapwalk_core::TrulyOpenConfig;

fn trapwalk(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_trapwalk")).args(args).output().expect("spawn trapwalk")
}

#[test]
fn sign_flipped_gamma_is_caught() {
    fn flipped(k: u64, l: f64, d: usize, c0: f64) -> f64 {
        -gamma(k, l, d, c0)
    }
    fn off_by_power(k: u64, l: f64, d: usize, c0: f64) -> f64 {
        gamma(k, l, d, c0) / (1.0 + k as f64).powi(2)
    }
    assert!(gamma_monotone(gamma).passed);
    assert!(!gamma_monotone(flipped).passed);
    assert!(!gamma_monotone(off_by_power).passed);
}

#[test]
fn single_small_horizon_row_matches_exact() {
    let r = scaling_oracle_row(10, 3);
    assert!(r.passed, "{}", r.line());
}

#[test]
fn csv_header_regenerates_the_run() {
    let cfg = ExperimentConfig {
        n_grid: vec![8, 16],
        sweeps: 300,
        burn_in: BurnIn::Sweeps { sweeps: 30 },
        thin: 3,
        ..Default::default()
    };
    let csv = rows_to_csv(&cfg, &run_scaling_experiment(&cfg).unwrap()).unwrap();
    let again = config_from_header(&csv).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(rows_to_csv(&again, &run_scaling_experiment(&again).unwrap()).unwrap(), csv);
}

#[test]
fn exact_subcommand_prints_rows() {
    let out = trapwalk(&["exact", "--n", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[3].starts_with("2,0.5,2,1.5625"), "{}", rows[3]);
}

#[test]
fn sample_then_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        truly_open: Some(TrulyOpenConfig::new(4, 0.01).unwrap()),
        sweeps: 200,
        burn_in: BurnIn::Sweeps { sweeps: 20 },
        thin: 10,
        ..Default::default()
    };
    let cfg_path = dir.path().join("cfg.toml");
    std::fs::write(&cfg_path, cfg.to_toml().unwrap()).unwrap();
    let out_dir = dir.path().join("out");
    let common = ["--config", cfg_path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];
    let out = trapwalk(&[&common[..], &["sample", "--n", "100"]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("samples_N100_chain0.csv")).unwrap();
    assert!(csv.starts_with("# "));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 21);
    let ckpt = out_dir.join("chain_N100_chain1.ckpt");
    let out = trapwalk(&[&common[..], &["geometry", "--checkpoint", ckpt.to_str().unwrap()]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n"], 100);
    assert!(report["range_size"].as_u64().unwrap() >= 2);
    assert!(report["truly_open_cluster_size"].is_u64());
}

#[test]
fn spectral_subcommands() {
    let out = trapwalk(&["spectral", "spectrum", "--radius", "5", "--k", "3"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().lines().count() >= 4);
    let out = trapwalk(&["spectral", "faber-krahn", "--count", "2"]);
    assert!(out.status.success());
    let out = trapwalk(&["spectral", "green", "--radius", "10", "--u", "1,0", "--x", "0,0", "--r", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    let mut cfg = ExperimentConfig::default().to_toml().unwrap();
    cfg = cfg.replace("chains = 2", "chains = 1");
    std::fs::write(&p, cfg).unwrap();
    let out = trapwalk(&["--config", p.to_str().unwrap(), "exact", "--n", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("chains"));
}
