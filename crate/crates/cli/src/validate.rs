//! Validation suite: every module invariant plus the acceptance criteria,
//! at a quick or full level, reported as JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};
use trapwalk_core::geometry::gamma;

use crate::checks::{self, CheckResult};
use crate::config::ExperimentConfig;
use crate::error::{io_err, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    /// Domains up to radius 20 and horizons up to 10.
    Quick,
    /// Stated grids, including the scaling study.
    Full,
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub level: Level,
    pub seed: u64,
    /// Γ under test; swapped in mutation tests.
    pub gamma: fn(u64, f64, usize, f64) -> f64,
    /// Reference for the unit-volume disc eigenvalue.
    pub lambda1_reference: f64,
    /// Scaling study used at the full level.
    pub scaling: ExperimentConfig,
}

impl SuiteOptions {
    pub fn new(level: Level, seed: u64) -> Self {
        let mut scaling = ExperimentConfig::default();
        scaling.model.seed = seed;
        SuiteOptions { level, seed, gamma, lambda1_reference: checks::lambda1_unit_disc(), scaling }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub level: Level,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub seconds: f64,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> CliResult<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json()?).map_err(io_err(path))
    }
}

/// Runs every check in order, calling `progress` after each.
pub fn run_validation_suite(opts: &SuiteOptions, mut progress: impl FnMut(&CheckResult)) -> ValidationReport {
    let start = std::time::Instant::now();
    let s = opts.seed;
    let full = opts.level == Level::Full;
    let mut tasks: Vec<Box<dyn FnOnce() -> CheckResult + '_>> = vec![
        Box::new(checks::lattice_examples),
        Box::new(checks::survival_examples),
        Box::new(move || checks::chain_bookkeeping(if full { 1_000_000 } else { 200_000 }, s)),
        Box::new(move || checks::gamma_monotone(opts.gamma)),
        Box::new(move || checks::truly_open_monotone(if full { 500 } else { 100 }, s)),
        Box::new(move || checks::crossing_invariants(if full { 2000 } else { 300 }, s)),
        Box::new(move || checks::rw1_check(if full { &[16.0, 32.0] } else { &[16.0] }, 5, s)),
        Box::new(move || checks::eigen_bounds_check(if full { &[12.0, 16.0, 20.0, 30.0] } else { &[12.0, 16.0, 20.0] }, s)),
        Box::new(move || checks::spectral_consistency(s)),
        Box::new(checks::survival_bound_check),
        Box::new(checks::oracle_exactness),
        Box::new(move || checks::sampler_path_law(6, 10_000_000, s)),
        Box::new(move || checks::sampler_moment(10, 4, 200_000, s)),
        Box::new(move || checks::eigen_rate(if full { &[10.0, 15.0, 20.0, 30.0, 40.0] } else { &[10.0, 15.0, 20.0] })),
        Box::new(move || checks::continuum_constants(opts.lambda1_reference)),
        Box::new(|| checks::parity(15.0)),
        Box::new(move || checks::faber_krahn(50, s)),
        Box::new(move || checks::green_function(20, 100_000, s)),
        Box::new(move || checks::heat_kernel_laws(20, 400, s)),
        Box::new(move || checks::scaling_oracle_row(10, s)),
        Box::new(move || checks::skeleton_invariants(1000, s)),
    ];
    if full {
        tasks.push(Box::new(|| checks::scaling_trend(&opts.scaling)));
    }
    let mut results = Vec::with_capacity(tasks.len());
    for t in tasks {
        let r = t();
        progress(&r);
        results.push(r);
    }
    ValidationReport {
        level: opts.level,
        seed: s,
        passed: results.iter().all(|r| r.passed),
        checks: results,
        seconds: start.elapsed().as_secs_f64(),
    }
}
