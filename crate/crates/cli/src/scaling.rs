//! Scaling study: chains over a grid of horizons, per-sample geometry and
//! cross-chain aggregation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use trapwalk_core::geometry::{ball_covering_deficit, crossing_decomposition, truly_open_cluster};
use trapwalk_core::mcmc::{run_chain_observed, sample_obstacles_given_path, ChainDiagnostics};
use trapwalk_core::stats::{combine, mean_err_correlated, power_law_fit, LineFit, MeanErr};
use trapwalk_core::{ball_points, BallSpec, Point, ScalingConstants, WalkPath};

use crate::config::ExperimentConfig;
use crate::error::{io_err, CliError, CliResult};

/// Aggregated observables at one horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub rho_n: f64,
    pub optimal_radius: f64,
    pub samples: usize,
    pub range: MeanErr,
    pub boundary: MeanErr,
    pub covering_radius: MeanErr,
    /// `(fraction of ρ_N, missed fraction of the ball)`.
    pub covering_deficit: Vec<(f64, MeanErr)>,
    pub crossings: MeanErr,
    /// `|T|` relative to `|B(center, ρ_N)|`, when environments are materialized.
    pub truly_open: Option<MeanErr>,
    /// Counts of `|center| / ρ_N` over retained samples, in bins of width
    /// `1 / CENTER_BINS` on `[0, 1)`, plus one overflow bin.
    pub center_histogram: Vec<u64>,
    pub tau_max: f64,
    /// Largest deviation of a chain's mean range from the pooled mean, in
    /// units of that chain's error.
    pub cross_chain_z: f64,
    pub flagged: bool,
    pub flag_reason: String,
}

impl ScalingRow {
    pub fn covering_fraction(&self, fraction: f64) -> Option<MeanErr> {
        self.covering_deficit
            .iter()
            .find(|(f, _)| (f - fraction).abs() < 1e-12)
            .map(|(_, d)| MeanErr { mean: 1.0 - d.mean, err: d.err })
    }
}

pub const CENTER_BINS: usize = 10;

/// Cross-chain z above which a row is flagged.
pub const CROSS_CHAIN_Z_LIMIT: f64 = 4.0;

struct ChainOutcome {
    diagnostics: ChainDiagnostics,
    boundary: Vec<f64>,
    covering_radius: Vec<f64>,
    deficits: Vec<Vec<f64>>,
    crossings: Vec<f64>,
    centers: Vec<u64>,
    truly_open: Option<f64>,
}

/// Chain stream for grid entry `gi` and chain `chain`.
pub fn chain_stream(gi: usize, chain: usize) -> u64 {
    ((gi as u64) << 32) | chain as u64
}

fn run_one(cfg: &ExperimentConfig, gi: usize, chain: usize) -> CliResult<ChainOutcome> {
    let n = cfg.n_grid[gi];
    let params = cfg.model.params(n)?;
    let schedule = cfg.schedule(n)?;
    let constants = ScalingConstants::new(cfg.model.d, cfg.model.p)?;
    let rho = constants.rho_n(n as f64);
    let mut boundary = Vec::new();
    let mut covering_radius = Vec::new();
    let mut deficits = vec![Vec::new(); cfg.covering_fractions.len()];
    let mut crossings = Vec::new();
    let mut centers = vec![0u64; CENTER_BINS + 1];
    let mut failure = None;
    let run = run_chain_observed(&params, &schedule, chain_stream(gi, chain), |path, s| {
        boundary.push(s.boundary_size as f64);
        covering_radius.push(s.covering_radius);
        let origin = Point::origin(s.center.dim()).expect("valid dimension");
        centers[((s.center.dist(&origin) / rho * CENTER_BINS as f64) as usize).min(CENTER_BINS)] += 1;
        let range = path.range_set();
        for (i, f) in cfg.covering_fractions.iter().enumerate() {
            match ball_covering_deficit(&range, s.center, f * rho) {
                Ok((_, frac)) => deficits[i].push(frac),
                Err(e) => failure = Some(e),
            }
        }
        match crossing_decomposition(path, s.center, cfg.crossings.0 * rho, cfg.crossings.1 * rho) {
            Ok(c) => crossings.push(c.k as f64),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let truly_open = match &cfg.truly_open {
        None => None,
        Some(to) => {
            let path: &WalkPath = run.final_state.path();
            let s = run.samples.last().ok_or_else(|| CliError::Config("no retained samples".into()))?;
            let window_r = rho.max(s.covering_radius) + to.t_surv as f64 + 1.0;
            let window = ball_points(&BallSpec::new(s.center, window_r)?);
            let env_params = params.with_seed(params.seed ^ chain_stream(gi, chain).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let env = sample_obstacles_given_path(path, &env_params, window)?;
            let confinement = BallSpec::new(s.center, rho)?;
            let cluster = truly_open_cluster(&env, to, &confinement)?;
            Some(cluster.len() as f64 / ball_points(&confinement).len().max(1) as f64)
        }
    };
    Ok(ChainOutcome { diagnostics: run.diagnostics, boundary, covering_radius, deficits, crossings, centers, truly_open })
}

/// Pooled estimate; the error is the larger of the inverse-variance error
/// and the spread of the chain means.
fn pool(per_chain: &[MeanErr]) -> MeanErr {
    let c = combine(per_chain);
    let k = per_chain.len() as f64;
    let m = per_chain.iter().map(|e| e.mean).sum::<f64>() / k;
    let spread = if per_chain.len() > 1 {
        (per_chain.iter().map(|e| (e.mean - m).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        0.0
    };
    MeanErr { mean: c.mean, err: c.err.max(spread) }
}

fn per_chain(outcomes: &[ChainOutcome], pick: impl Fn(&ChainOutcome) -> &[f64]) -> MeanErr {
    let v: Vec<MeanErr> = outcomes.iter().map(|o| mean_err_correlated(pick(o)).0).collect();
    pool(&v)
}

fn aggregate(cfg: &ExperimentConfig, n: usize, outcomes: &[ChainOutcome]) -> CliResult<ScalingRow> {
    let constants = ScalingConstants::new(cfg.model.d, cfg.model.p)?;
    let ranges: Vec<MeanErr> = outcomes.iter().map(|o| o.diagnostics.range_mean).collect();
    let range = pool(&ranges);
    let cross_chain_z = ranges
        .iter()
        .map(|e| if e.err > 0.0 { (e.mean - range.mean).abs() / e.err } else { 0.0 })
        .fold(0.0, f64::max);
    let tau_max = outcomes.iter().map(|o| o.diagnostics.tau_range).fold(0.0, f64::max);
    let mut reasons = Vec::new();
    let unmixed = outcomes.iter().filter(|o| o.diagnostics.flagged).count();
    if unmixed > 0 {
        reasons.push(format!("{unmixed} chain(s) with tau > sweeps/50"));
    }
    if cross_chain_z > CROSS_CHAIN_Z_LIMIT {
        reasons.push(format!("cross-chain z = {cross_chain_z:.2}"));
    }
    let covering_deficit = cfg
        .covering_fractions
        .iter()
        .enumerate()
        .map(|(i, f)| (*f, per_chain(outcomes, |o| &o.deficits[i])))
        .collect();
    let truly_open = if outcomes.iter().all(|o| o.truly_open.is_some()) && cfg.truly_open.is_some() {
        let v: Vec<f64> = outcomes.iter().filter_map(|o| o.truly_open).collect();
        Some(trapwalk_core::stats::mean_err(&v))
    } else {
        None
    };
    Ok(ScalingRow {
        n,
        rho_n: constants.rho_n(n as f64),
        optimal_radius: constants.optimal_radius(n as f64),
        samples: outcomes.iter().map(|o| o.boundary.len()).sum(),
        range,
        boundary: per_chain(outcomes, |o| &o.boundary),
        covering_radius: per_chain(outcomes, |o| &o.covering_radius),
        covering_deficit,
        crossings: per_chain(outcomes, |o| &o.crossings),
        truly_open,
        center_histogram: (0..=CENTER_BINS).map(|b| outcomes.iter().map(|o| o.centers[b]).sum()).collect(),
        tau_max,
        cross_chain_z,
        flagged: !reasons.is_empty(),
        flag_reason: reasons.join("; "),
    })
}

/// Runs every `(N, chain)` task on the rayon pool and folds the results in
/// `(N, chain)` order.
pub fn run_scaling_experiment(cfg: &ExperimentConfig) -> CliResult<Vec<ScalingRow>> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> =
        (0..cfg.n_grid.len()).flat_map(|gi| (0..cfg.chains).map(move |c| (gi, c))).collect();
    let results: Vec<CliResult<ChainOutcome>> = tasks.par_iter().map(|&(gi, c)| run_one(cfg, gi, c)).collect();
    let mut results = results.into_iter();
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let outcomes = results.by_ref().take(cfg.chains).collect::<CliResult<Vec<_>>>()?;
        rows.push(aggregate(cfg, n, &outcomes)?);
    }
    Ok(rows)
}

const CONFIG_MARKER: &str = "# config (toml):";

/// Comment block embedding the configuration; chain `c` at grid index `g`
/// uses stream `g << 32 | c` of the master seed.
pub fn config_header(cfg: &ExperimentConfig) -> CliResult<String> {
    let mut out = String::from("# trapwalk scaling\n# chain streams: (grid_index << 32) | chain\n");
    out += CONFIG_MARKER;
    out.push('\n');
    for line in cfg.to_toml()?.lines() {
        out += "#   ";
        out += line;
        out.push('\n');
    }
    Ok(out)
}

/// Recovers the configuration embedded by [`config_header`].
pub fn config_from_header(text: &str) -> CliResult<ExperimentConfig> {
    let mut lines = text.lines().skip_while(|l| *l != CONFIG_MARKER);
    if lines.next().is_none() {
        return Err(CliError::Config("no embedded config found".into()));
    }
    let body: String = lines.map_while(|l| l.strip_prefix("#   ")).fold(String::new(), |mut s, l| {
        s += l;
        s.push('\n');
        s
    });
    ExperimentConfig::from_toml(&body)
}

pub fn rows_to_csv(cfg: &ExperimentConfig, rows: &[ScalingRow]) -> CliResult<String> {
    let mut out = config_header(cfg)?;
    let mut head = String::from(
        "N,rho_N,optimal_radius,samples,range_mean,range_err,boundary_mean,boundary_err,covering_radius_mean,covering_radius_err",
    );
    for f in &cfg.covering_fractions {
        let _ = write!(head, ",deficit_{f}_mean,deficit_{f}_err");
    }
    head += ",crossings_mean,crossings_err,truly_open_mean,truly_open_err,tau_max,cross_chain_z,flagged";
    out += &head;
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.rho_n,
            r.optimal_radius,
            r.samples,
            r.range.mean,
            r.range.err,
            r.boundary.mean,
            r.boundary.err,
            r.covering_radius.mean,
            r.covering_radius.err
        );
        for (_, d) in &r.covering_deficit {
            let _ = write!(out, ",{},{}", d.mean, d.err);
        }
        let (tm, te) = r.truly_open.map_or((String::new(), String::new()), |t| (t.mean.to_string(), t.err.to_string()));
        let _ = writeln!(
            out,
            ",{},{},{},{},{},{},{}",
            r.crossings.mean, r.crossings.err, tm, te, r.tau_max, r.cross_chain_z, r.flagged
        );
    }
    Ok(out)
}

/// Empirical-center histograms, one row per horizon.
pub fn centers_to_csv(cfg: &ExperimentConfig, rows: &[ScalingRow]) -> CliResult<String> {
    let mut out = config_header(cfg)?;
    out += "N";
    for b in 0..CENTER_BINS {
        let _ = write!(out, ",r{:.1}_{:.1}", b as f64 / CENTER_BINS as f64, (b + 1) as f64 / CENTER_BINS as f64);
    }
    out += ",r1.0_inf\n";
    for r in rows {
        let counts: Vec<String> = r.center_histogram.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "{},{}", r.n, counts.join(","));
    }
    Ok(out)
}

/// Least-squares slope of `log y` against `log x` over unflagged rows.
pub fn fit_rows(rows: &[ScalingRow], x: impl Fn(&ScalingRow) -> f64, y: impl Fn(&ScalingRow) -> MeanErr) -> Option<LineFit> {
    let kept: Vec<&ScalingRow> = rows.iter().filter(|r| !r.flagged).collect();
    let xs: Vec<f64> = kept.iter().map(|r| x(r)).collect();
    let ys: Vec<MeanErr> = kept.iter().map(|r| y(r)).collect();
    power_law_fit(&xs, &ys)
}

pub fn range_slope(rows: &[ScalingRow]) -> Option<LineFit> {
    fit_rows(rows, |r| r.n as f64, |r| r.range)
}

/// Writes `scaling.csv`, `centers.csv` and, when configured, the plots into
/// the output directory; returns the written paths.
pub fn write_outputs(cfg: &ExperimentConfig, rows: &[ScalingRow], dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv = dir.join("scaling.csv");
    std::fs::write(&csv, rows_to_csv(cfg, rows)?).map_err(io_err(&csv))?;
    let centers = dir.join("centers.csv");
    std::fs::write(&centers, centers_to_csv(cfg, rows)?).map_err(io_err(&centers))?;
    let mut written = vec![csv, centers];
    if cfg.emit_plots && rows.len() >= 2 {
        written.extend(crate::plots::emit_plots(rows, cfg.model.d, dir)?);
    }
    Ok(written)
}
