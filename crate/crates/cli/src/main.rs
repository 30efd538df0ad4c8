use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;
use trapwalk_core::exact::{exact_partition_function, ExactResult};
use trapwalk_core::geometry::{
    ball_covering_deficit, boundary_size, crossing_decomposition, skeletal_set, truly_open_cluster,
};
use trapwalk_core::lattice::empirical_center;
use trapwalk_core::mcmc::{run_chain, sample_obstacles_given_path, write_samples_csv};
use trapwalk_core::spectral::{faber_krahn_gap, green_visits};
use trapwalk_core::{
    ball_points, dirichlet_spectrum, sample_environment, BallSpec, ChainState, Environment, LatticeSet, Point,
    ScalingConstants,
};
use trapwalk_cli::error::CliError;
use trapwalk_cli::scaling::{config_header, run_scaling_experiment, write_outputs};
use trapwalk_cli::{run_validation_suite, CliResult, ExperimentConfig, Level, SuiteOptions};

#[derive(Parser, Debug)]
#[command(name = "trapwalk", version, about = "Random walk among Bernoulli obstacles: oracles, sampling, spectra and scaling")]
struct Cli {
    /// Experiment config (TOML). Defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Validation level.
    #[arg(long, global = true, value_enum, default_value = "quick")]
    level: Level,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Exact partition functions `Z_0 .. Z_N` by enumeration.
    Exact {
        #[arg(long)]
        n: usize,
    },
    /// Runs the configured chains at one horizon; writes samples and final checkpoints.
    Sample {
        #[arg(long)]
        n: usize,
    },
    #[command(subcommand)]
    Spectral(SpectralCmd),
    /// Geometry of a stored chain state: range, crossings, skeleton and truly-open cluster.
    Geometry {
        /// Checkpoint written by `sample`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Full scaling study over the config grid.
    Scaling,
    /// Runs the validation suite; exit code 1 on any failure.
    Validate,
}

#[derive(Subcommand, Debug)]
enum SpectralCmd {
    /// Lowest eigenvalues of the killed walk on a ball or a stored domain.
    Spectrum {
        #[arg(long, default_value_t = 10.0)]
        radius: f64,
        /// Lattice-set file; replaces the ball.
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Faber–Krahn gap on random animals between two balls.
    FaberKrahn {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 10.0)]
        inner: f64,
        #[arg(long, default_value_t = 15.0)]
        outer: f64,
    },
    /// Expected visits to `B(x, r)` before killing, in a sampled environment
    /// inside `B(0, radius)` closed off by an obstacle ring.
    Green {
        #[arg(long, default_value_t = 12.0)]
        radius: f64,
        #[arg(long, value_parser = parse_point, default_value = "0,0")]
        u: Point,
        #[arg(long, value_parser = parse_point, default_value = "0,0")]
        x: Point,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
    },
}

fn parse_point(s: &str) -> Result<Point, String> {
    let coords: Vec<i32> = s.split(',').map(|c| c.trim().parse::<i32>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    Point::new(&coords).map_err(|e| e.to_string())
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })
}

fn load_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.model.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn ball(r: f64) -> CliResult<LatticeSet> {
    Ok(ball_points(&BallSpec::new(Point::origin(2)?, r)?))
}

fn exact(cfg: &ExperimentConfig, n: usize) -> CliResult<()> {
    println!("{}", ExactResult::CSV_HEADER);
    for k in 0..=n {
        println!("{}", exact_partition_function(&cfg.model.params(k)?)?.csv_row());
    }
    Ok(())
}

fn sample(cfg: &ExperimentConfig, n: usize) -> CliResult<()> {
    let params = cfg.model.params(n)?;
    let schedule = cfg.schedule(n)?;
    let header = config_header(cfg)?;
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let runs: Vec<_> = (0..cfg.chains as u64).into_par_iter().map(|c| run_chain(&params, &schedule, c)).collect();
    for (c, run) in runs.into_iter().enumerate() {
        let run = run?;
        let mut csv = Vec::new();
        let comment = format!("{header}N = {n}, chain {c}");
        write_samples_csv(&mut csv, &comment, &run.samples)
            .map_err(|source| CliError::Io { path: dir.clone(), source })?;
        write(&dir.join(format!("samples_N{n}_chain{c}.csv")), &String::from_utf8_lossy(&csv))?;
        write(&dir.join(format!("chain_N{n}_chain{c}.ckpt")), &run.final_state.checkpoint())?;
        let d = &run.diagnostics;
        println!(
            "chain {c}: E|range| = {:.3} ± {:.3}, tau = {:.2} sweeps, burn-in {} sweeps{}",
            d.range_mean.mean,
            d.range_mean.err,
            d.tau_range,
            d.burn_in_sweeps,
            if d.flagged { " [flagged]" } else { "" }
        );
    }
    Ok(())
}

fn spectral(cfg: &ExperimentConfig, cmd: &SpectralCmd) -> CliResult<()> {
    match cmd {
        SpectralCmd::Spectrum { radius, domain, k } => {
            let d = match domain {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.clone(), source })?;
                    LatticeSet::from_text(&text)?
                }
                None => ball(*radius)?,
            };
            print!("{}", dirichlet_spectrum(&d, *k)?.to_csv());
        }
        SpectralCmd::FaberKrahn { count, inner, outer } => {
            println!("sites,hull_volume,lambda_discrete,lambda_ball_same_volume,gap");
            for t in trapwalk_cli::checks::random_animals(*count, *inner, *outer, cfg.model.seed) {
                let fk = faber_krahn_gap(&t)?;
                println!(
                    "{},{},{:.12e},{:.12e},{:.6e}",
                    t.len(),
                    fk.hull_volume,
                    fk.lambda_discrete,
                    fk.lambda_ball_same_volume,
                    fk.gap
                );
            }
        }
        SpectralCmd::Green { radius, u, x, r } => {
            let window = ball(*radius)?;
            let sampled = sample_environment(&cfg.model.params(0)?, window.clone())?;
            let ring = window.filter(|q| q.dist(&Point::origin(2).expect("d = 2")) > radius - 1.0);
            let env = Environment::new(window, sampled.obstacles().union(&ring)?)?;
            print!("{}", green_visits(&env, *u, *x, *r)?.to_csv());
        }
    }
    Ok(())
}

fn geometry(cfg: &ExperimentConfig, checkpoint: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(checkpoint).map_err(|source| CliError::Io { path: checkpoint.into(), source })?;
    let state = ChainState::from_checkpoint(&text)?;
    let path = state.path();
    let params = *state.params();
    let range = path.range_set();
    let (center, cover) = empirical_center(&range)?;
    let rho = ScalingConstants::new(params.d, params.p)?.rho_n(params.n as f64);
    let (a, b) = cfg.crossings;
    let cd = crossing_decomposition(path, center, a * rho, b * rho)?;
    let deficits: Vec<_> = cfg
        .covering_fractions
        .iter()
        .map(|f| ball_covering_deficit(&range, center, f * rho).map(|(m, frac)| json!({"fraction_of_rho": f, "missed": m, "missed_fraction": frac})))
        .collect::<Result<_, _>>()?;
    // obstacles are drawn given the path; the window leaves room for the
    // l1-balls of the truly-open test
    let reach = cfg.truly_open.map_or(1.0, |c| c.t_surv as f64 + 1.0);
    let window = ball_points(&BallSpec::new(center, cover + reach + 2.0)?);
    let env = sample_obstacles_given_path(path, &params, window)?;
    let cluster = match cfg.truly_open {
        Some(c) => Some(truly_open_cluster(&env, &c, &BallSpec::new(center, cover)?)?.len()),
        None => None,
    };
    // skeleton anchored at the obstacle nearest the center
    let anchor = env.obstacles().iter().min_by_key(|y| (y.dist2(&center), **y)).copied();
    let skeleton = match anchor {
        Some(a) => {
            let sk = skeletal_set(&env, &a, cover.max(1.0))?;
            json!({"anchor": a.coords(), "l": sk.radius_l, "points": sk.points.len(), "inner_points": sk.inner_points.len()})
        }
        None => serde_json::Value::Null,
    };
    let report = json!({
        "n": params.n,
        "range_size": range.len(),
        "boundary_size": boundary_size(&range)?,
        "center": center.coords(),
        "covering_radius": cover,
        "rho_n": rho,
        "covering_deficits": deficits,
        "crossings": {"inner": a * rho, "outer": b * rho, "k": cd.k, "durations": cd.durations},
        "truly_open_cluster_size": cluster,
        "skeleton": skeleton,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn scaling(cfg: &ExperimentConfig) -> CliResult<()> {
    let rows = run_scaling_experiment(cfg)?;
    for r in &rows {
        println!(
            "N = {:>7}: E|range| = {:.1} ± {:.1}, tau = {:.1}{}",
            r.n,
            r.range.mean,
            r.range.err,
            r.tau_max,
            if r.flagged { format!(" [flagged: {}]", r.flag_reason) } else { String::new() }
        );
    }
    for p in write_outputs(cfg, &rows, &cfg.output_dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn validate(cfg: &ExperimentConfig, level: Level) -> CliResult<bool> {
    let mut opts = SuiteOptions::new(level, cfg.model.seed);
    opts.scaling = cfg.clone();
    let report = run_validation_suite(&opts, |c| println!("{}", c.line()));
    create_dir(&cfg.output_dir)?;
    let path = cfg.output_dir.join(format!("validation_{}.json", if level == Level::Quick { "quick" } else { "full" }));
    report.write(&path)?;
    println!(
        "{} checks, {} failed, {:.1}s; report at {}",
        report.checks.len(),
        report.failures().count(),
        report.seconds,
        path.display()
    );
    Ok(report.passed)
}

fn run(cli: &Cli) -> CliResult<bool> {
    let cfg = load_config(cli)?;
    match &cli.cmd {
        Cmd::Exact { n } => exact(&cfg, *n)?,
        Cmd::Sample { n } => sample(&cfg, *n)?,
        Cmd::Spectral(c) => spectral(&cfg, c)?,
        Cmd::Geometry { checkpoint } => geometry(&cfg, checkpoint)?,
        Cmd::Scaling => scaling(&cfg)?,
        Cmd::Validate => return validate(&cfg, cli.level),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
