//! Individual validation checks. Each returns a [`CheckResult`] carrying
//! its measured constants; errors raised inside a check become failures.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use trapwalk_core::env::survival_dp;
use trapwalk_core::exact::{exact_path_law, path_index, range_size_histogram};
use trapwalk_core::geometry::{
    balanced_radius, crossing_decomposition, is_truly_open, rw1_ratio, skeletal_set, TrulyOpenConfig,
};
use trapwalk_core::lattice::{empirical_center, grow_animal, is_connected};
use trapwalk_core::mcmc::{sample_obstacles_given_path, ChainSchedule, InitialPath};
use trapwalk_core::spectral::{
    continuum_ball_eigenvalue, eigen_bounds_measurement, faber_krahn_gap, green_visits, heat_kernel,
    log_survival_lower_bound, log_survival_lower_bound_at_radius, parity_spectrum_check,
};
use trapwalk_core::{
    ball_points, dirichlet_spectrum, exact_mu_expectation, exact_partition_function, external_boundary, run_chain,
    BallSpec, ChainState, Environment, LatticeSet, ModelParams, MoveMix, Point, ScalingConstants, WalkPath,
};

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::scaling::{range_slope, run_scaling_experiment};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Acceptance criterion number, when the check implements one.
    pub criterion: Option<u32>,
    pub passed: bool,
    pub measured: BTreeMap<String, f64>,
    pub detail: String,
    pub seconds: f64,
}

impl CheckResult {
    pub fn line(&self) -> String {
        let tag = self.criterion.map_or(String::new(), |c| format!("[criterion {c:>2}] "));
        format!(
            "{} {tag}{} ({:.1}s){}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            if self.detail.is_empty() { String::new() } else { format!(": {}", self.detail) }
        )
    }
}

/// Collects measurements and notes while a check runs.
#[derive(Default)]
pub struct Probe {
    measured: BTreeMap<String, f64>,
    notes: Vec<String>,
}

impl Probe {
    pub fn set(&mut self, key: &str, v: f64) {
        self.measured.insert(key.to_string(), v);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

/// Runs `body`, timing it. The check passes iff `body` returns `Ok(true)`
/// and, when `budget_s` is given, finishes within it.
pub fn run_check(
    name: &str,
    criterion: Option<u32>,
    budget_s: Option<f64>,
    body: impl FnOnce(&mut Probe) -> CliResult<bool>,
) -> CheckResult {
    let start = Instant::now();
    let mut probe = Probe::default();
    let outcome = body(&mut probe);
    let seconds = start.elapsed().as_secs_f64();
    let mut passed = matches!(outcome, Ok(true));
    if let Err(e) = &outcome {
        probe.note(format!("error: {e}"));
    }
    if let Some(b) = budget_s {
        if seconds > b {
            passed = false;
            probe.note(format!("runtime {seconds:.1}s exceeds {b}s"));
        }
    }
    CheckResult { name: name.to_string(), criterion, passed, measured: probe.measured, detail: probe.notes.join("; "), seconds }
}

fn ball(c: Point, r: f64) -> LatticeSet {
    ball_points(&BallSpec { center: c, radius: r })
}

fn origin() -> Point {
    Point::xy(0, 0)
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// ------------------------------------------------------------------ oracles

/// `Z_2(1/2) = 5/32` as a reduced fraction from the range histogram, and
/// `Z_0 = p`, `Z_1 = p^2`.
pub fn oracle_exactness() -> CheckResult {
    run_check("oracle_exactness", Some(1), Some(1.0), |pr| {
        let hist = range_size_histogram(2, 2, 1 << 10)?;
        // Σ hist[k] 2^{-k} / 4^2 with a common denominator
        let kmax = (hist.len() - 1) as u32;
        let num: u128 = hist.iter().enumerate().map(|(k, &c)| c as u128 * (1u128 << (kmax - k as u32))).sum();
        let den: u128 = 16 * (1u128 << kmax);
        let g = gcd(num, den);
        let (num, den) = (num / g, den / g);
        pr.set("z2_numerator", num as f64);
        pr.set("z2_denominator", den as f64);
        let z2 = exact_partition_function(&ModelParams::new(2, 0.5, 2, 0)?)?.value;
        pr.set("z2", z2);
        let mut ok = (num, den) == (5, 32) && z2 == 5.0 / 32.0;
        for p in [0.1, 0.25, 0.5, 0.9] {
            let z0 = exact_partition_function(&ModelParams::new(2, p, 0, 0)?)?.value;
            let z1 = exact_partition_function(&ModelParams::new(2, p, 1, 0)?)?.value;
            if z0 != p || (z1 - p * p).abs() > f64::EPSILON * p * p {
                ok = false;
                pr.note(format!("p={p}: Z0={z0}, Z1={z1}"));
            }
        }
        Ok(ok)
    })
}

/// Total-variation distance between the visit frequencies of a single chain
/// and the exact path law at horizon `n`.
pub fn sampler_path_law(n: usize, steps: u64, seed: u64) -> CheckResult {
    run_check("sampler_path_law", Some(2), Some(600.0), |pr| {
        let params = ModelParams::new(2, 0.5, n, seed)?;
        let law = exact_path_law(&params)?;
        let mut st = ChainState::new(params, MoveMix::default(), InitialPath::Straight, 0)?;
        let mut counts = vec![0u64; law.len()];
        for _ in 0..steps {
            st.step();
            counts[path_index(st.path().steps(), 2)] += 1;
        }
        let tv = 0.5 * law.iter().zip(&counts).map(|(q, &c)| (c as f64 / steps as f64 - q).abs()).sum::<f64>();
        pr.set("tv", tv);
        pr.set("steps", steps as f64);
        Ok(tv <= 0.02)
    })
}

/// MCMC estimate of `E|range|` against the exact value, within 3 standard
/// errors pooled over `chains` independent chains.
pub fn sampler_moment(n: usize, chains: usize, sweeps: u64, seed: u64) -> CheckResult {
    run_check("sampler_moment", Some(3), Some(300.0), |pr| {
        let params = ModelParams::new(2, 0.5, n, seed)?;
        let exact = exact_mu_expectation(&params, |w| w.range_size() as f64)?.value;
        let schedule = ChainSchedule { thin: 10, ..ChainSchedule::new(sweeps) };
        let mut means = Vec::new();
        for c in 0..chains {
            means.push(run_chain(&params, &schedule, c as u64)?.diagnostics.range_mean);
        }
        let est = trapwalk_core::stats::combine(&means);
        pr.set("exact", exact);
        pr.set("estimate", est.mean);
        pr.set("stderr", est.err);
        pr.set("z", (est.mean - exact) / est.err);
        Ok((est.mean - exact).abs() <= 3.0 * est.err)
    })
}

// ------------------------------------------------------------------ spectra

/// `|λ_disc - λ_cont| R^3` over exact balls; max/min ratio at most 3.
pub fn eigen_rate(radii: &[f64]) -> CheckResult {
    run_check("eigen_rate", Some(4), Some(120.0), |pr| {
        let mut scaled = Vec::new();
        for &r in radii {
            let disc = dirichlet_spectrum(&ball(origin(), r), 1)?.eigenvalues[0];
            let cont = continuum_ball_eigenvalue(2, r, 1)?;
            let e = (disc - cont).abs() * r.powi(3);
            pr.set(&format!("lambda1_R{r}"), disc);
            pr.set(&format!("scaled_error_R{r}"), e);
            scaled.push(e);
        }
        let max = scaled.iter().copied().fold(0.0, f64::max);
        let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        pr.set("max_over_min", max / min);
        pr.set("gamma1_fit", scaled.iter().sum::<f64>() / scaled.len() as f64);
        Ok(min > 0.0 && max / min <= 3.0)
    })
}

/// Principal eigenvalue of the unit-volume disc against `lambda1_ref`, and
/// `c(2, 1/2)` and the radius coefficient against their stated values.
pub fn continuum_constants(lambda1_ref: f64) -> CheckResult {
    run_check("continuum_constants", Some(5), None, |pr| {
        let sc = ScalingConstants::new(2, 0.5)?;
        pr.set("lambda1", sc.lambda1_continuum);
        pr.set("lambda1_reference", lambda1_ref);
        pr.set("c_dp", sc.c_dp);
        pr.set("rho_coefficient", sc.rho_coefficient);
        let l_ok = (sc.lambda1_continuum - lambda1_ref).abs() <= 1e-5;
        let c_ok = (sc.c_dp - 3.5486).abs() <= 1e-3;
        let r_ok = (sc.rho_coefficient - 1.5999).abs() <= 1e-3;
        if !l_ok {
            pr.note(format!("lambda1 {:.9} differs from {lambda1_ref} by {:.2e}", sc.lambda1_continuum, sc.lambda1_continuum - lambda1_ref));
        }
        Ok(l_ok && c_ok && r_ok)
    })
}

/// Independent value of the unit-volume disc eigenvalue: `j_{0,1}^2 π / 4`.
pub fn lambda1_unit_disc() -> f64 {
    const J01: f64 = 2.404825557695773;
    J01 * J01 * std::f64::consts::PI / 4.0
}

pub fn parity(radius: f64) -> CheckResult {
    run_check("parity_spectrum", Some(6), None, |pr| {
        let r = parity_spectrum_check(&ball(origin(), radius))?;
        pr.set("asymmetry", r.asymmetry);
        pr.set("projection_residual", r.projection_residual);
        pr.set("top_q_eigenvalue", r.top_q_eigenvalue);
        Ok(r.asymmetry <= 1e-9 && r.projection_residual <= 1e-8)
    })
}

/// Random connected animals `B(0, inner) ⊆ T ⊆ B(0, outer)`.
pub fn random_animals(count: usize, inner: f64, outer: f64, seed: u64) -> Vec<LatticeSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = ball(origin(), inner);
    let bound = ball(origin(), outer);
    let room = bound.len() - base.len();
    (0..count).map(|_| grow_animal(&base, &bound, rng.random_range(0..=room), &mut rng)).collect()
}

pub fn faber_krahn(count: usize, seed: u64) -> CheckResult {
    run_check("faber_krahn", Some(7), None, |pr| {
        let mut violations = 0;
        let mut min_gap = f64::INFINITY;
        for t in random_animals(count, 10.0, 15.0, seed) {
            if !is_connected(&t) {
                violations += 1;
                continue;
            }
            let fk = faber_krahn_gap(&t)?;
            min_gap = min_gap.min(fk.gap);
            if fk.gap < -1e-3 {
                violations += 1;
            }
        }
        pr.set("violations", violations as f64);
        pr.set("min_gap", min_gap);
        Ok(violations == 0)
    })
}

/// Environment in `B(0, 11)`: Bernoulli obstacles inside radius 10 and a
/// closed ring beyond, so every walk is eventually killed.
pub fn walled_environment(rng: &mut ChaCha8Rng, p: f64) -> CliResult<Environment> {
    let window = ball(origin(), 11.0);
    let obstacles = window.filter(|q| q.dist2(&origin()) > 100 || rng.random::<f64>() < 1.0 - p);
    Ok(Environment::new(window, obstacles)?)
}

/// Monte Carlo `G_O(u, x)`: visits to `B(x, r)` up to and including the
/// killing time. Returns `(mean, standard error)`.
pub fn green_monte_carlo(env: &Environment, u: Point, x: Point, r: f64, walks: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let dirs = 2 * u.dim() as u8;
    let inside = |q: &Point| q.dist2(&x) as f64 <= r * r;
    let obstacles = env.obstacles();
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..walks {
        let mut q = u;
        let mut count = inside(&q) as u32;
        while !obstacles.contains(&q) {
            q = q.step(rng.random_range(0..dirs));
            count += inside(&q) as u32;
        }
        let c = count as f64;
        s += c;
        s2 += c * c;
    }
    let m = s / walks as f64;
    (m, ((s2 / walks as f64 - m * m).max(0.0) / (walks as f64 - 1.0)).sqrt())
}

pub fn green_function(envs: usize, walks: usize, seed: u64) -> CheckResult {
    run_check("green_function", Some(8), None, |pr| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut max_z, mut max_res, mut fails, mut min_g) = (0.0f64, 0.0f64, 0, f64::INFINITY);
        for _ in 0..envs {
            let p = rng.random_range(0.7..0.9);
            let env = walled_environment(&mut rng, p)?;
            let u = Point::xy(rng.random_range(-4..=4), rng.random_range(-4..=4));
            let x = Point::xy(rng.random_range(-3..=3), rng.random_range(-3..=3));
            let r = rng.random_range(1.0..3.0);
            let g = green_visits(&env, u, x, r)?;
            let (m, se) = green_monte_carlo(&env, u, x, r, walks, &mut rng);
            let z = if se > 0.0 { (g.value - m).abs() / se } else if g.value == m { 0.0 } else { f64::INFINITY };
            max_z = max_z.max(z);
            max_res = max_res.max(g.residual);
            min_g = g.g.iter().copied().fold(min_g, f64::min);
            if z > 4.0 || g.residual > 1e-10 {
                fails += 1;
            }
        }
        pr.set("max_z", max_z);
        pr.set("max_residual", max_res);
        pr.set("min_g", min_g);
        pr.set("failures", fails as f64);
        Ok(fails == 0 && min_g >= -1e-12)
    })
}

/// Symmetry, Chapman–Kolmogorov and mass conservation of the killed heat
/// kernel on random animals of at most `max_size` sites.
pub fn heat_kernel_laws(domains: usize, max_size: usize, seed: u64) -> CheckResult {
    run_check("heat_kernel_laws", Some(9), None, |pr| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let single = LatticeSet::from_points(2, [origin()])?;
        let bound = ball(origin(), 40.0);
        let (mut sym, mut ck, mut mass) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..domains {
            let size = rng.random_range(2..=max_size);
            let d = grow_animal(&single, &bound, size - 1, &mut rng);
            let sites = d.to_vec();
            let pick = |rng: &mut ChaCha8Rng| sites[rng.random_range(0..sites.len())];
            let (u, v) = (pick(&mut rng), pick(&mut rng));
            let m = rng.random_range(1..20);
            let mut n = rng.random_range(1..20);
            // odd total parity makes both sides vanish identically
            if (m + n + u.l1(&v) as usize) % 2 == 1 {
                n += 1;
            }
            let ku = heat_kernel(&d, u, m + n)?;
            let kv = heat_kernel(&d, v, m + n)?;
            sym = sym.max((ku.raw(&v) - kv.raw(&u)).abs());
            mass = mass.max((ku.total_mass() + ku.exited_mass - 1.0).abs());
            let first = heat_kernel(&d, u, m)?;
            let second = heat_kernel(&d, v, n)?;
            let composed: f64 = sites.iter().map(|w| first.raw(w) * second.raw(w)).sum();
            ck = ck.max((ku.raw(&v) - composed).abs());
        }
        pr.set("max_symmetry_error", sym);
        pr.set("max_chapman_kolmogorov_error", ck);
        pr.set("max_mass_error", mass);
        Ok(sym <= 1e-10 && ck <= 1e-10 && mass <= 1e-10)
    })
}

// --------------------------------------------------------------- scaling

/// Slope of `log E|range|` against `log N` in `[0.4, 0.6]`, all rows
/// unflagged, and the covering fraction of `B(center, 0.8 ρ_N)` increasing
/// along the grid.
pub fn scaling_trend(cfg: &ExperimentConfig) -> CheckResult {
    run_check("scaling_trend", Some(10), Some(7200.0), |pr| {
        let rows = run_scaling_experiment(cfg)?;
        let mut ok = true;
        for r in &rows {
            pr.set(&format!("range_N{}", r.n), r.range.mean);
            pr.set(&format!("range_err_N{}", r.n), r.range.err);
            pr.set(&format!("tau_N{}", r.n), r.tau_max);
            pr.set(&format!("boundary_N{}", r.n), r.boundary.mean);
            pr.set(&format!("crossings_N{}", r.n), r.crossings.mean);
            if r.flagged {
                ok = false;
                pr.note(format!("N={} flagged: {}", r.n, r.flag_reason));
            }
        }
        let covering: Vec<f64> = rows.iter().filter_map(|r| r.covering_fraction(0.8)).map(|c| c.mean).collect();
        for (r, c) in rows.iter().zip(&covering) {
            pr.set(&format!("covering_0.8_N{}", r.n), *c);
        }
        if covering.len() != rows.len() || covering.windows(2).any(|w| w[1] <= w[0]) {
            ok = false;
            pr.note(format!("0.8 rho_N covering fractions not increasing: {covering:?}"));
        }
        match range_slope(&rows) {
            Some(f) => {
                pr.set("range_slope", f.slope);
                pr.set("range_slope_err", f.slope_err);
                if !(0.4..=0.6).contains(&f.slope) {
                    ok = false;
                }
            }
            None => {
                ok = false;
                pr.note("no slope: fewer than 2 unflagged rows");
            }
        }
        Ok(ok)
    })
}

/// Scaling harness at a single small horizon against the exact range mean.
pub fn scaling_oracle_row(n: usize, seed: u64) -> CheckResult {
    run_check("scaling_oracle_row", Some(10), None, |pr| {
        let cfg = ExperimentConfig {
            model: crate::config::ModelConfig { d: 2, p: 0.5, seed },
            n_grid: vec![n],
            chains: 4,
            sweeps: 50_000,
            burn_in: trapwalk_core::mcmc::BurnIn::Sweeps { sweeps: 1000 },
            thin: 10,
            ..Default::default()
        };
        let row = run_scaling_experiment(&cfg)?.remove(0);
        let exact = exact_mu_expectation(&ModelParams::new(2, 0.5, n, 0)?, |w| w.range_size() as f64)?.value;
        pr.set("exact", exact);
        pr.set("estimate", row.range.mean);
        pr.set("stderr", row.range.err);
        Ok(!row.flagged && (row.range.mean - exact).abs() <= 3.0 * row.range.err)
    })
}

// --------------------------------------------------------------- geometry

/// Skeleton separation and covering on random environments, and the
/// balanced radius floor on sparse instances with `ρ = 0.01`.
pub fn skeleton_invariants(envs: usize, seed: u64) -> CheckResult {
    run_check("skeleton_invariants", Some(11), None, |pr| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = origin();
        let here = LatticeSet::from_points(2, [x])?;
        let (mut sep, mut cov) = (0usize, 0usize);
        for _ in 0..envs {
            let l = rng.random_range(2.0..40.0);
            let density = [0.01, 0.05, 0.2, 0.5, 0.9][rng.random_range(0..5)];
            let window = ball(x, l + 1.0);
            let obstacles = window.filter(|_| rng.random::<f64>() < density).union(&here)?;
            let env = Environment::new(window, obstacles)?;
            let (s, c) = skeletal_set(&env, &x, l)?.violations(&env);
            sep += s;
            cov += c;
        }
        pr.set("separation_violations", sep as f64);
        pr.set("covering_violations", cov as f64);
        let (delta, rho) = (0.05, 0.01);
        let (mut instances, mut below) = (0, 0);
        for big_l in [16u64, 32, 64, 128] {
            for _ in 0..5 {
                let density = rng.random_range(0.002..0.02);
                let window = ball(x, big_l as f64 + 1.0);
                let obstacles = window.filter(|_| rng.random::<f64>() < density).union(&here)?;
                let env = Environment::new(window, obstacles)?;
                instances += 1;
                match balanced_radius(&env, &x, big_l, delta, rho) {
                    Ok(b) if b.l >= (big_l as f64).powf(5.0 / 6.0) => {}
                    other => {
                        below += 1;
                        pr.note(format!("L={big_l}: {other:?}"));
                    }
                }
            }
        }
        pr.set("balanced_instances", instances as f64);
        pr.set("balanced_below_floor", below as f64);
        Ok(sep == 0 && cov == 0 && below == 0)
    })
}

/// Γ nonnegative, and strictly increasing in `k` for `d = 3, 4`. In `d = 2`
/// the formula has a pole where the log argument reaches 1, so only the sign
/// is checked there.
pub fn gamma_monotone(gamma: fn(u64, f64, usize, f64) -> f64) -> CheckResult {
    run_check("gamma_monotone", None, None, |pr| {
        let mut bad = 0;
        for d in [2usize, 3, 4] {
            for l in [8.0, 32.0, 128.0] {
                let v: Vec<f64> = (0..=200).map(|k| gamma(k, l, d, 0.5)).collect();
                bad += v.iter().filter(|g| !(**g >= 0.0)).count();
                if d >= 3 {
                    bad += v.windows(2).filter(|w| w[1] <= w[0]).count();
                }
            }
        }
        pr.set("violations", bad as f64);
        Ok(bad == 0)
    })
}

pub fn truly_open_monotone(pairs: usize, seed: u64) -> CheckResult {
    run_check("truly_open_monotone", None, None, |pr| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = TrulyOpenConfig::new(6, 0.05)?;
        let x = origin();
        let (mut violations, mut flips) = (0, 0);
        for _ in 0..pairs {
            let window = ball(x, 8.0);
            let env = Environment::new(window.clone(), window.filter(|_| rng.random::<f64>() < 0.25))?;
            let obs = env.obstacles().to_vec();
            if obs.is_empty() {
                continue;
            }
            let drop = obs[rng.random_range(0..obs.len())];
            let fewer = env.with_obstacles(env.obstacles().filter(|p| *p != drop))?;
            let (a, b) = (is_truly_open(&env, &x, &cfg)?, is_truly_open(&fewer, &x, &cfg)?);
            violations += (a && !b) as u32;
            flips += (!a && b) as u32;
        }
        pr.set("violations", violations as f64);
        pr.set("false_to_true", flips as f64);
        Ok(violations == 0)
    })
}

/// Crossing decompositions of random walks against a direct re-scan.
pub fn crossing_invariants(paths: usize, seed: u64) -> CheckResult {
    run_check("crossing_invariants", None, None, |pr| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bad = 0;
        for _ in 0..paths {
            let n = rng.random_range(1..500);
            let steps: Vec<u8> = (0..n).map(|_| rng.random_range(0..4)).collect();
            let w = WalkPath::from_steps(origin(), &steps)?;
            let a = rng.random_range(0.5..5.0);
            let b = a + rng.random_range(0.5..6.0);
            let c = Point::xy(rng.random_range(-3..=3), rng.random_range(-3..=3));
            let cd = crossing_decomposition(&w, c, a, b)?;
            let inner = BallSpec { center: c, radius: a };
            let outer = BallSpec { center: c, radius: b };
            let pos = w.positions();
            let mut t = 0;
            let (mut sig, mut tau) = (Vec::new(), Vec::new());
            loop {
                let s = (t..=n).find(|&i| inner.closure_contains(&pos[i])).unwrap_or(n);
                let e = (s + 1..=n).find(|&i| !outer.contains(&pos[i])).unwrap_or(n);
                sig.push(s);
                tau.push(e);
                if e >= n {
                    break;
                }
                t = e + 1;
            }
            let interlaced = sig.iter().zip(&tau).all(|(s, t)| s <= t) && tau.iter().zip(sig.iter().skip(1)).all(|(t, s)| t <= s);
            let k = sig.iter().zip(&tau).rposition(|(s, t)| t > s).map_or(0, |i| i + 1);
            if cd.sigma != sig || cd.tau != tau || !interlaced || cd.k != k {
                bad += 1;
            }
        }
        pr.set("violations", bad as f64);
        Ok(bad == 0)
    })
}

/// `p^{B∖O}_m / p^B_m <= 1` on sparse environments in `B(0, l)`, with the
/// fitted `c = min(-ln ratio / Γ)` reported per `l`.
pub fn rw1_check(radii: &[f64], per_radius: usize, seed: u64) -> CheckResult {
    run_check("rw1_ratio", None, None, |pr| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = origin();
        let here = LatticeSet::from_points(2, [x])?;
        let mut bad = 0;
        for &l in radii {
            let mut c_fit = f64::INFINITY;
            for _ in 0..per_radius {
                let window = ball(x, l);
                let env = Environment::new(window.clone(), window.filter(|_| rng.random::<f64>() < 0.02).union(&here)?)?;
                let open: Vec<Point> =
                    ball(x, l / 2.0).iter().filter(|p| !env.obstacles().contains(p)).copied().collect();
                let u = open[rng.random_range(0..open.len())];
                let v = open[rng.random_range(0..open.len())];
                let m = rw1_ratio(&env, &x, l, 0.5, u, v)?;
                if !(m.ratio <= 1.0 + 1e-12) {
                    bad += 1;
                }
                if m.gamma > 0.0 && m.ratio > 0.0 {
                    c_fit = c_fit.min(-m.ratio.ln() / m.gamma);
                }
            }
            pr.set(&format!("c_fit_l{l}"), c_fit);
        }
        pr.set("violations", bad as f64);
        Ok(bad == 0)
    })
}

// ------------------------------------------------------- module invariants

pub fn lattice_examples() -> CheckResult {
    run_check("lattice_examples", None, None, |pr| {
        let sizes = [ball(origin(), 0.0).len(), ball(origin(), 1.0).len(), ball(origin(), 2.0).len()];
        let plus_boundary = external_boundary(&ball(origin(), 1.0)).len();
        let (c, r) = empirical_center(&ball(Point::xy(3, -1), 4.0))?;
        let two = LatticeSet::from_points(2, [origin(), Point::xy(2, 0)])?;
        let (c2, r2) = empirical_center(&two)?;
        pr.set("plus_boundary", plus_boundary as f64);
        Ok(sizes == [1, 5, 13] && plus_boundary == 8 && c == Point::xy(3, -1) && r == 4.0 && c2 == Point::xy(1, 0) && r2 == 1.0)
    })
}

pub fn survival_examples() -> CheckResult {
    run_check("survival_examples", None, None, |pr| {
        let window = ball(origin(), 5.0);
        let free = Environment::empty(window.clone());
        let walled = Environment::new(window.clone(), LatticeSet::from_points(2, origin().neighbors())?)?;
        let blocked = Environment::new(window, LatticeSet::from_points(2, [origin()])?)?;
        let a = survival_dp(&free, &origin(), 4)?;
        let b = survival_dp(&walled, &origin(), 1)?;
        let c = survival_dp(&blocked, &origin(), 3)?;
        pr.set("empty", a);
        Ok(a == 1.0 && b == 0.0 && c == 0.0)
    })
}

/// Maintained log-weight equals `|range| ln p` after a long run, and
/// conditional obstacles avoid the range.
pub fn chain_bookkeeping(steps: u64, seed: u64) -> CheckResult {
    run_check("chain_bookkeeping", None, None, |pr| {
        let params = ModelParams::new(2, 0.5, 200, seed)?;
        let mut st = ChainState::new(params, MoveMix::default(), InitialPath::Straight, 0)?;
        for _ in 0..steps {
            st.step();
        }
        let exact = st.path().recount_range() as f64 * 0.5f64.ln();
        pr.set("log_weight_drift", (st.log_weight() - exact).abs());
        let path = st.path().clone();
        let (center, r) = empirical_center(&path.range_set())?;
        let env = sample_obstacles_given_path(&path, &params, ball(center, r + 3.0))?;
        let hits = path.range().sites().filter(|p| env.obstacles().contains(p)).count();
        pr.set("obstacles_on_range", hits as f64);
        Ok(st.log_weight() == exact && hits == 0)
    })
}

/// Eigenvalue gap and sup-norm of exact balls, and of balls with 5% of
/// their boundary layer removed.
pub fn eigen_bounds_check(radii: &[f64], seed: u64) -> CheckResult {
    run_check("eigen_bounds", None, None, |pr| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sups = Vec::new();
        let mut ok = true;
        for &r in radii {
            let b = ball(origin(), r);
            let m = eigen_bounds_measurement(&b)?;
            pr.set(&format!("gap_r2_R{r}"), m.gap_times_r2);
            pr.set(&format!("sup_rd2_R{r}"), m.sup_times_rd2);
            sups.push(m.sup_times_rd2);
            let layer: Vec<Point> = b.iter().filter(|p| p.neighbors().any(|q| !b.contains(&q))).copied().collect();
            let k = (layer.len() as f64 * 0.05).round() as usize;
            let mut removed = Vec::new();
            let mut pool = layer.clone();
            for _ in 0..k {
                removed.push(pool.swap_remove(rng.random_range(0..pool.len())));
            }
            let perturbed = b.filter(|p| !removed.contains(p));
            let pm = eigen_bounds_measurement(&perturbed)?;
            pr.set(&format!("perturbed_gap_r2_R{r}"), pm.gap_times_r2);
            if !(pm.gap_times_r2 >= m.gap_times_r2 / 2.0 && pm.gap_times_r2 <= m.gap_times_r2 * 2.0) {
                ok = false;
            }
        }
        let mean = sups.iter().sum::<f64>() / sups.len() as f64;
        if sups.iter().any(|s| (s / mean - 1.0).abs() > 0.2) {
            ok = false;
            pr.note(format!("sup-norm scaling not stable: {sups:?}"));
        }
        Ok(ok)
    })
}

pub fn spectral_consistency(seed: u64) -> CheckResult {
    run_check("spectral_consistency", None, None, |pr| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let single = LatticeSet::from_points(2, [origin()])?;
        let bound = ball(origin(), 30.0);
        let (mut expansion, mut monotone_bad) = (0.0f64, 0);
        for _ in 0..5 {
            let d = grow_animal(&single, &bound, rng.random_range(20..200), &mut rng);
            let spec = dirichlet_spectrum(&d, d.len())?;
            let sites = d.to_vec();
            let u = sites[rng.random_range(0..sites.len())];
            let ui = d.index_of(&u).expect("u is in the domain");
            let n = rng.random_range(1..40);
            let hk = heat_kernel(&d, u, n)?;
            let surv: f64 = sites.iter().map(|v| hk.raw(v)).sum();
            let series: f64 = (0..d.len())
                .map(|k| {
                    let phi = &spec.eigenvectors[k];
                    (1.0 - spec.eigenvalues[k]).powi(n as i32) * phi.iter().sum::<f64>() * phi[ui]
                })
                .sum();
            expansion = expansion.max((surv - series).abs());
            let bigger = grow_animal(&d, &bound, rng.random_range(1..100), &mut rng);
            if dirichlet_spectrum(&bigger, 1)?.eigenvalues[0] > spec.eigenvalues[0] + 1e-12 {
                monotone_bad += 1;
            }
        }
        pr.set("max_expansion_error", expansion);
        pr.set("monotonicity_violations", monotone_bad as f64);
        Ok(expansion <= 1e-8 && monotone_bad == 0)
    })
}

pub fn survival_bound_check() -> CheckResult {
    run_check("survival_bound", None, None, |pr| {
        let z10 = exact_partition_function(&ModelParams::new(2, 0.5, 10, 0)?)?.value;
        let mut ok = true;
        for c in [0.0, 1.0] {
            let lb = log_survival_lower_bound(2, 0.5, 10, c)?;
            pr.set(&format!("log_bound_N10_c{c}"), lb);
            ok &= lb <= z10.ln();
        }
        pr.set("log_z10", z10.ln());
        let n = 1e12f64;
        let sc = ScalingConstants::new(2, 0.5)?;
        let at_rho = -log_survival_lower_bound(2, 0.5, 1_000_000_000_000, 1.0)? / n.sqrt();
        let at_opt = -log_survival_lower_bound_at_radius(2, 0.5, n, 1.0, sc.optimal_radius(n))? / n.sqrt();
        pr.set("exponent_at_rho_N", at_rho);
        pr.set("exponent_at_optimal_radius", at_opt);
        pr.set("c_dp", sc.c_dp);
        ok &= (at_opt / sc.c_dp - 1.0).abs() <= 0.1;
        Ok(ok)
    })
}
