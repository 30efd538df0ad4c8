//! Bernoulli obstacle environments, killing times and the survival
//! probability `P_x(τ_O > n)`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{check_dim, expect_dim, for_each_in_box, LatticeSet, Point};
use crate::walk::WalkPath;

/// Model parameters: dimension, open probability, horizon and seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub p: f64,
    pub n: usize,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(d: usize, p: f64, n: usize, seed: u64) -> Result<Self> {
        check_dim(d)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("open probability must lie in (0,1), got {p}")));
        }
        Ok(ModelParams { d, p, n, seed })
    }

    pub fn with_n(self, n: usize) -> Self {
        ModelParams { n, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        ModelParams { seed, ..self }
    }
}

/// Read access to an obstacle configuration.
pub trait ObstacleField {
    fn dim(&self) -> usize;
    fn is_obstacle(&self, x: &Point) -> bool;
    /// Whether the configuration is defined at `x`.
    fn in_window(&self, x: &Point) -> bool;
}

/// Obstacle set `O` materialised on a finite window.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    window: LatticeSet,
    obstacles: LatticeSet,
}

impl Environment {
    pub fn new(window: LatticeSet, obstacles: LatticeSet) -> Result<Self> {
        expect_dim(window.dim(), obstacles.dim())?;
        if let Some(p) = obstacles.iter().find(|p| !window.contains(p)) {
            return Err(Error::OutsideWindow(p.to_string()));
        }
        Ok(Environment { window, obstacles })
    }

    /// Window without obstacles.
    pub fn empty(window: LatticeSet) -> Self {
        let obstacles = LatticeSet::empty(window.dim()).expect("window has valid dimension");
        Environment { window, obstacles }
    }

    pub fn window(&self) -> &LatticeSet {
        &self.window
    }

    pub fn obstacles(&self) -> &LatticeSet {
        &self.obstacles
    }

    /// Same window with the obstacle set replaced.
    pub fn with_obstacles(&self, obstacles: LatticeSet) -> Result<Self> {
        Environment::new(self.window.clone(), obstacles)
    }

    /// Obstacle density `|O ∩ A| / |A|`.
    pub fn density_in(&self, a: &LatticeSet) -> f64 {
        if a.is_empty() {
            return 0.0;
        }
        a.iter().filter(|p| self.obstacles.contains(p)).count() as f64 / a.len() as f64
    }

    /// Text form: a `# obstacles of window <hash>` line followed by the
    /// obstacle set in lattice-set format.
    pub fn to_text(&self) -> String {
        format!("# obstacles of window {}\n{}", window_fingerprint(&self.window), self.obstacles.to_text())
    }

    /// Parses [`Environment::to_text`] output; the header hash must match `window`.
    pub fn from_text(text: &str, window: LatticeSet) -> Result<Self> {
        let (first, rest) = text.split_once('\n').ok_or_else(|| Error::parse(1, "missing header"))?;
        let hash = first
            .strip_prefix("# obstacles of window ")
            .ok_or_else(|| Error::parse(1, "expected `# obstacles of window <hash>`"))?;
        if hash.trim() != window_fingerprint(&window) {
            return Err(Error::parse(1, "window fingerprint mismatch"));
        }
        let obstacles = LatticeSet::from_text(rest)?;
        Environment::new(window, obstacles)
    }
}

impl ObstacleField for Environment {
    fn dim(&self) -> usize {
        self.window.dim()
    }
    fn is_obstacle(&self, x: &Point) -> bool {
        self.obstacles.contains(x)
    }
    fn in_window(&self, x: &Point) -> bool {
        self.window.contains(x)
    }
}

/// Obstacle field on all of Z^d, each site decided on demand by a keyed hash
/// of `(seed, site)`. Agrees with [`sample_environment`] on every window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LazyEnvironment {
    dim: usize,
    p: f64,
    seed: u64,
}

impl LazyEnvironment {
    pub fn new(params: &ModelParams) -> Self {
        LazyEnvironment { dim: params.d, p: params.p, seed: params.seed }
    }

    pub fn materialize(&self, window: LatticeSet) -> Result<Environment> {
        expect_dim(self.dim, window.dim())?;
        let obstacles = window.filter(|x| self.is_obstacle(x));
        Ok(Environment { window, obstacles })
    }
}

impl ObstacleField for LazyEnvironment {
    fn dim(&self) -> usize {
        self.dim
    }
    fn is_obstacle(&self, x: &Point) -> bool {
        site_uniform(self.seed, x) < 1.0 - self.p
    }
    fn in_window(&self, _x: &Point) -> bool {
        true
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform variate in `[0, 1)` keyed by `(seed, site)`.
pub fn site_uniform(seed: u64, x: &Point) -> f64 {
    let mut h = splitmix64(seed ^ (x.dim() as u64).rotate_left(56));
    for &c in x.coords() {
        h = splitmix64(h ^ (c as u32 as u64));
    }
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Short hex fingerprint of a window's canonical text form.
pub fn window_fingerprint(window: &LatticeSet) -> String {
    let digest = Sha256::digest(window.to_text().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Each window site is independently an obstacle with probability `1 - p`.
pub fn sample_environment(params: &ModelParams, window: LatticeSet) -> Result<Environment> {
    LazyEnvironment::new(params).materialize(window)
}

/// `τ_O = min{n >= 0 : S_n ∈ O}`, or `None` if the path survives.
pub fn killing_time<E: ObstacleField>(path: &WalkPath, env: &E) -> Result<Option<usize>> {
    expect_dim(env.dim(), path.dim())?;
    if let Some(p) = path.positions().iter().find(|p| !env.in_window(p)) {
        return Err(Error::OutsideWindow(p.to_string()));
    }
    Ok(path.positions().iter().position(|p| env.is_obstacle(p)))
}

/// The l¹ ball of radius `n` around `x` must lie inside the window.
pub(crate) fn check_l1_ball<E: ObstacleField>(env: &E, x: &Point, n: usize) -> Result<()> {
    let d = x.dim();
    let r = n as i32;
    let mut lo = *x;
    let mut hi = *x;
    for i in 0..d {
        lo = lo.add(&offset(d, i, -r));
        hi = hi.add(&offset(d, i, r));
    }
    let mut bad = None;
    for_each_in_box(&lo, &hi, |p| {
        if bad.is_none() && p.l1(x) <= n as i64 && !env.in_window(&p) {
            bad = Some(p);
        }
    });
    match bad {
        Some(p) => Err(Error::WindowTooSmall(format!("l1-ball of radius {n} around {x} leaves the window at {p}"))),
        None => Ok(()),
    }
}

fn offset(d: usize, axis: usize, by: i32) -> Point {
    let mut c = vec![0; d];
    c[axis] = by;
    Point::new(&c).expect("valid dimension")
}

/// `P_x(τ_O > n)` by `n` steps of the killed transition operator on the l¹
/// ball of radius `n` around `x`.
pub fn survival_dp<E: ObstacleField>(env: &E, x: &Point, n: usize) -> Result<f64> {
    expect_dim(env.dim(), x.dim())?;
    check_l1_ball(env, x, n)?;
    if env.is_obstacle(x) {
        return Ok(0.0);
    }
    if n == 0 {
        return Ok(1.0);
    }
    let d = x.dim();
    let side = 2 * n + 1;
    let cells = side
        .checked_pow(d as u32)
        .filter(|&c| c <= 200_000_000)
        .ok_or_else(|| Error::InvalidParameter(format!("survival horizon {n} too large in d={d}")))?;
    let mut strides = vec![1usize; d];
    for i in (0..d.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * side;
    }
    let r = n as i32;
    let mut open = vec![false; cells];
    let lo = x.add(&Point::new(&vec![-r; d]).expect("valid dimension"));
    let hi = x.add(&Point::new(&vec![r; d]).expect("valid dimension"));
    let mut idx = 0;
    for_each_in_box(&lo, &hi, |p| {
        open[idx] = p.l1(x) <= n as i64 && !env.is_obstacle(&p);
        idx += 1;
    });
    let center: usize = strides.iter().map(|s| s * n).sum();
    let mut mass = vec![0.0f64; cells];
    let mut next = vec![0.0f64; cells];
    mass[center] = 1.0;
    let w = 1.0 / (2 * d) as f64;
    let mut active = vec![center];
    let mut next_active = Vec::new();
    let mut touched = vec![false; cells];
    for _ in 0..n {
        next_active.clear();
        for &i in &active {
            let m = mass[i] * w;
            if m == 0.0 {
                continue;
            }
            for &s in &strides {
                for j in [i + s, i - s] {
                    if open[j] {
                        next[j] += m;
                        if !touched[j] {
                            touched[j] = true;
                            next_active.push(j);
                        }
                    }
                }
            }
        }
        for &i in &active {
            mass[i] = 0.0;
        }
        for &j in &next_active {
            touched[j] = false;
        }
        std::mem::swap(&mut mass, &mut next);
        std::mem::swap(&mut active, &mut next_active);
    }
    Ok(active.iter().map(|&i| mass[i]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{ball_points, BallSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(r: i32) -> LatticeSet {
        let mut v = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                v.push(Point::xy(x, y));
            }
        }
        LatticeSet::from_points(2, v).unwrap()
    }

    fn env_with(window: LatticeSet, obs: &[(i32, i32)]) -> Environment {
        let o = LatticeSet::from_points(2, obs.iter().map(|&(x, y)| Point::xy(x, y))).unwrap();
        Environment::new(window, o).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(2, 1.0, 3, 0).is_err());
        assert!(ModelParams::new(2, 0.0, 3, 0).is_err());
        assert!(ModelParams::new(1, 0.5, 3, 0).is_err());
        assert!(ModelParams::new(3, 0.5, 0, 0).is_ok());
    }

    #[test]
    fn nearly_open_environment_has_no_obstacles() {
        let window = LatticeSet::from_points(2, (0..1000).map(|i| Point::xy(i, 0))).unwrap();
        let mut empty = 0;
        for seed in 0..1000 {
            let params = ModelParams::new(2, 1.0 - 1e-12, 0, seed).unwrap();
            if sample_environment(&params, window.clone()).unwrap().obstacles().is_empty() {
                empty += 1;
            }
        }
        assert!(empty >= 999);
    }

    #[test]
    fn sampling_is_deterministic() {
        let params = ModelParams::new(2, 0.5, 0, 77).unwrap();
        let a = sample_environment(&params, square(10)).unwrap();
        let b = sample_environment(&params, square(10)).unwrap();
        assert_eq!(a, b);
        let lazy = LazyEnvironment::new(&params);
        assert!(square(10).iter().all(|p| lazy.is_obstacle(p) == a.is_obstacle(p)));
    }

    #[test]
    fn half_density_fraction() {
        let window = square(49); // 99^2 = 9801 sites
        let mut within = 0;
        for seed in 0..200 {
            let params = ModelParams::new(2, 0.5, 0, seed).unwrap();
            let env = sample_environment(&params, window.clone()).unwrap();
            let frac = env.obstacles().len() as f64 / window.len() as f64;
            if (frac - 0.5).abs() <= 0.02 {
                within += 1;
            }
        }
        assert!(within as f64 / 200.0 >= 0.99, "{within}/200");
    }

    #[test]
    fn killing_time_examples() {
        let env = env_with(square(5), &[(0, 0)]);
        let w = WalkPath::straight(Point::xy(0, 0), 3);
        assert_eq!(killing_time(&w, &env).unwrap(), Some(0));

        let env = env_with(square(5), &[]);
        assert_eq!(killing_time(&w, &env).unwrap(), None);

        let env = env_with(square(5), &[(2, 0)]);
        assert_eq!(killing_time(&w, &env).unwrap(), Some(2));

        let far = WalkPath::straight(Point::xy(0, 0), 9);
        assert!(matches!(killing_time(&far, &env), Err(Error::OutsideWindow(_))));
    }

    #[test]
    fn survival_examples() {
        let x = Point::xy(0, 0);
        let env = env_with(square(6), &[(0, 0)]);
        assert_eq!(survival_dp(&env, &x, 3).unwrap(), 0.0);
        let env = env_with(square(6), &[]);
        assert!((survival_dp(&env, &x, 5).unwrap() - 1.0).abs() < 1e-15);
        let env = env_with(square(6), &[(1, 0), (-1, 0), (0, 1), (0, -1)]);
        assert_eq!(survival_dp(&env, &x, 1).unwrap(), 0.0);
        assert!(matches!(survival_dp(&env, &x, 7), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn survival_with_three_blocked_neighbours() {
        // only +y is open; from (0,1) all 4 neighbours are open except back is (0,0) (open)
        let env = env_with(square(6), &[(1, 0), (-1, 0), (0, -1)]);
        let p = survival_dp(&env, &Point::xy(0, 0), 2).unwrap();
        assert!((p - 0.25).abs() < 1e-15);
    }

    #[test]
    fn survival_matches_monte_carlo() {
        let window = ball_points(&BallSpec::new(Point::xy(0, 0), 20.0).unwrap());
        let n = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..20u64 {
            let params = ModelParams::new(2, 0.8, n, seed).unwrap();
            let mut env = sample_environment(&params, window.clone()).unwrap();
            let origin = Point::xy(0, 0);
            if env.is_obstacle(&origin) {
                env = env.with_obstacles(env.obstacles().filter(|p| *p != origin)).unwrap();
            }
            let exact = survival_dp(&env, &origin, n).unwrap();
            let trials = 100_000;
            let mut alive = 0u32;
            for _ in 0..trials {
                let mut p = origin;
                let mut ok = true;
                for _ in 0..n {
                    p = p.step(rng.random_range(0..4u8));
                    if env.is_obstacle(&p) {
                        ok = false;
                        break;
                    }
                }
                alive += ok as u32;
            }
            let est = alive as f64 / trials as f64;
            let se = (exact * (1.0 - exact) / trials as f64).sqrt().max(1e-9);
            assert!((est - exact).abs() <= 4.0 * se, "seed {seed}: exact {exact} mc {est}");
        }
    }

    #[test]
    fn environment_text_round_trip() {
        let params = ModelParams::new(2, 0.7, 0, 5).unwrap();
        let env = sample_environment(&params, square(4)).unwrap();
        let text = env.to_text();
        assert!(text.starts_with("# obstacles of window "));
        let back = Environment::from_text(&text, square(4)).unwrap();
        assert_eq!(back, env);
        assert!(Environment::from_text(&text, square(5)).is_err());
    }
}
