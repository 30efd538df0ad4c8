//! Truly-open sites, skeletal sets, balanced radii, Γ, crossing
//! decompositions and covering observables.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::env::{check_l1_ball, survival_dp, Environment, ObstacleField};
use crate::error::{Error, Result};
use crate::lattice::{ball_points, external_boundary, BallSpec, LatticeSet, Point};
use crate::spectral::heat_kernel;
use crate::walk::WalkPath;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrulyOpenConfig {
    pub t_surv: usize,
    pub threshold: f64,
}

impl TrulyOpenConfig {
    pub fn new(t_surv: usize, threshold: f64) -> Result<Self> {
        if t_surv < 1 || !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!("t_surv={t_surv}, threshold={threshold}")));
        }
        Ok(TrulyOpenConfig { t_surv, threshold })
    }

    /// `t_surv = (ln N)^5`, `threshold = exp(-(ln N)^2)`.
    pub fn for_horizon(n: usize) -> Result<Self> {
        let l = (n.max(2) as f64).ln();
        TrulyOpenConfig::new(l.powi(5).ceil() as usize, (-l * l).exp())
    }
}

/// `P_x(τ_O > t_surv) >= threshold`.
pub fn is_truly_open<E: ObstacleField>(env: &E, x: &Point, cfg: &TrulyOpenConfig) -> Result<bool> {
    check_l1_ball(env, x, cfg.t_surv)?;
    if env.is_obstacle(x) {
        return Ok(false);
    }
    Ok(survival_dp(env, x, cfg.t_surv)? >= cfg.threshold)
}

/// Component of the origin among truly-open sites of the confinement ball;
/// empty if the origin is not truly open.
pub fn truly_open_cluster<E: ObstacleField>(env: &E, cfg: &TrulyOpenConfig, confinement: &BallSpec) -> Result<LatticeSet> {
    let origin = Point::origin(env.dim())?;
    if !env.in_window(&origin) {
        return Err(Error::OutsideWindow(origin.to_string()));
    }
    let empty = LatticeSet::empty(env.dim())?;
    if !confinement.contains(&origin) || !is_truly_open(env, &origin, cfg)? {
        return Ok(empty);
    }
    // grow the component by BFS, testing sites lazily
    let mut status: FxHashMap<Point, bool> = FxHashMap::default();
    status.insert(origin, true);
    let mut queue = std::collections::VecDeque::from([origin]);
    let mut members = vec![origin];
    while let Some(p) = queue.pop_front() {
        for q in p.neighbors() {
            if status.contains_key(&q) {
                continue;
            }
            let ok = confinement.contains(&q) && is_truly_open(env, &q, cfg)?;
            status.insert(q, ok);
            if ok {
                members.push(q);
                queue.push_back(q);
            }
        }
    }
    LatticeSet::from_points(env.dim(), members)
}

/// Greedy skeleton of the obstacles in `B(anchor, l)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkeletalSet {
    pub anchor: Point,
    pub radius_l: f64,
    pub separation: f64,
    pub points: Vec<Point>,
    pub inner_points: Vec<Point>,
}

impl SkeletalSet {
    /// Pairs closer than the separation radius, and obstacles not covered.
    pub fn violations(&self, env: &Environment) -> (usize, usize) {
        let mut sep = 0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                if a.dist(b) < self.separation {
                    sep += 1;
                }
            }
        }
        let ball = BallSpec { center: self.anchor, radius: self.radius_l };
        let uncovered = env
            .obstacles()
            .iter()
            .filter(|y| ball.contains(y))
            .filter(|y| !self.points.iter().any(|z| y.dist(z) <= self.separation))
            .count();
        (sep, uncovered)
    }
}

/// Separation radius `l^{1/(2d)}`.
pub fn separation_radius(l: f64, d: usize) -> f64 {
    l.powf(1.0 / (2.0 * d as f64))
}

/// Include `x`, then repeatedly the remaining obstacle of `B(x, l)` closest
/// to `x` (lexicographic ties), deleting obstacles within `l^{1/(2d)}` of
/// each chosen point.
pub fn skeletal_set(env: &Environment, x: &Point, l: f64) -> Result<SkeletalSet> {
    if !env.is_obstacle(x) {
        return Err(Error::NotAnObstacle(x.to_string()));
    }
    if !(l >= 1.0) {
        return Err(Error::InvalidParameter(format!("l must be >= 1, got {l}")));
    }
    let d = x.dim();
    let sep = separation_radius(l, d);
    let ball = BallSpec::new(*x, l)?;
    let mut candidates: Vec<(i64, Point)> =
        env.obstacles().iter().filter(|y| ball.contains(y)).map(|y| (y.dist2(x), *y)).collect();
    candidates.sort();
    // chosen points bucketed on a grid of side `cell`
    let cell = sep.ceil().max(1.0) as i32;
    let key = |p: &Point| -> Point {
        let c: Vec<i32> = p.coords().iter().map(|v| v.div_euclid(cell)).collect();
        Point::new(&c).expect("valid dimension")
    };
    let mut grid: FxHashMap<Point, Vec<Point>> = FxHashMap::default();
    let sep2 = sep * sep;
    let covered = |grid: &FxHashMap<Point, Vec<Point>>, y: &Point| -> bool {
        let k = key(y);
        let lo = k.sub(&Point::new(&vec![1; d]).expect("valid dimension"));
        let hi = k.add(&Point::new(&vec![1; d]).expect("valid dimension"));
        let mut hit = false;
        crate::lattice::for_each_in_box(&lo, &hi, |b| {
            if !hit {
                if let Some(v) = grid.get(&b) {
                    hit = v.iter().any(|z| (y.dist2(z) as f64) <= sep2 * (1.0 + 4.0 * f64::EPSILON));
                }
            }
        });
        hit
    };
    let mut points = Vec::new();
    for (_, y) in candidates {
        if !covered(&grid, &y) {
            grid.entry(key(&y)).or_default().push(y);
            points.push(y);
        }
    }
    let half = BallSpec::new(*x, l / 2.0)?;
    let inner_points = points.iter().copied().filter(|p| half.contains(p)).collect();
    Ok(SkeletalSet { anchor: *x, radius_l: l, separation: sep, points, inner_points })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalancedRadius {
    pub j: u32,
    pub l: f64,
    pub skeleton_size: usize,
    pub inner_size: usize,
}

/// Smallest `j >= 0` such that `l = L / 2^j` satisfies
/// `|X°_l| >= rho · min(|X_l|, delta · l^{d - 1/2})`, searched while
/// `l >= L^{5/6}`.
pub fn balanced_radius(env: &Environment, x: &Point, big_l: u64, delta: f64, rho: f64) -> Result<BalancedRadius> {
    if !env.is_obstacle(x) {
        return Err(Error::Precondition(format!("{x} is not an obstacle")));
    }
    let lf = big_l as f64;
    let ball = ball_points(&BallSpec::new(*x, lf)?);
    let density = env.density_in(&ball);
    if density >= delta {
        return Err(Error::Precondition(format!("obstacle density {density:.4} in B(x, L) is not below {delta}")));
    }
    let d = x.dim() as f64;
    let floor = lf.powf(5.0 / 6.0);
    let mut j = 0u32;
    loop {
        let l = lf / 2f64.powi(j as i32);
        if l < floor {
            return Err(Error::NoBalancedRadius { big_l, delta, rho, last_l: l * 2.0 });
        }
        let sk = skeletal_set(env, x, l)?;
        let need = rho * (sk.points.len() as f64).min(delta * l.powf(d - 0.5));
        if sk.inner_points.len() as f64 >= need {
            return Ok(BalancedRadius { j, l, skeleton_size: sk.points.len(), inner_size: sk.inner_points.len() });
        }
        j += 1;
    }
}

/// Γ(k) for `(c0 l)^2`-step windows.
pub fn gamma(k: u64, l: f64, d: usize, c0: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let kf = k as f64;
    if d == 2 {
        let arg = (c0 * l).powf(1.5) / (2.0 * kf);
        if arg <= 1.0 {
            0.0
        } else {
            1.0 / arg.ln()
        }
    } else {
        let df = d as f64;
        l.powf(2.0 - df) * kf / (1.0 + l.powf((2.0 - df) / (2.0 * df)) * kf.powf(2.0 / df))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingDecomposition {
    pub center: Point,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub sigma: Vec<usize>,
    pub tau: Vec<usize>,
    pub k: usize,
    pub durations: Vec<usize>,
}

/// Alternating entrance times into the closed inner ball and exit times
/// from the outer ball, each truncated at `N`.
pub fn crossing_decomposition(path: &WalkPath, center: Point, inner_r: f64, outer_r: f64) -> Result<CrossingDecomposition> {
    if !(inner_r < outer_r) || inner_r < 0.0 {
        return Err(Error::InvalidParameter(format!("need 0 <= inner < outer, got {inner_r}, {outer_r}")));
    }
    let inner = BallSpec::new(center, inner_r)?;
    let outer = BallSpec::new(center, outer_r)?;
    let pos = path.positions();
    let n = path.len();
    let (mut sigma, mut tau) = (Vec::new(), Vec::new());
    let mut from = 0;
    loop {
        let s = (from..=n).find(|&t| inner.closure_contains(&pos[t])).unwrap_or(n);
        let t = (s + 1..=n).find(|&t| !outer.contains(&pos[t])).unwrap_or(n);
        sigma.push(s);
        tau.push(t);
        if t >= n {
            break;
        }
        from = t + 1;
    }
    let durations: Vec<usize> = sigma.iter().zip(&tau).map(|(s, t)| t - s).collect();
    let k = durations.iter().rposition(|&x| x > 0).map_or(0, |i| i + 1);
    Ok(CrossingDecomposition { center, inner_radius: inner_r, outer_radius: outer_r, sigma, tau, k, durations })
}

/// The event `x ∈ O` and `|O ∩ B(x, l)| / |B(x, l)| < delta`.
pub fn obstacle_density_event(env: &Environment, x: &Point, l: f64, delta: f64) -> Result<bool> {
    let ball = ball_points(&BallSpec::new(*x, l)?);
    if !ball.is_subset(env.window()) {
        return Err(Error::WindowTooSmall(format!("B({x}, {l}) is not inside the window")));
    }
    Ok(env.is_obstacle(x) && env.density_in(&ball) < delta)
}

/// Points of `B(center, r)` missed by `range`, and their fraction.
pub fn ball_covering_deficit(range: &LatticeSet, center: Point, r: f64) -> Result<(usize, f64)> {
    let ball = ball_points(&BallSpec::new(center, r)?);
    let missed = ball.iter().filter(|p| !range.contains(p)).count();
    Ok((missed, missed as f64 / ball.len() as f64))
}

pub fn boundary_size(range: &LatticeSet) -> Result<usize> {
    if range.is_empty() {
        return Err(Error::EmptySet("boundary_size"));
    }
    Ok(external_boundary(range).len())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rw1Measurement {
    pub l: f64,
    pub steps: usize,
    pub u: Point,
    pub v: Point,
    pub ratio: f64,
    pub inner_skeleton: usize,
    pub gamma: f64,
}

/// `p^{B∖O}_m(u, v) / p^B_m(u, v)` on `B = B(x, l)` with `m = ⌈(c0 l)^2⌉`.
pub fn rw1_ratio(env: &Environment, x: &Point, l: f64, c0: f64, u: Point, v: Point) -> Result<Rw1Measurement> {
    let ball = ball_points(&BallSpec::new(*x, l)?);
    let m = ((c0 * l).powi(2)).ceil() as usize;
    let free = heat_kernel(&ball, u, m)?.value(&v);
    let open_part = ball.difference(env.obstacles());
    let killed = if open_part.contains(&u) { heat_kernel(&open_part, u, m)?.value(&v) } else { 0.0 };
    let inner = if env.is_obstacle(x) { skeletal_set(env, x, l)?.inner_points.len() } else { 0 };
    Ok(Rw1Measurement {
        l,
        steps: m,
        u,
        v,
        ratio: killed / free,
        inner_skeleton: inner,
        gamma: gamma(inner as u64, l, x.dim(), c0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(r: i32) -> LatticeSet {
        let mut v = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                v.push(Point::xy(x, y));
            }
        }
        LatticeSet::from_points(2, v).unwrap()
    }

    fn env(window: LatticeSet, obs: &[(i32, i32)]) -> Environment {
        Environment::new(window, LatticeSet::from_points(2, obs.iter().map(|&(a, b)| Point::xy(a, b))).unwrap()).unwrap()
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma(0, 10.0, 2, 0.5), 0.0);
        assert!((gamma(1, 64.0, 3, 0.5) - 0.015625 / 1.5).abs() < 1e-15);
        assert!((gamma(1, 200.0, 2, 0.5) - 1.0 / 500f64.ln()).abs() < 1e-12);
        // argument below one
        assert_eq!(gamma(1000, 4.0, 2, 0.5), 0.0);
    }

    #[test]
    fn truly_open_examples() {
        let o = Point::xy(0, 0);
        let cfg = TrulyOpenConfig::new(2, 0.05).unwrap();
        let e = env(square(4), &[(0, 0)]);
        assert!(!is_truly_open(&e, &o, &cfg).unwrap());
        let e = env(square(4), &[]);
        assert!(is_truly_open(&e, &o, &cfg).unwrap());
        // only +y open: P = 1/4 · P_(0,1)(survive one step) = 1/4 · 1
        let e = env(square(4), &[(1, 0), (-1, 0), (0, -1)]);
        assert!(is_truly_open(&e, &o, &cfg).unwrap());
        let strict = TrulyOpenConfig::new(2, 0.3).unwrap();
        assert!(!is_truly_open(&e, &o, &strict).unwrap());
    }

    #[test]
    fn cluster_of_empty_environment_is_the_ball() {
        let cfg = TrulyOpenConfig::new(3, 0.5).unwrap();
        let spec = BallSpec::new(Point::xy(0, 0), 6.0).unwrap();
        let e = env(square(10), &[]);
        assert_eq!(truly_open_cluster(&e, &cfg, &spec).unwrap(), ball_points(&spec));
        let e = env(square(10), &[(0, 0)]);
        assert!(truly_open_cluster(&e, &cfg, &spec).unwrap().is_empty());
    }

    #[test]
    fn skeleton_examples() {
        let x = Point::xy(0, 0);
        let e = env(square(12), &[(0, 0)]);
        let s = skeletal_set(&e, &x, 10.0).unwrap();
        assert_eq!(s.points, vec![x]);
        assert_eq!(s.inner_points, vec![x]);
        // l = 16: separation 16^{1/4} = 2
        let e = env(square(20), &[(0, 0), (1, 1)]);
        let s = skeletal_set(&e, &x, 16.0).unwrap();
        assert_eq!(s.points, vec![x]);
        let e = env(square(20), &[(0, 0), (3, 0), (0, -3), (9, 0)]);
        let s = skeletal_set(&e, &x, 16.0).unwrap();
        assert_eq!(s.points, vec![x, Point::xy(0, -3), Point::xy(3, 0), Point::xy(9, 0)]);
        assert_eq!(s.inner_points.len(), 3);
        assert_eq!(s.violations(&e), (0, 0));
        assert!(skeletal_set(&e, &Point::xy(1, 0), 16.0).is_err());
    }

    #[test]
    fn balanced_radius_for_singleton() {
        let e = env(square(70), &[(0, 0)]);
        let r = balanced_radius(&e, &Point::xy(0, 0), 64, 0.01, 0.5).unwrap();
        assert_eq!(r.j, 0);
        assert_eq!(r.l, 64.0);
    }

    #[test]
    fn crossing_examples() {
        let c = Point::xy(0, 0);
        let far = WalkPath::straight(Point::xy(20, 0), 5);
        let dec = crossing_decomposition(&far, c, 3.0, 6.0).unwrap();
        assert_eq!(dec.sigma, vec![5]);
        assert_eq!(dec.k, 0);
        // out along +x past the outer radius and back
        let mut steps = vec![0u8; 8];
        steps.extend(vec![1u8; 8]);
        let w = WalkPath::from_steps(c, &steps).unwrap();
        let dec = crossing_decomposition(&w, c, 3.0, 6.0).unwrap();
        assert_eq!(dec.sigma[0], 0);
        assert_eq!(dec.tau[0], 7);
        assert_eq!(dec.k, 2);
        assert_eq!(dec.sigma[1], 12);
        assert_eq!(*dec.tau.last().unwrap(), 16);
    }

    #[test]
    fn covering_and_boundary() {
        let empty = LatticeSet::empty(2).unwrap();
        assert_eq!(ball_covering_deficit(&empty, Point::xy(0, 0), 1.0).unwrap(), (5, 1.0));
        let b = ball_points(&BallSpec::new(Point::xy(0, 0), 3.0).unwrap());
        assert_eq!(ball_covering_deficit(&b, Point::xy(0, 0), 3.0).unwrap(), (0, 0.0));
        assert_eq!(boundary_size(&LatticeSet::from_points(2, [Point::xy(0, 0)]).unwrap()).unwrap(), 4);
        let bar = WalkPath::straight(Point::xy(0, 0), 7).range_set();
        assert_eq!(boundary_size(&bar).unwrap(), 2 * 7 + 4);
        assert!(boundary_size(&empty).is_err());
    }

    #[test]
    fn density_event() {
        let e = env(square(10), &[(0, 0)]);
        assert!(obstacle_density_event(&e, &Point::xy(0, 0), 3.0, 0.1).unwrap());
        assert!(!obstacle_density_event(&e, &Point::xy(1, 0), 3.0, 0.1).unwrap());
        assert!(obstacle_density_event(&e, &Point::xy(0, 0), 3.0, 1.0).unwrap());
        assert!(obstacle_density_event(&e, &Point::xy(0, 0), 30.0, 0.1).is_err());
    }
}
