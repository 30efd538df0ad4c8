//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trapwalk_core::lattice::grow_animal;
use trapwalk_core::{ball_points, BallSpec, Environment, LatticeSet, Point};

pub fn ball(r: f64) -> LatticeSet {
    ball_points(&BallSpec::new(Point::xy(0, 0), r).expect("finite radius"))
}

/// Connected animal between `B(0, inner)` and `B(0, outer)`.
pub fn animal(inner: f64, outer: f64, seed: u64) -> LatticeSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = ball(inner);
    let bound = ball(outer);
    let extra = (bound.len() - base.len()) / 2;
    grow_animal(&base, &bound, extra, &mut rng)
}

/// Bernoulli obstacles with density `1 - p` in `B(0, r)`, the origin kept open.
pub fn environment(r: f64, p: f64, seed: u64) -> Environment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = ball(r);
    let o = Point::xy(0, 0);
    let obstacles = window.filter(|q| *q != o && rng.random::<f64>() < 1.0 - p);
    Environment::new(window, obstacles).expect("obstacles lie in the window")
}
