use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trapwalk_core::lattice::{grow_animal, is_connected};
use trapwalk_core::spectral::{green_visits, heat_kernel, lanczos_spectrum, parity_spectrum_check};
use trapwalk_core::{ball_points, dirichlet_spectrum, BallSpec, Environment, LatticeSet, Point};

fn ball(r: f64) -> LatticeSet {
    ball_points(&BallSpec::new(Point::xy(0, 0), r).unwrap())
}

fn random_domain(rng: &mut ChaCha8Rng, max: usize) -> LatticeSet {
    let seed = LatticeSet::from_points(2, [Point::xy(0, 0)]).unwrap();
    let size = rng.random_range(2..max);
    grow_animal(&seed, &ball(30.0), size - 1, rng)
}

#[test]
fn heat_kernel_symmetry_and_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let d = random_domain(&mut rng, 300);
        let sites = d.to_vec();
        let u = sites[rng.random_range(0..sites.len())];
        let n = rng.random_range(1..40);
        let ku = heat_kernel(&d, u, n).unwrap();
        assert!((ku.total_mass() + ku.exited_mass - 1.0).abs() < 1e-12);
        for _ in 0..5 {
            let v = sites[rng.random_range(0..sites.len())];
            let kv = heat_kernel(&d, v, n).unwrap();
            assert!((ku.raw(&v) - kv.raw(&u)).abs() < 1e-12);
        }
    }
}

#[test]
fn chapman_kolmogorov() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let d = random_domain(&mut rng, 200);
        let sites = d.to_vec();
        let u = sites[rng.random_range(0..sites.len())];
        let v = sites[rng.random_range(0..sites.len())];
        let (m, n) = (rng.random_range(1..15), rng.random_range(1..15));
        let direct = heat_kernel(&d, u, m + n).unwrap().raw(&v);
        let first = heat_kernel(&d, u, m).unwrap();
        let kv = heat_kernel(&d, v, n).unwrap();
        // symmetry lets p_n(w, v) be read from the kernel started at v
        let composed: f64 = sites.iter().map(|w| first.raw(w) * kv.raw(w)).sum();
        assert!((direct - composed).abs() < 1e-12, "{direct} vs {composed}");
    }
}

#[test]
fn eigenfunction_expansion_of_survival() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..4 {
        let d = random_domain(&mut rng, 150);
        let spec = dirichlet_spectrum(&d, d.len()).unwrap();
        let sites = d.to_vec();
        let u = sites[rng.random_range(0..sites.len())];
        let ui = d.index_of(&u).unwrap();
        for n in [1, 7, 30] {
            let hk = heat_kernel(&d, u, n).unwrap();
            let surv: f64 = sites.iter().map(|v| hk.raw(v)).sum();
            let series: f64 = (0..d.len())
                .map(|k| {
                    let phi = &spec.eigenvectors[k];
                    (1.0 - spec.eigenvalues[k]).powi(n as i32) * phi.iter().sum::<f64>() * phi[ui]
                })
                .sum();
            assert!((surv - series).abs() < 1e-8, "n={n}: {surv} vs {series}");
        }
    }
}

#[test]
fn principal_eigenvalue_is_domain_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let inner = random_domain(&mut rng, 120);
        let outer = grow_animal(&inner, &ball(30.0), rng.random_range(1..80), &mut rng);
        assert!(inner.is_subset(&outer) && is_connected(&outer));
        let a = dirichlet_spectrum(&inner, 1).unwrap().eigenvalues[0];
        let b = dirichlet_spectrum(&outer, 1).unwrap().eigenvalues[0];
        assert!(a >= b - 1e-12, "{a} < {b}");
    }
}

#[test]
fn spectrum_translation_invariant_and_parity_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = random_domain(&mut rng, 200);
    let shifted = d.translate(&Point::xy(17, -5)).unwrap();
    let a = dirichlet_spectrum(&d, 3).unwrap();
    let b = dirichlet_spectrum(&shifted, 3).unwrap();
    for k in 0..3 {
        assert!((a.eigenvalues[k] - b.eigenvalues[k]).abs() < 1e-12);
    }
    let r = parity_spectrum_check(&d).unwrap();
    assert!(r.asymmetry < 1e-9 && r.projection_residual < 1e-8, "{r:?}");
}

#[test]
fn lanczos_agrees_with_dense_on_animals() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = grow_animal(&ball(8.0), &ball(14.0), 200, &mut rng);
    let dense = dirichlet_spectrum(&d, 3).unwrap();
    let lz = lanczos_spectrum(&d, 3).unwrap();
    for k in 0..3 {
        assert!((dense.eigenvalues[k] - lz.eigenvalues[k]).abs() < 1e-9);
    }
}

fn walled_environment(rng: &mut ChaCha8Rng, p: f64) -> Environment {
    let window = ball(10.0);
    let obstacles = window.filter(|q| q.dist(&Point::xy(0, 0)) > 8.0 || rng.random::<f64>() < 1.0 - p);
    Environment::new(window, obstacles).unwrap()
}

// visits to B(x, r) up to and including the killing time
fn green_monte_carlo(env: &Environment, u: Point, x: Point, r: f64, walks: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let inside = |q: &Point| q.dist2(&x) as f64 <= r * r;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..walks {
        let mut q = u;
        let mut count = inside(&q) as u32 as f64;
        while !env.obstacles().contains(&q) {
            q = q.step(rng.random_range(0..4));
            count += inside(&q) as u32 as f64;
        }
        s += count;
        s2 += count * count;
    }
    let m = s / walks as f64;
    (m, ((s2 / walks as f64 - m * m) / walks as f64).sqrt())
}

#[test]
fn green_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..4 {
        let env = walled_environment(&mut rng, 0.85);
        let u = Point::xy(rng.random_range(-3..=3), rng.random_range(-3..=3));
        let x = Point::xy(rng.random_range(-2..=2), rng.random_range(-2..=2));
        let g = green_visits(&env, u, x, 2.5).unwrap();
        assert!(g.residual <= 1e-10);
        assert!(g.g.iter().all(|v| *v >= -1e-12));
        let (m, se) = green_monte_carlo(&env, u, x, 2.5, 20_000, &mut rng);
        assert!((g.value - m).abs() <= 4.0 * se + 1e-12, "{} vs {m} ± {se}", g.value);
    }
}
