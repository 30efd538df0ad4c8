use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trapwalk_core::exact::{exact_partition_function_with_budget, range_size_histogram};
use trapwalk_core::spectral::{log_survival_lower_bound, log_survival_lower_bound_at_radius};
use trapwalk_core::{
    exact_partition_function, sample_environment, survival_dp, Environment, LatticeSet, ModelParams, Point,
    ScalingConstants,
};

fn l1_ball(r: i32) -> LatticeSet {
    let mut v = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            if x.abs() + y.abs() <= r {
                v.push(Point::xy(x, y));
            }
        }
    }
    LatticeSet::from_points(2, v).unwrap()
}

#[test]
fn partition_function_monotone_in_p_and_n() {
    for n in 1..=7 {
        let hist = range_size_histogram(2, n, 1 << 20).unwrap();
        let z = |p: f64| -> f64 {
            hist.iter().enumerate().map(|(k, &c)| c as f64 * p.powi(k as i32)).sum::<f64>() / 4f64.powi(n as i32)
        };
        let mut last = 0.0;
        for i in 1..20 {
            let p = i as f64 / 20.0;
            assert!(z(p) > last);
            last = z(p);
        }
        for p in [0.1, 0.5, 0.9] {
            let a = exact_partition_function(&ModelParams::new(2, p, n, 0).unwrap()).unwrap().value;
            let b = exact_partition_function(&ModelParams::new(2, p, n - 1, 0).unwrap()).unwrap().value;
            assert!(a <= b, "Z_{n} = {a} > Z_{} = {b}", n - 1);
            assert!((a - z(p)).abs() < 1e-15);
        }
    }
}

#[test]
fn annealed_survival_equals_range_representation() {
    // average P_0(τ_O > 2) over every obstacle configuration of the l1-ball
    let window = l1_ball(2);
    let sites = window.to_vec();
    for p in [0.3f64, 0.5] {
        let mut total = 0.0;
        for mask in 0u32..(1 << sites.len()) {
            let obstacles =
                LatticeSet::from_points(2, sites.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, q)| *q))
                    .unwrap();
            let k = obstacles.len() as i32;
            let weight = (1.0 - p).powi(k) * p.powi(sites.len() as i32 - k);
            let env = Environment::new(window.clone(), obstacles).unwrap();
            total += weight * survival_dp(&env, &Point::xy(0, 0), 2).unwrap();
        }
        let z = exact_partition_function(&ModelParams::new(2, p, 2, 0).unwrap()).unwrap().value;
        assert!((total - z).abs() < 1e-14, "p={p}: {total} vs {z}");
    }
}

#[test]
fn sampled_environments_average_to_z() {
    let n = 6;
    let window = l1_ball(n as i32);
    let z = exact_partition_function(&ModelParams::new(2, 0.5, n, 0).unwrap()).unwrap().value;
    let xs: Vec<f64> = (0..4000)
        .map(|seed| {
            let env = sample_environment(&ModelParams::new(2, 0.5, n, seed).unwrap(), window.clone()).unwrap();
            survival_dp(&env, &Point::xy(0, 0), n).unwrap()
        })
        .collect();
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    let se = (var / xs.len() as f64).sqrt();
    assert!((m - z).abs() < 4.0 * se, "mean {m} vs Z {z} (se {se})");
}

#[test]
fn budget_is_exact_count() {
    let p = ModelParams::new(2, 0.5, 5, 0).unwrap();
    assert!(exact_partition_function_with_budget(&p, 1023).is_err());
    assert_eq!(exact_partition_function_with_budget(&p, 1024).unwrap().paths_enumerated, 1024);
}

#[test]
fn survival_bound_below_exact_z10() {
    let z = exact_partition_function(&ModelParams::new(2, 0.5, 10, 0).unwrap()).unwrap().value;
    for c in [0.0, 0.5, 1.0, 5.0] {
        let lb = log_survival_lower_bound(2, 0.5, 10, c).unwrap();
        assert!(lb <= z.ln(), "c={c}: {lb} > ln Z = {}", z.ln());
    }
}

#[test]
fn survival_exponent_at_large_n() {
    let n = 1e12f64;
    let sc = ScalingConstants::new(2, 0.5).unwrap();
    // independent evaluation of the exponent at rho_N
    let j01 = 2.404825557695773f64;
    let rho = 1.5999554661466224 * n.powf(0.25);
    let expect = -(std::f64::consts::PI * rho * rho * 0.5f64.ln() - n * j01 * j01 / (4.0 * rho * rho) - rho) / n.sqrt();
    let got = -log_survival_lower_bound(2, 0.5, 1_000_000_000_000, 1.0).unwrap() / n.sqrt();
    assert!((got - 6.140705721220447).abs() < 1e-6, "{got}");
    assert!((got - expect).abs() < 1e-6);
    // at the minimising radius the exponent approaches c(d, p)
    let at_opt = -log_survival_lower_bound_at_radius(2, 0.5, n, 1.0, sc.optimal_radius(n)).unwrap() / n.sqrt();
    assert!((at_opt / sc.c_dp - 1.0).abs() < 0.1, "{at_opt} vs {}", sc.c_dp);
    assert!((at_opt - 3.5496186869290356).abs() < 1e-6);
}

#[test]
fn killed_walk_frequency_matches_dp() {
    let window = l1_ball(8);
    let env = sample_environment(&ModelParams::new(2, 0.7, 8, 11).unwrap(), window).unwrap();
    let x = Point::xy(0, 0);
    if env.obstacles().contains(&x) {
        return;
    }
    let exact = survival_dp(&env, &x, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let trials = 200_000;
    let mut alive = 0;
    for _ in 0..trials {
        let mut p = x;
        let mut ok = true;
        for _ in 0..8 {
            p = p.step(rng.random_range(0..4));
            if env.obstacles().contains(&p) {
                ok = false;
                break;
            }
        }
        alive += ok as u32;
    }
    let f = alive as f64 / trials as f64;
    let se = (exact * (1.0 - exact) / trials as f64).sqrt();
    assert!((f - exact).abs() < 4.0 * se + 1e-12, "{f} vs {exact}");
}
