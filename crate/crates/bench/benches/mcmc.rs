use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use trapwalk_core::mcmc::{ChainState, InitialPath};
use trapwalk_core::{ModelParams, MoveMix, ScalingConstants};

fn sweeps(c: &mut Criterion) {
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    for n in [1_000usize, 10_000] {
        let params = ModelParams::new(2, 0.5, n, 1).unwrap();
        let r = ScalingConstants::new(2, 0.5).unwrap().optimal_radius(n as f64);
        let init = InitialPath::Confined { radius: r };
        g.bench_function(format!("default_mix_N{n}"), |b| {
            b.iter_batched(
                || ChainState::new(params, MoveMix::default(), init, 0).unwrap(),
                |mut st| st.sweep(),
                BatchSize::LargeInput,
            )
        });
    }
    g.finish();
}

fn single_steps(c: &mut Criterion) {
    let params = ModelParams::new(2, 0.5, 6, 1).unwrap();
    let mut st = ChainState::new(params, MoveMix::default(), InitialPath::Straight, 0).unwrap();
    c.bench_function("step_N6", |b| b.iter(|| st.step()));
}

criterion_group!(benches, sweeps, single_steps);
criterion_main!(benches);
