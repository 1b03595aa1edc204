use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64 as C64;
use ospchain_core::bae::{seed_state, solve_k, solve_newton};
use ospchain_core::fusion::{dvf_eval, FusionIndex};
use ospchain_core::params::ModelParams;
use ospchain_core::qtm::build_qtm;
use ospchain_core::tba::{solve_tba, Convolver, GridFunction, KernelKind, TbaConfig};

fn bench_bae(c: &mut Criterion) {
    let p = ModelParams::with_u(8, 0.05).unwrap();
    c.bench_function("bae_newton_n8_k1", |b| {
        b.iter(|| {
            let seed = seed_state(1, &p).unwrap();
            solve_newton(&seed, &p, 1e-11, 200).unwrap()
        })
    });
}

fn bench_dvf(c: &mut Criterion) {
    let p = ModelParams::with_u(12, 0.05).unwrap();
    let state = solve_k(1, &p, 1e-11, 300).unwrap().state;
    c.bench_function("dvf_eval_m3_n12", |b| {
        b.iter(|| dvf_eval(FusionIndex { m: 3, k: 1 }, C64::new(0.37, 0.21), &state, &p).unwrap())
    });
}

fn bench_qtm(c: &mut Criterion) {
    let p = ModelParams::with_u(4, 0.05).unwrap();
    c.bench_function("qtm_dense_build_n4", |b| {
        b.iter(|| build_qtm(&p, C64::new(0.0, 0.0)).unwrap())
    });
}

fn bench_convolution(c: &mut Criterion) {
    let conv = Convolver::new(30.0, 0.05);
    let f = GridFunction::from_fn(30.0, 0.05, C64::new(1.0, 0.0), |x| {
        C64::new(1.0 + (-x * x / 4.0).exp(), 0.0)
    });
    c.bench_function("convolve_k_1201", |b| {
        b.iter(|| conv.convolve(KernelKind::K, &f).unwrap())
    });
}

fn bench_tba(c: &mut Criterion) {
    let cfg = TbaConfig {
        m_max: 6,
        half_width: 15.0,
        step: 0.1,
        tol: 1e-8,
        ..TbaConfig::default()
    };
    let mut group = c.benchmark_group("tba");
    group.sample_size(10);
    group.bench_function("solve_tba_small_grid", |b| {
        b.iter(|| solve_tba(&cfg, 0.5, -1.0).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_bae,
    bench_dvf,
    bench_qtm,
    bench_convolution,
    bench_tba
);
criterion_main!(benches);
