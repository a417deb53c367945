//! Every analytic MI oracle must be reproduced by a Monte Carlo average of
//! the exact pointwise log ratio over joint samples.

use mvp_core::benchmarks::{
    additive_noise_task, asinh_task, edge_singular_task, gamma_exponential_task,
    gaussian_block_task, TaskSpec,
};
use mvp_core::rng::stream_rng;

fn mc_check(task: &TaskSpec, n: usize, seed: u64) {
    let oracle = task.oracle_mi().unwrap().expect("task has an MI oracle");
    let lr = task.exact_log_ratio.as_ref().expect("task has an exact log ratio");
    let samples = (task.sampler_p1)(&mut stream_rng(seed, "mc.p1"), n);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for x in samples.chunks_exact(task.dim) {
        let v = lr(x);
        mean += v;
        m2 += v * v;
    }
    mean /= n as f64;
    m2 /= n as f64;
    let se = ((m2 - mean * mean).max(0.0) / n as f64).sqrt();
    assert!(
        (mean - oracle).abs() <= 4.0 * se.max(1e-9),
        "{}: mc={mean} oracle={oracle} se={se}",
        task.name
    );
}

#[test]
fn gaussian_block_oracles() {
    mc_check(&gaussian_block_task(2, 0.5).unwrap(), 1_000_000, 1);
    mc_check(&gaussian_block_task(8, 0.5).unwrap(), 1_000_000, 2);
}

#[test]
fn pathological_task_oracles() {
    mc_check(&edge_singular_task(0.5).unwrap(), 1_000_000, 3);
    mc_check(&halfcube(0.5), 1_000_000, 4);
    mc_check(&asinh_task(0.5).unwrap(), 1_000_000, 5);
    mc_check(&gamma_exponential_task(1.0).unwrap(), 1_000_000, 6);
    mc_check(&gamma_exponential_task(1.5).unwrap(), 1_000_000, 7);
}

fn halfcube(rho: f64) -> TaskSpec {
    mvp_core::benchmarks::halfcube_task(rho).unwrap()
}

#[test]
fn additive_noise_numerical_oracle_vs_mc() {
    // The quadrature oracle must agree with the Monte Carlo average of the
    // exact log ratio over joint draws.
    mc_check(&additive_noise_task(0.25).unwrap(), 1_000_000, 8);
    mc_check(&additive_noise_task(0.5).unwrap(), 1_000_000, 9);
}

#[test]
fn zero_correlation_means_zero_mi() {
    for task in [
        edge_singular_task(0.0).unwrap(),
        halfcube(0.0),
        asinh_task(0.0).unwrap(),
    ] {
        let lr = task.exact_log_ratio.as_ref().unwrap();
        let n = 200_000;
        let samples = (task.sampler_p1)(&mut stream_rng(10, "zero.p1"), n);
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for x in samples.chunks_exact(task.dim) {
            let v = lr(x);
            mean += v;
            m2 += v * v;
        }
        mean /= n as f64;
        m2 /= n as f64;
        let se = ((m2 - mean * mean).max(0.0) / n as f64).sqrt();
        assert!(mean.abs() <= 4.0 * se.max(1e-12), "{}: mean={mean}", task.name);
    }
}
