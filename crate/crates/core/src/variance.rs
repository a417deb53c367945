//! Closed-form path-variance functionals and path optimization.
//!
//! The path variance is the time integral of the per-`t` variance of the
//! true time score. For the deterministic interpolant with Gaussian `p0`
//! the integrand is `2d da^2/a^2 + (db^2/a^2) E||x1||^2`; for the bridge it
//! is `(d/2)(dsig^2)^2/(sig^2)^2 + E||da x0 + db x1||^2 / sig^2`. Both
//! depend on the data only through second moments, so minimizing over the
//! mixture path parameters is a cheap deterministic optimization.

use rand::Rng;

use crate::error::{Error, Result};
use crate::interpolants::DdbiNoiseConfig;
use crate::kmm::KmmLatentParams;
use crate::path::PathSchedule;
use crate::quad::{linspace, trapezoid_uniform};
use crate::rng::stream_rng;
use crate::schedules::{ConstraintKind, ScheduleEval, EPS_T};

/// Second moments of the endpoint distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataMoments {
    pub d: usize,
    /// E ||x0||^2
    pub c0: f64,
    /// E ||x1||^2
    pub c1: f64,
    /// E [x0^T x1] (zero in expectation when p0 and p1 are independent)
    pub c01: f64,
}

/// Which interpolant's variance functional to integrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterpolantKind {
    Di,
    Ddbi(DdbiNoiseConfig),
}

/// How to approximate the time integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceMethod {
    /// Trapezoid rule on the deterministic uniform grid (default): the
    /// integrand is cheap and 1-D, and a noise-free objective keeps
    /// finite-difference gradients exact.
    Quadrature,
    /// Monte Carlo over uniform time draws, for fidelity runs.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceConfig {
    pub interpolant: InterpolantKind,
    pub grid_points: usize,
    pub t_clamp: f64,
    pub method: VarianceMethod,
}

impl VarianceConfig {
    pub fn new(interpolant: InterpolantKind) -> Self {
        VarianceConfig {
            interpolant,
            grid_points: 1000,
            t_clamp: EPS_T,
            method: VarianceMethod::Quadrature,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 16 {
            return Err(Error::domain("grid_points must be >= 16"));
        }
        if !(self.t_clamp > 0.0 && self.t_clamp < 0.5) {
            return Err(Error::domain("t_clamp must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

/// Unbiased sample moments from flat row-major batches of dimension `d`.
/// The cross moment pairs row `i` of `x0` with row `i` of `x1`.
pub fn estimate_moments(x0: &[f64], x1: &[f64], d: usize) -> Result<DataMoments> {
    if d == 0 {
        return Err(Error::domain("dimension must be >= 1"));
    }
    if x0.len() % d != 0 || x1.len() % d != 0 {
        return Err(Error::DimMismatch { expected: d, got: x0.len() % d });
    }
    let (n0, n1) = (x0.len() / d, x1.len() / d);
    if n0 == 0 || n1 == 0 {
        return Err(Error::Empty("moment sample set"));
    }
    let mean_sq = |x: &[f64], n: usize| -> f64 {
        x.iter().map(|v| v * v).sum::<f64>() / n as f64
    };
    let pairs = n0.min(n1);
    let mut c01 = 0.0;
    for i in 0..pairs {
        for j in 0..d {
            c01 += x0[i * d + j] * x1[i * d + j];
        }
    }
    Ok(DataMoments {
        d,
        c0: mean_sq(x0, n0),
        c1: mean_sq(x1, n1),
        c01: c01 / pairs as f64,
    })
}

/// Variance integrand of the deterministic interpolant.
pub fn vdi_integrand(s: &ScheduleEval, m: &DataMoments) -> Result<f64> {
    if !(s.alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be positive, got {}", s.alpha)));
    }
    let ra = s.dalpha / s.alpha;
    let rb = s.dbeta / s.alpha;
    Ok(2.0 * m.d as f64 * ra * ra + rb * rb * m.c1)
}

/// Variance integrand of the bridge interpolant, expanding
/// `E||da x0 + db x1||^2 = da^2 c0 + db^2 c1 + 2 da db c01` by independence.
pub fn vddbi_integrand(
    s: &ScheduleEval,
    cfg: &DdbiNoiseConfig,
    m: &DataMoments,
) -> Result<f64> {
    let sig_sq = cfg.sigma_sq(s);
    if !(sig_sq > 0.0) {
        return Err(Error::domain(format!("nonpositive bridge variance {sig_sq}")));
    }
    let dsig_sq = cfg.dsigma_sq(s);
    let drift = s.dalpha * s.dalpha * m.c0
        + s.dbeta * s.dbeta * m.c1
        + 2.0 * s.dalpha * s.dbeta * m.c01;
    Ok(0.5 * m.d as f64 * (dsig_sq / sig_sq).powi(2) + drift / sig_sq)
}

/// Dispatch on the interpolant kind.
pub fn integrand(s: &ScheduleEval, interp: &InterpolantKind, m: &DataMoments) -> Result<f64> {
    match interp {
        InterpolantKind::Di => vdi_integrand(s, m),
        InterpolantKind::Ddbi(cfg) => vddbi_integrand(s, cfg, m),
    }
}

/// Path variance of a schedule under the configured interpolant.
pub fn path_variance(
    schedule: &PathSchedule,
    cfg: &VarianceConfig,
    m: &DataMoments,
) -> Result<f64> {
    cfg.validate()?;
    let compiled = schedule.compile()?;
    let (lo, hi) = (cfg.t_clamp, 1.0 - cfg.t_clamp);
    match cfg.method {
        VarianceMethod::Quadrature => {
            let ts = linspace(lo, hi, cfg.grid_points);
            let mut vals = Vec::with_capacity(ts.len());
            for &t in &ts {
                vals.push(integrand(&compiled.eval(t), &cfg.interpolant, m)?);
            }
            Ok(trapezoid_uniform(&vals, (hi - lo) / (cfg.grid_points - 1) as f64))
        }
        VarianceMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::Empty("monte carlo sample count"));
            }
            let mut rng = stream_rng(seed, "variance.mc");
            let mut acc = 0.0;
            for _ in 0..samples {
                let t = lo + (hi - lo) * rng.gen::<f64>();
                acc += integrand(&compiled.eval(t), &cfg.interpolant, m)?;
            }
            Ok(acc / samples as f64 * (hi - lo))
        }
    }
}

fn kmm_variance(
    flat: &[f64],
    k: usize,
    constraint: ConstraintKind,
    cfg: &VarianceConfig,
    m: &DataMoments,
) -> Result<f64> {
    let latent = KmmLatentParams::from_flat(k, flat)?;
    path_variance(&PathSchedule::kmm(latent, constraint), cfg, m)
}

/// Central finite-difference gradient of the path variance with respect to
/// the latent parameters, step `h = scale * max(1, |theta|)` per coordinate.
pub fn fd_gradient(
    latent: &KmmLatentParams,
    constraint: ConstraintKind,
    cfg: &VarianceConfig,
    m: &DataMoments,
    scale: f64,
) -> Result<Vec<f64>> {
    let mut flat = latent.to_flat();
    let mut grad = vec![0.0; flat.len()];
    for i in 0..flat.len() {
        let h = scale * flat[i].abs().max(1.0);
        let orig = flat[i];
        flat[i] = orig + h;
        let up = kmm_variance(&flat, latent.k, constraint, cfg, m)?;
        flat[i] = orig - h;
        let down = kmm_variance(&flat, latent.k, constraint, cfg, m)?;
        flat[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}

/// One row of the optimizer trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptStep {
    pub step: usize,
    pub variance: f64,
    pub lr: f64,
}

pub const FD_STEP_SCALE: f64 = 1e-4;
const MAX_HALVINGS: usize = 8;

/// Boundary tolerance of a usable learned path at the time clamp.
pub const BOUNDARY_TOL: f64 = 1e-3;

/// A learned path is feasible when it still satisfies the boundary
/// conditions at the clamp: `alpha(eps) >= 1 - 1e-3` and
/// `alpha(1 - eps) <= 1e-3`.
///
/// The clamp makes this check load-bearing: the variance integral over
/// `[eps, 1 - eps]` can be driven to zero by concentrating all mixture
/// mass inside `(1 - eps, 1]`, which leaves `alpha = 1` on the entire
/// working interval and disconnects the endpoints. Such paths are outside
/// the valid schedule class, so the optimizer rejects them.
pub fn boundary_feasible(
    latent: &KmmLatentParams,
    t_clamp: f64,
) -> Result<bool> {
    let p = crate::kmm::constrain(latent)?;
    let lo = crate::kmm::kmm_survival(&p, t_clamp);
    let hi = crate::kmm::kmm_survival(&p, 1.0 - t_clamp);
    Ok(lo >= 1.0 - BOUNDARY_TOL && hi <= BOUNDARY_TOL)
}

/// Gradient descent on the path variance with a monotone-accept rule:
/// a proposal that increases the objective, leaves the feasible boundary
/// class, or is non-finite is retried at half the step size, up to eight
/// halvings, then rejected. The returned parameters therefore never have
/// variance above the initial value.
pub fn optimize_path(
    latent: &KmmLatentParams,
    constraint: ConstraintKind,
    cfg: &VarianceConfig,
    m: &DataMoments,
    steps: usize,
    lr: f64,
) -> Result<(KmmLatentParams, Vec<OptStep>)> {
    latent.validate()?;
    if !boundary_feasible(latent, cfg.t_clamp)? {
        return Err(Error::domain(
            "initial path violates the boundary conditions at the time clamp",
        ));
    }
    let k = latent.k;
    let mut flat = latent.to_flat();
    let mut current = kmm_variance(&flat, k, constraint, cfg, m)?;
    if !current.is_finite() {
        return Err(Error::NonFinite("initial path variance"));
    }
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(OptStep { step: 0, variance: current, lr });

    for step in 1..=steps {
        let lat = KmmLatentParams::from_flat(k, &flat)?;
        let grad = fd_gradient(&lat, constraint, cfg, m, FD_STEP_SCALE)?;
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            trace.push(OptStep { step, variance: current, lr: 0.0 });
            continue;
        }
        let mut step_lr = lr;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let candidate: Vec<f64> = flat
                .iter()
                .zip(&grad)
                .map(|(x, g)| x - step_lr * g)
                .collect();
            let cand_latent = KmmLatentParams::from_flat(k, &candidate)?;
            let v = kmm_variance(&candidate, k, constraint, cfg, m)?;
            if v.is_finite() && v <= current && boundary_feasible(&cand_latent, cfg.t_clamp)? {
                flat = candidate;
                current = v;
                accepted = true;
                break;
            }
            step_lr *= 0.5;
        }
        trace.push(OptStep {
            step,
            variance: current,
            lr: if accepted { step_lr } else { 0.0 },
        });
    }
    Ok((KmmLatentParams::from_flat(k, &flat)?, trace))
}

/// CSV dump of an optimizer trace: `step,variance,lr` rows.
pub fn write_opt_trace<W: std::io::Write>(w: &mut W, trace: &[OptStep]) -> Result<()> {
    writeln!(w, "step,variance,lr")?;
    for row in trace {
        writeln!(w, "{},{},{}", row.step, row.variance, row.lr)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmm::init_diverse;
    use crate::rng::standard_normal_matrix;
    use crate::schedules::{eval_fixed, FixedScheduleKind};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn moments(d: usize, c0: f64, c1: f64, c01: f64) -> DataMoments {
        DataMoments { d, c0, c1, c01 }
    }

    #[test]
    fn moments_from_samples() {
        let m = estimate_moments(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0, 0.0, 0.0], 2).unwrap();
        assert_abs_diff_eq!(m.c1, 0.0);
        assert_abs_diff_eq!(m.c0, (5.0 + 25.0) / 2.0);

        // c0 for standard normals concentrates at d.
        let d = 4;
        let n = 100_000;
        let x0 = standard_normal_matrix(&mut stream_rng(11, "m.x0"), n, d);
        let x1 = standard_normal_matrix(&mut stream_rng(11, "m.x1"), n, d);
        let m = estimate_moments(&x0, &x1, d).unwrap();
        let se_c0 = (2.0 * d as f64 / n as f64).sqrt();
        assert!((m.c0 - d as f64).abs() < 4.0 * se_c0, "c0={} d={}", m.c0, d);
        let se_c01 = (d as f64 / n as f64).sqrt();
        assert!(m.c01.abs() < 4.0 * se_c01, "c01={}", m.c01);

        assert!(estimate_moments(&[], &[1.0], 1).is_err());
    }

    #[test]
    fn vdi_hand_values() {
        let s = eval_fixed(FixedScheduleKind::Trigonometric, 0.5);
        let v = vdi_integrand(&s, &moments(1, 1.0, 1.0, 0.0)).unwrap();
        assert_relative_eq!(v, 3.0 * std::f64::consts::PI.powi(2) / 4.0, max_relative = 1e-9);

        let frozen = ScheduleEval { t: 0.5, alpha: 0.7, beta: 0.3, dalpha: 0.0, dbeta: 0.0 };
        assert_abs_diff_eq!(vdi_integrand(&frozen, &moments(3, 1.0, 1.0, 0.0)).unwrap(), 0.0);

        // Linear near t = 1 grows like 2d / delta^2.
        for &delta in &[1e-2, 1e-3] {
            let s = eval_fixed(FixedScheduleKind::Linear, 1.0 - delta);
            let v = vdi_integrand(&s, &moments(2, 1.0, 0.0, 0.0)).unwrap();
            assert_relative_eq!(v, 4.0 / (delta * delta), max_relative = 1e-6);
        }
    }

    #[test]
    fn vddbi_hand_value() {
        let s = ScheduleEval { t: 0.5, alpha: 0.5, beta: 0.5, dalpha: -1.0, dbeta: 1.0 };
        let cfg = DdbiNoiseConfig { gamma: 1.0, epsilon: 0.0 };
        let v = vddbi_integrand(&s, &cfg, &moments(7, 1.0, 1.0, 0.0)).unwrap();
        assert_relative_eq!(v, 8.0, max_relative = 1e-12);

        let v = vddbi_integrand(&s, &cfg, &moments(7, 0.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v, 0.0);
    }

    #[test]
    fn integrands_are_nonnegative() {
        let m = moments(3, 2.5, 4.0, -1.5);
        let cfg = DdbiNoiseConfig::default();
        for kind in FixedScheduleKind::all_defaults() {
            for &t in &crate::quad::linspace(EPS_T, 1.0 - EPS_T, 101) {
                let s = eval_fixed(kind, t);
                assert!(vdi_integrand(&s, &m).unwrap() >= 0.0);
                assert!(vddbi_integrand(&s, &cfg, &m).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn quadrature_converges_for_smooth_integrand() {
        let m = moments(2, 2.0, 2.0, 0.0);
        let smooth = DdbiNoiseConfig { gamma: 1.0, epsilon: 0.1 };
        let sched = PathSchedule::Fixed(FixedScheduleKind::Trigonometric);
        let mut cfg = VarianceConfig::new(InterpolantKind::Ddbi(smooth));
        let coarse = path_variance(&sched, &cfg, &m).unwrap();
        cfg.grid_points = 2000;
        let fine = path_variance(&sched, &cfg, &m).unwrap();
        assert!(
            ((coarse - fine) / fine).abs() < 1e-3,
            "coarse={coarse} fine={fine}"
        );
    }

    #[test]
    fn di_linear_variance_explodes_as_clamp_shrinks() {
        let m = moments(2, 2.0, 2.0, 0.0);
        let sched = PathSchedule::Fixed(FixedScheduleKind::Linear);
        let mut cfg = VarianceConfig::new(InterpolantKind::Di);
        cfg.t_clamp = 1e-2;
        let wide = path_variance(&sched, &cfg, &m).unwrap();
        cfg.t_clamp = 1e-3;
        cfg.grid_points = 10_000;
        let narrow = path_variance(&sched, &cfg, &m).unwrap();
        assert!(narrow >= 10.0 * wide, "narrow={narrow} wide={wide}");
    }

    #[test]
    fn uniform_kmm_equals_linear_bit_for_bit() {
        let m = moments(2, 2.0, 3.0, 0.1);
        let uniform = PathSchedule::Kmm {
            latent: KmmLatentParams {
                k: 1,
                w_hat: vec![0.3],
                a_hat: vec![crate::kmm::inv_softplus(1.0)],
                b_hat: vec![crate::kmm::inv_softplus(1.0)],
            },
            constraint: ConstraintKind::Affine,
        };
        // inv_softplus(1) does not round-trip to exactly 1.0, so pin shapes
        // through a direct params schedule instead.
        let _ = uniform;
        let linear = PathSchedule::Fixed(FixedScheduleKind::Linear);
        for interp in [
            InterpolantKind::Di,
            InterpolantKind::Ddbi(DdbiNoiseConfig::default()),
        ] {
            let cfg = VarianceConfig::new(interp);
            let compiled = crate::path::CompiledSchedule::Kmm {
                params: crate::kmm::KmmParams {
                    weights: vec![1.0],
                    a: vec![1.0],
                    b: vec![1.0],
                },
                constraint: ConstraintKind::Affine,
            };
            let ts = linspace(cfg.t_clamp, 1.0 - cfg.t_clamp, cfg.grid_points);
            let step = (1.0 - 2.0 * cfg.t_clamp) / (cfg.grid_points - 1) as f64;
            let vals: Vec<f64> = ts
                .iter()
                .map(|&t| integrand(&compiled.eval(t), &cfg.interpolant, &m).unwrap())
                .collect();
            let v_kmm = trapezoid_uniform(&vals, step);
            let v_lin = path_variance(&linear, &cfg, &m).unwrap();
            assert_eq!(v_kmm.to_bits(), v_lin.to_bits());
        }
    }

    #[test]
    fn fd_gradient_passes_richardson_check() {
        let m = moments(2, 2.0, 4.0, 0.0);
        let cfg = VarianceConfig::new(InterpolantKind::Ddbi(DdbiNoiseConfig::default()));
        let latent = init_diverse(3).unwrap();
        let g1 = fd_gradient(&latent, ConstraintKind::Affine, &cfg, &m, FD_STEP_SCALE).unwrap();
        let g2 =
            fd_gradient(&latent, ConstraintKind::Affine, &cfg, &m, 2.0 * FD_STEP_SCALE).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            if a.abs() > 1e-6 {
                assert!(((a - b) / a).abs() <= 1e-3, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn optimizer_is_monotone_and_beats_start() {
        let m = moments(2, 2.0, 8.0, 0.0);
        let cfg = VarianceConfig::new(InterpolantKind::Ddbi(DdbiNoiseConfig::default()));
        let init = init_diverse(4).unwrap();
        let (out, trace) =
            optimize_path(&init, ConstraintKind::Affine, &cfg, &m, 40, 0.05).unwrap();
        for w in trace.windows(2) {
            assert!(w[1].variance <= w[0].variance + 1e-12);
        }
        let v_init = path_variance(
            &PathSchedule::kmm(init, ConstraintKind::Affine),
            &cfg,
            &m,
        )
        .unwrap();
        let v_out = path_variance(
            &PathSchedule::kmm(out, ConstraintKind::Affine),
            &cfg,
            &m,
        )
        .unwrap();
        assert!(v_out <= v_init);
        assert!(trace.last().unwrap().variance <= trace[0].variance);
    }

    #[test]
    fn monte_carlo_method_approximates_quadrature() {
        let m = moments(2, 2.0, 2.0, 0.0);
        let smooth = DdbiNoiseConfig { gamma: 1.0, epsilon: 0.1 };
        let sched = PathSchedule::Fixed(FixedScheduleKind::Linear);
        let quad = path_variance(
            &sched,
            &VarianceConfig::new(InterpolantKind::Ddbi(smooth)),
            &m,
        )
        .unwrap();
        let mut cfg = VarianceConfig::new(InterpolantKind::Ddbi(smooth));
        cfg.method = VarianceMethod::MonteCarlo { samples: 200_000, seed: 3 };
        let mc = path_variance(&sched, &cfg, &m).unwrap();
        assert_relative_eq!(mc, quad, max_relative = 0.02);
    }
}
