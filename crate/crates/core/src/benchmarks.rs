//! Benchmark task generators with analytic or brute-force oracles.
//!
//! Mutual-information tasks are cast as density ratio estimation between
//! the joint (`p1`) and the product of marginals (`p0`); product samples
//! are produced by independently permuting the y-block of a joint batch.
//! Density-estimation tasks pair a data sampler (`p1`) with a standard
//! normal base (`p0`).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::quad::simpson;
use crate::schedules::ScheduleEval;
use crate::special::{bivariate_normal_log_pdf, digamma, ln_gamma, std_normal_log_pdf};

pub type SamplerFn = Box<dyn Fn(&mut ChaCha12Rng, usize) -> Vec<f64> + Send + Sync>;
pub type LogRatioFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Ground truth attached to a task, when any exists.
pub enum Oracle {
    /// Closed-form mutual information in nats.
    AnalyticMi(f64),
    /// Closed-form pointwise log ratio `log p1(x) - log p0(x)`.
    AnalyticLogRatio(LogRatioFn),
    /// Mutual information by 2-D composite Simpson quadrature.
    NumericalMi(NumericalMiSpec),
    None,
}

impl std::fmt::Debug for Oracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Oracle::AnalyticMi(v) => write!(f, "AnalyticMi({v})"),
            Oracle::AnalyticLogRatio(_) => write!(f, "AnalyticLogRatio(..)"),
            Oracle::NumericalMi(s) => write!(f, "NumericalMi({s:?})"),
            Oracle::None => write!(f, "None"),
        }
    }
}

/// Which interpolant the task is normally run with: the bridge for MI
/// (non-Gaussian products), the deterministic interpolant for density
/// estimation against a Gaussian base.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpolantPreference {
    Di,
    Ddbi,
}

/// Rotation diagonalizing the task's Gaussian covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotKind {
    Identity,
    /// Per 2x2 block: y = ((x0+x1), (x0-x1)) / sqrt(2)
    PairBlocks,
}

/// Spectral description of a Gaussian pair `p0 = N(0, I)`,
/// `p1 = N(0, Q diag(eigvals) Q^T)`; enough for the exact deterministic
/// interpolant marginal time score.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMarginal {
    pub eigvals: Vec<f64>,
    pub rot: RotKind,
}

impl GaussianMarginal {
    pub fn rotate(&self, x: &[f64]) -> Vec<f64> {
        match self.rot {
            RotKind::Identity => x.to_vec(),
            RotKind::PairBlocks => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let mut y = Vec::with_capacity(x.len());
                for pair in x.chunks_exact(2) {
                    y.push((pair[0] + pair[1]) * s);
                    y.push((pair[0] - pair[1]) * s);
                }
                y
            }
        }
    }

    /// Marginal time score of the interpolant `N(0, a^2 I + b^2 Sigma)`:
    /// sum over eigendirections of `(dv/(2v)) (y^2/v - 1)`.
    pub fn time_score(&self, s: &ScheduleEval, x: &[f64]) -> f64 {
        let y = self.rotate(x);
        let (a2, b2) = (s.alpha * s.alpha, s.beta * s.beta);
        let da = 2.0 * s.alpha * s.dalpha;
        let db = 2.0 * s.beta * s.dbeta;
        y.iter()
            .zip(&self.eigvals)
            .map(|(&yj, &lam)| {
                let v = a2 + b2 * lam;
                let dv = da + db * lam;
                dv / (2.0 * v) * (yj * yj / v - 1.0)
            })
            .sum()
    }

    /// Exact `log p1(x) - log p0(x)`.
    pub fn log_ratio(&self, x: &[f64]) -> f64 {
        let y = self.rotate(x);
        y.iter()
            .zip(&self.eigvals)
            .map(|(&yj, &lam)| -0.5 * (lam.ln() + yj * yj * (1.0 / lam - 1.0)))
            .sum()
    }
}

/// A benchmark task: samplers plus whatever ground truth is available.
pub struct TaskSpec {
    pub name: String,
    pub dim: usize,
    pub sampler_p0: SamplerFn,
    pub sampler_p1: SamplerFn,
    pub oracle: Oracle,
    /// Exact pointwise log ratio, for Monte Carlo cross-checks.
    pub exact_log_ratio: Option<LogRatioFn>,
    /// Present for Gaussian pairs: exact marginal time score support.
    pub gaussian_marginal: Option<GaussianMarginal>,
    pub preferred: InterpolantPreference,
}

impl std::fmt::Debug for TaskSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TaskSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("oracle", &self.oracle)
            .finish()
    }
}

impl TaskSpec {
    /// The oracle MI value, computing the quadrature one if necessary.
    pub fn oracle_mi(&self) -> Result<Option<f64>> {
        match &self.oracle {
            Oracle::AnalyticMi(v) => Ok(Some(*v)),
            Oracle::NumericalMi(spec) => Ok(Some(spec.compute()?)),
            _ => Ok(None),
        }
    }

    /// CSV export with a one-line header naming task, seed, and dimension.
    pub fn export_samples_csv<W: std::io::Write>(
        &self,
        w: &mut W,
        rng: &mut ChaCha12Rng,
        seed: u64,
        n: usize,
    ) -> Result<()> {
        writeln!(w, "# task={},seed={},dim={}", self.name, seed, self.dim)?;
        let data = (self.sampler_p1)(rng, n);
        for row in data.chunks_exact(self.dim) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho.abs() < 1.0) {
        return Err(Error::domain(format!("|rho| must be < 1, got {rho}")));
    }
    Ok(())
}

fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// Correlated standard-normal pair with correlation `rho`.
fn correlated_pair(rng: &mut ChaCha12Rng, rho: f64) -> (f64, f64) {
    let z1 = standard_normal(rng);
    let z2 = standard_normal(rng);
    (z1, rho * z1 + (1.0 - rho * rho).sqrt() * z2)
}

/// Product-of-marginals sampler for a 2-D joint: draw a joint batch, then
/// permute the y coordinates within the batch.
fn shuffled_product_sampler<F>(joint: F) -> SamplerFn
where
    F: Fn(&mut ChaCha12Rng, usize) -> Vec<f64> + Send + Sync + 'static,
{
    Box::new(move |rng, n| {
        let mut data = joint(rng, n);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let ys: Vec<f64> = (0..n).map(|i| data[2 * idx[i] + 1]).collect();
        for (i, y) in ys.into_iter().enumerate() {
            data[2 * i + 1] = y;
        }
        data
    })
}

/// `p0 = N(0, I_d)` vs `p1 = N(0, Sigma)` with `d/2` identical 2x2 blocks
/// `[[1, rho], [rho, 1]]`. Oracle: `KL(p1 || p0) = -(d/4) ln(1 - rho^2)`.
pub fn gaussian_block_task(d: usize, rho: f64) -> Result<TaskSpec> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::domain(format!("block task needs even d >= 2, got {d}")));
    }
    check_rho(rho)?;
    let mi = -(d as f64 / 4.0) * (1.0 - rho * rho).ln();
    let marginal = GaussianMarginal {
        eigvals: (0..d)
            .map(|j| if j % 2 == 0 { 1.0 + rho } else { 1.0 - rho })
            .collect(),
        rot: RotKind::PairBlocks,
    };
    let lr = marginal.clone();
    Ok(TaskSpec {
        name: format!("gauss_block_d{d}_r{rho}"),
        dim: d,
        sampler_p0: Box::new(move |rng, n| crate::rng::standard_normal_matrix(rng, n, d)),
        sampler_p1: Box::new(move |rng, n| {
            let mut out = Vec::with_capacity(n * d);
            for _ in 0..n {
                for _ in 0..d / 2 {
                    let (a, b) = correlated_pair(rng, rho);
                    out.push(a);
                    out.push(b);
                }
            }
            out
        }),
        oracle: Oracle::AnalyticMi(mi),
        exact_log_ratio: Some(Box::new(move |x| lr.log_ratio(x))),
        gaussian_marginal: Some(marginal),
        preferred: InterpolantPreference::Ddbi,
    })
}

/// `p0 = N(0, I_d)` vs `p1 = N(0, sigma1_sq I_d)`: the isotropic pair with
/// everything available in closed form. Used for density-estimation oracles.
pub fn gaussian_isotropic_task(d: usize, sigma1_sq: f64) -> Result<TaskSpec> {
    if d == 0 {
        return Err(Error::domain("dimension must be >= 1"));
    }
    if !(sigma1_sq > 0.0) {
        return Err(Error::domain("sigma1_sq must be positive"));
    }
    let marginal = GaussianMarginal { eigvals: vec![sigma1_sq; d], rot: RotKind::Identity };
    let lr = marginal.clone();
    Ok(TaskSpec {
        name: format!("gauss_iso_d{d}_s{sigma1_sq}"),
        dim: d,
        sampler_p0: Box::new(move |rng, n| crate::rng::standard_normal_matrix(rng, n, d)),
        sampler_p1: Box::new(move |rng, n| {
            let s = sigma1_sq.sqrt();
            crate::rng::standard_normal_matrix(rng, n, d)
                .into_iter()
                .map(|v| s * v)
                .collect()
        }),
        oracle: Oracle::AnalyticLogRatio(Box::new(move |x| lr.log_ratio(x))),
        exact_log_ratio: Some(Box::new({
            let lr = marginal.clone();
            move |x| lr.log_ratio(x)
        })),
        gaussian_marginal: Some(marginal),
        preferred: InterpolantPreference::Di,
    })
}

fn gaussian_pair_log_ratio(x: f64, y: f64, rho: f64) -> f64 {
    bivariate_normal_log_pdf(x, y, rho) - std_normal_log_pdf(&[x]) - std_normal_log_pdf(&[y])
}

/// Bivariate Gaussian joint vs product; MI = -0.5 ln(1 - rho^2). Stresses
/// near-degenerate (rho -> 1) and near-independent (rho -> 0) regimes.
pub fn edge_singular_task(rho: f64) -> Result<TaskSpec> {
    check_rho(rho)?;
    let joint = move |rng: &mut ChaCha12Rng, n: usize| {
        let mut out = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let (a, b) = correlated_pair(rng, rho);
            out.push(a);
            out.push(b);
        }
        out
    };
    Ok(TaskSpec {
        name: format!("edge_singular_r{rho}"),
        dim: 2,
        sampler_p0: shuffled_product_sampler(joint),
        sampler_p1: Box::new(joint),
        oracle: Oracle::AnalyticMi(-0.5 * (1.0 - rho * rho).ln()),
        exact_log_ratio: Some(Box::new(move |x| gaussian_pair_log_ratio(x[0], x[1], rho))),
        gaussian_marginal: None,
        preferred: InterpolantPreference::Ddbi,
    })
}

/// Heavy-tail map `h(z) = |z|^{3/2} sign(z)` applied to both coordinates of
/// a correlated Gaussian pair. The homeomorphism preserves MI.
pub fn halfcube_task(rho: f64) -> Result<TaskSpec> {
    check_rho(rho)?;
    let fwd = |z: f64| z.abs().powf(1.5) * z.signum();
    let joint = move |rng: &mut ChaCha12Rng, n: usize| {
        let mut out = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let (a, b) = correlated_pair(rng, rho);
            out.push(fwd(a));
            out.push(fwd(b));
        }
        out
    };
    Ok(TaskSpec {
        name: format!("halfcube_r{rho}"),
        dim: 2,
        sampler_p0: shuffled_product_sampler(joint),
        sampler_p1: Box::new(joint),
        oracle: Oracle::AnalyticMi(-0.5 * (1.0 - rho * rho).ln()),
        exact_log_ratio: Some(Box::new(move |v| {
            // Jacobians cancel between joint and product.
            let (x, y) = (halfcube_inverse(v[0]), halfcube_inverse(v[1]));
            gaussian_pair_log_ratio(x, y, rho)
        })),
        gaussian_marginal: None,
        preferred: InterpolantPreference::Ddbi,
    })
}

/// Inverse of the half-cube map: `|y|^{2/3} sign(y)`.
pub fn halfcube_inverse(y: f64) -> f64 {
    y.abs().powf(2.0 / 3.0) * y.signum()
}

/// Tail-compressing `asinh` map applied to both coordinates of a correlated
/// Gaussian pair; MI is preserved.
pub fn asinh_task(rho: f64) -> Result<TaskSpec> {
    check_rho(rho)?;
    let joint = move |rng: &mut ChaCha12Rng, n: usize| {
        let mut out = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let (a, b) = correlated_pair(rng, rho);
            out.push(a.asinh());
            out.push(b.asinh());
        }
        out
    };
    Ok(TaskSpec {
        name: format!("asinh_r{rho}"),
        dim: 2,
        sampler_p0: shuffled_product_sampler(joint),
        sampler_p1: Box::new(joint),
        oracle: Oracle::AnalyticMi(-0.5 * (1.0 - rho * rho).ln()),
        exact_log_ratio: Some(Box::new(move |v| {
            gaussian_pair_log_ratio(v[0].sinh(), v[1].sinh(), rho)
        })),
        gaussian_marginal: None,
        preferred: InterpolantPreference::Ddbi,
    })
}

/// Quadrature settings for MI oracles without a closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericalMiSpec {
    pub eps: f64,
    /// Simpson subintervals per axis.
    pub n: usize,
}

impl NumericalMiSpec {
    pub fn compute(&self) -> Result<f64> {
        additive_noise_numerical_mi(self.eps, self.n)
    }
}

fn additive_noise_py(y: f64, eps: f64) -> f64 {
    let lo = (y - eps).max(0.0);
    let hi = (y + eps).min(1.0);
    ((hi - lo) / (2.0 * eps)).max(0.0)
}

/// MI of `x ~ U(0,1)`, `y = x + U(-eps, eps)` by 2-D composite Simpson over
/// the joint support: outer in x, inner in y.
pub fn additive_noise_numerical_mi(eps: f64, n: usize) -> Result<f64> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::domain(format!("eps must lie in (0, 0.5], got {eps}")));
    }
    let ln2e = (2.0 * eps).ln();
    let inner = |x: f64| {
        simpson(
            |y| {
                let py = additive_noise_py(y, eps);
                if py <= 0.0 {
                    0.0
                } else {
                    (1.0 / (2.0 * eps)) * (-ln2e - py.ln())
                }
            },
            x - eps,
            x + eps,
            n,
        )
    };
    Ok(simpson(inner, 0.0, 1.0, n))
}

/// Same integral with the axes swapped: outer in y over `[-eps, 1+eps]`,
/// inner in x over the overlap. MI is symmetric, so this must agree with
/// [`additive_noise_numerical_mi`] up to quadrature error.
pub fn additive_noise_numerical_mi_swapped(eps: f64, n: usize) -> Result<f64> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::domain(format!("eps must lie in (0, 0.5], got {eps}")));
    }
    let ln2e = (2.0 * eps).ln();
    let outer = |y: f64| {
        let lo = (y - eps).max(0.0);
        let hi = (y + eps).min(1.0);
        if hi <= lo {
            return 0.0;
        }
        let py = additive_noise_py(y, eps);
        let v = (1.0 / (2.0 * eps)) * (-ln2e - py.ln());
        simpson(|_x| v, lo, hi, n)
    };
    Ok(simpson(outer, -eps, 1.0 + eps, n))
}

/// Piecewise-constant joint with fragmented support:
/// `x ~ U(0,1)`, `y = x + U(-eps, eps)`.
pub fn additive_noise_task(eps: f64) -> Result<TaskSpec> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::domain(format!("eps must lie in (0, 0.5], got {eps}")));
    }
    let joint = move |rng: &mut ChaCha12Rng, n: usize| {
        let mut out = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let x: f64 = rng.gen();
            let noise = (2.0 * rng.gen::<f64>() - 1.0) * eps;
            out.push(x);
            out.push(x + noise);
        }
        out
    };
    Ok(TaskSpec {
        name: format!("additive_noise_e{eps}"),
        dim: 2,
        sampler_p0: shuffled_product_sampler(joint),
        sampler_p1: Box::new(joint),
        oracle: Oracle::NumericalMi(NumericalMiSpec { eps, n: 2000 }),
        exact_log_ratio: Some(Box::new(move |v| {
            -(2.0 * eps).ln() - additive_noise_py(v[1], eps).ln()
        })),
        gaussian_marginal: None,
        preferred: InterpolantPreference::Ddbi,
    })
}

/// Hierarchical pair `x ~ Gamma(rho, 1)`, `y | x ~ Exponential(x)`.
/// Oracle MI = digamma(rho + 1) - ln(rho).
pub fn gamma_exponential_task(rho: f64) -> Result<TaskSpec> {
    if !(rho > 0.0) {
        return Err(Error::domain(format!("rho must be positive, got {rho}")));
    }
    let mi = digamma(rho + 1.0)? - rho.ln();
    let gamma_dist = rand_distr::Gamma::new(rho, 1.0)
        .map_err(|e| Error::domain(format!("gamma sampler: {e}")))?;
    let joint = move |rng: &mut ChaCha12Rng, n: usize| {
        let mut out = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let x: f64 = gamma_dist.sample(rng);
            let u: f64 = rng.gen();
            // inverse-transform exponential with rate x
            let y = -(-u).ln_1p() / x;
            out.push(x);
            out.push(y);
        }
        out
    };
    Ok(TaskSpec {
        name: format!("gamma_exp_r{rho}"),
        dim: 2,
        sampler_p0: shuffled_product_sampler(joint),
        sampler_p1: Box::new(joint),
        oracle: Oracle::AnalyticMi(mi),
        exact_log_ratio: Some(Box::new(move |v| {
            // ln Gamma(rho) terms cancel between joint and marginal.
            let (x, y) = (v[0], v[1]);
            x.ln() - x * y - rho.ln() + (rho + 1.0) * (1.0 + y).ln()
        })),
        gaussian_marginal: None,
        preferred: InterpolantPreference::Ddbi,
    })
}

/// Independent 2-D quadrature for the Gamma-Exponential MI, integrating in
/// `(v, w) = (ln x, x y)`. The conditional of `w` given `x` is Exp(1), so
/// both axes have unit scale and exponentially decaying integrands.
pub fn gamma_exponential_numerical_mi(rho: f64, n: usize) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::domain(format!("rho must be positive, got {rho}")));
    }
    let lng = ln_gamma(rho)?;
    let (v_lo, v_hi) = (-40.0 / rho, 4.5);
    let w_max = 50.0;
    let outer = |v: f64| {
        let x = v.exp();
        // density of v: x^rho e^{-x} / Gamma(rho)
        let log_pv = rho * v - x - lng;
        simpson(
            |w| {
                let ratio = v - w - rho.ln() + (rho + 1.0) * (w / x).ln_1p();
                (log_pv - w).exp() * ratio
            },
            0.0,
            w_max,
            n,
        )
    };
    Ok(simpson(outer, v_lo, v_hi, n))
}

/// The six 2-D toy densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyName {
    Circles,
    Rings,
    Pinwheel,
    TwoSpirals,
    Checkerboard,
    Tree,
}

impl ToyName {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "circles" => ToyName::Circles,
            "rings" => ToyName::Rings,
            "pinwheel" => ToyName::Pinwheel,
            "2spirals" | "two_spirals" => ToyName::TwoSpirals,
            "checkerboard" => ToyName::Checkerboard,
            "tree" => ToyName::Tree,
            other => return Err(Error::domain(format!("unknown toy dataset '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ToyName::Circles => "circles",
            ToyName::Rings => "rings",
            ToyName::Pinwheel => "pinwheel",
            ToyName::TwoSpirals => "2spirals",
            ToyName::Checkerboard => "checkerboard",
            ToyName::Tree => "tree",
        }
    }
}

fn sample_toy(name: ToyName, rng: &mut ChaCha12Rng, n: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    let mut out = Vec::with_capacity(2 * n);
    match name {
        ToyName::Circles => {
            for i in 0..n {
                let r = if i % 2 == 0 { 1.0 } else { 0.5 };
                let th = rng.gen::<f64>() * 2.0 * PI;
                let x = r * th.cos() + 0.08 * standard_normal(rng);
                let y = r * th.sin() + 0.08 * standard_normal(rng);
                out.push(3.0 * x);
                out.push(3.0 * y);
            }
        }
        ToyName::Rings => {
            const RADII: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
            for i in 0..n {
                let r = RADII[i % 4];
                let th = rng.gen::<f64>() * 2.0 * PI;
                out.push(3.0 * r * th.cos() + 0.08 * standard_normal(rng));
                out.push(3.0 * r * th.sin() + 0.08 * standard_normal(rng));
            }
        }
        ToyName::Pinwheel => {
            let rads: Vec<f64> = (0..5).map(|k| 2.0 * PI * k as f64 / 5.0).collect();
            for i in 0..n {
                let f0 = 1.0 + 0.3 * standard_normal(rng);
                let f1 = 0.1 * standard_normal(rng);
                let angle = rads[i % 5] + 0.25 * f0.exp();
                let (sin, cos) = angle.sin_cos();
                out.push(2.0 * (f0 * cos - f1 * sin));
                out.push(2.0 * (f0 * sin + f1 * cos));
            }
        }
        ToyName::TwoSpirals => {
            for i in 0..n {
                let th = rng.gen::<f64>().sqrt() * 540.0 * 2.0 * PI / 360.0;
                let mut x = -th.cos() * th + rng.gen::<f64>() * 0.5;
                let mut y = th.sin() * th + rng.gen::<f64>() * 0.5;
                if i % 2 == 1 {
                    x = -x;
                    y = -y;
                }
                out.push(x / 3.0 + 0.1 * standard_normal(rng));
                out.push(y / 3.0 + 0.1 * standard_normal(rng));
            }
        }
        ToyName::Checkerboard => {
            for _ in 0..n {
                let x1 = rng.gen::<f64>() * 4.0 - 2.0;
                let shift = if rng.gen::<bool>() { -2.0 } else { 0.0 };
                let x2 = rng.gen::<f64>() + shift + x1.floor().rem_euclid(2.0);
                out.push(2.0 * x1);
                out.push(2.0 * x2);
            }
        }
        ToyName::Tree => {
            // Binary branching: pick a random segment of a depth-6 tree,
            // then a random point along it with cross noise.
            let segments = tree_segments();
            for _ in 0..n {
                let seg = segments[rng.gen_range(0..segments.len())];
                let s: f64 = rng.gen();
                let x = seg.0 + s * (seg.2 - seg.0) + 0.02 * standard_normal(rng);
                let y = seg.1 + s * (seg.3 - seg.1) + 0.02 * standard_normal(rng);
                out.push(x);
                out.push(y);
            }
        }
    }
    out
}

/// Line segments (x0, y0, x1, y1) of a symmetric binary tree.
fn tree_segments() -> Vec<(f64, f64, f64, f64)> {
    let mut segs = Vec::new();
    fn branch(
        segs: &mut Vec<(f64, f64, f64, f64)>,
        x: f64,
        y: f64,
        angle: f64,
        len: f64,
        depth: usize,
    ) {
        let (x2, y2) = (x + len * angle.sin(), y + len * angle.cos());
        segs.push((x, y, x2, y2));
        if depth > 0 {
            branch(segs, x2, y2, angle + 0.55, len * 0.7, depth - 1);
            branch(segs, x2, y2, angle - 0.55, len * 0.7, depth - 1);
        }
    }
    branch(&mut segs, 0.0, -2.5, 0.0, 1.6, 6);
    segs
}

/// One of the six synthetic 2-D densities, as a density-estimation task
/// against a standard normal base. No oracle: NLL on held-out samples only.
pub fn toy2d_task(name: ToyName) -> TaskSpec {
    TaskSpec {
        name: name.name().to_string(),
        dim: 2,
        sampler_p0: Box::new(|rng, n| crate::rng::standard_normal_matrix(rng, n, 2)),
        sampler_p1: Box::new(move |rng, n| sample_toy(name, rng, n)),
        oracle: Oracle::None,
        exact_log_ratio: None,
        gaussian_marginal: None,
        preferred: InterpolantPreference::Di,
    }
}

/// Load a numeric CSV (comma-separated, `#` comment lines skipped) as a
/// density-estimation task. Rows are sampled with replacement.
pub fn load_tabular_csv(path: &std::path::Path, standardize: bool) -> Result<TaskSpec> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (line_idx, line) in text.lines().enumerate() {
        let row_no = line_idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for (col_idx, cell) in trimmed.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Csv {
                row: row_no,
                col: col_idx + 1,
                msg: format!("not a number: '{}'", cell.trim()),
            })?;
            row.push(v);
        }
        if let Some(w) = width {
            if row.len() != w {
                return Err(Error::Csv {
                    row: row_no,
                    col: row.len(),
                    msg: format!("expected {w} columns, got {}", row.len()),
                });
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }
    let d = width.ok_or(Error::Empty("csv file has no data rows"))?;
    let n = rows.len();
    let mut data: Vec<f64> = rows.into_iter().flatten().collect();

    if standardize {
        for j in 0..d {
            let mean = (0..n).map(|i| data[i * d + j]).sum::<f64>() / n as f64;
            let var = (0..n).map(|i| (data[i * d + j] - mean).powi(2)).sum::<f64>() / n as f64;
            if var <= 1e-24 {
                return Err(Error::domain(format!("column {} is constant", j + 1)));
            }
            let std = var.sqrt();
            for i in 0..n {
                data[i * d + j] = (data[i * d + j] - mean) / std;
            }
        }
    }

    let data = std::sync::Arc::new(data);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "tabular".to_string());
    Ok(TaskSpec {
        name,
        dim: d,
        sampler_p0: Box::new(move |rng, n| crate::rng::standard_normal_matrix(rng, n, d)),
        sampler_p1: Box::new(move |rng, count| {
            let mut out = Vec::with_capacity(count * d);
            for _ in 0..count {
                let i = rng.gen_range(0..n);
                out.extend_from_slice(&data[i * d..(i + 1) * d]);
            }
            out
        }),
        oracle: Oracle::None,
        exact_log_ratio: None,
        gaussian_marginal: None,
        preferred: InterpolantPreference::Di,
    })
}
