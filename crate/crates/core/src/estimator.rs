//! Log-ratio inference: integrate the time-score head over the path.
//!
//! `log r(x) = integral of s(x, t) dt`, approximated on a clamped grid of
//! `I + 1` score evaluations. The default trapezoid rule is second order;
//! the inclusive Riemann average `(1/I) sum_{i=0..I} s_i` is kept
//! selectable for fidelity with existing implementations despite its
//! `O(1/I)` bias.

use rayon::prelude::*;

use crate::benchmarks::GaussianMarginal;
use crate::error::{Error, Result};
use crate::model::JointScoreModel;
use crate::path::CompiledSchedule;
use crate::quad::{linspace, trapezoid_uniform};
use crate::schedules::EPS_T;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationRule {
    Trapezoid,
    PaperRiemann,
}

impl IntegrationRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "trapezoid" => Ok(IntegrationRule::Trapezoid),
            "paper_riemann" => Ok(IntegrationRule::PaperRiemann),
            other => Err(Error::domain(format!("unknown integration rule '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IntegrationRule::Trapezoid => "trapezoid",
            IntegrationRule::PaperRiemann => "paper_riemann",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceConfig {
    /// Number of integration steps I (the grid has I + 1 points).
    pub steps: usize,
    pub rule: IntegrationRule,
    pub t_clamp: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig { steps: 1000, rule: IntegrationRule::Trapezoid, t_clamp: EPS_T }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 8 {
            return Err(Error::domain("integration steps must be >= 8"));
        }
        Ok(())
    }

    /// The evaluation grid of `steps + 1` times.
    pub fn grid(&self) -> Vec<f64> {
        match self.rule {
            IntegrationRule::Trapezoid => {
                linspace(self.t_clamp, 1.0 - self.t_clamp, self.steps + 1)
            }
            IntegrationRule::PaperRiemann => (0..=self.steps)
                .map(|i| {
                    (i as f64 / self.steps as f64).clamp(self.t_clamp, 1.0 - self.t_clamp)
                })
                .collect(),
        }
    }
}

/// Anything that can score one sample across a time grid.
pub trait TimeScoreGrid: Sync {
    fn scores(&self, x: &[f64], ts: &[f64]) -> Result<Vec<f64>>;
}

impl TimeScoreGrid for JointScoreModel {
    fn scores(&self, x: &[f64], ts: &[f64]) -> Result<Vec<f64>> {
        self.time_scores_grid(x, ts)
    }
}

/// Adapter for plain score closures `(x, t) -> s`.
pub struct FnScore<F>(pub F);

impl<F: Fn(&[f64], f64) -> f64 + Sync> TimeScoreGrid for FnScore<F> {
    fn scores(&self, x: &[f64], ts: &[f64]) -> Result<Vec<f64>> {
        Ok(ts.iter().map(|&t| (self.0)(x, t)).collect())
    }
}

/// Exact marginal time score of a Gaussian pair under a deterministic
/// interpolant, with per-grid-point coefficients precomputed so one score
/// evaluation costs O(d).
pub struct PreparedGaussianScore {
    /// per grid point, per eigendirection: dv / (2 v^2)
    quad_coef: Vec<Vec<f64>>,
    /// per grid point: sum_j -dv_j / (2 v_j)
    const_term: Vec<f64>,
    marginal: GaussianMarginal,
    n_points: usize,
}

impl PreparedGaussianScore {
    pub fn new(marginal: &GaussianMarginal, schedule: &CompiledSchedule, ts: &[f64]) -> Self {
        let mut quad_coef = Vec::with_capacity(ts.len());
        let mut const_term = Vec::with_capacity(ts.len());
        for &t in ts {
            let s = schedule.eval(t);
            let (a2, b2) = (s.alpha * s.alpha, s.beta * s.beta);
            let da = 2.0 * s.alpha * s.dalpha;
            let db = 2.0 * s.beta * s.dbeta;
            let mut row = Vec::with_capacity(marginal.eigvals.len());
            let mut c = 0.0;
            for &lam in &marginal.eigvals {
                let v = a2 + b2 * lam;
                let dv = da + db * lam;
                row.push(dv / (2.0 * v * v));
                c -= dv / (2.0 * v);
            }
            quad_coef.push(row);
            const_term.push(c);
        }
        PreparedGaussianScore {
            quad_coef,
            const_term,
            marginal: marginal.clone(),
            n_points: ts.len(),
        }
    }
}

impl TimeScoreGrid for PreparedGaussianScore {
    fn scores(&self, x: &[f64], ts: &[f64]) -> Result<Vec<f64>> {
        if ts.len() != self.n_points {
            return Err(Error::DimMismatch { expected: self.n_points, got: ts.len() });
        }
        let y = self.marginal.rotate(x);
        let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
        Ok((0..ts.len())
            .map(|i| {
                let mut s = self.const_term[i];
                for (c, v) in self.quad_coef[i].iter().zip(&y2) {
                    s += c * v;
                }
                s
            })
            .collect())
    }
}

/// Combine grid scores per the configured rule.
pub fn combine_scores(scores: &[f64], cfg: &InferenceConfig) -> f64 {
    match cfg.rule {
        IntegrationRule::Trapezoid => {
            let step = (1.0 - 2.0 * cfg.t_clamp) / cfg.steps as f64;
            trapezoid_uniform(scores, step)
        }
        IntegrationRule::PaperRiemann => {
            scores.iter().sum::<f64>() / cfg.steps as f64
        }
    }
}

/// `log r(x)` by numeric integration of the time score.
pub fn log_ratio(score: &impl TimeScoreGrid, x: &[f64], cfg: &InferenceConfig) -> Result<f64> {
    cfg.validate()?;
    let ts = cfg.grid();
    let s = score.scores(x, &ts)?;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("time score on integration grid"));
    }
    Ok(combine_scores(&s, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub mi: f64,
    pub std_err: f64,
    pub n: usize,
}

/// Per-sample log ratios over a flat row-major batch. Parallel over
/// samples; the output order matches the input order, so results are
/// deterministic.
pub fn log_ratios(
    score: &impl TimeScoreGrid,
    samples: &[f64],
    d: usize,
    cfg: &InferenceConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if d == 0 || samples.len() % d != 0 {
        return Err(Error::DimMismatch { expected: d, got: samples.len() % d });
    }
    if samples.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let ts = cfg.grid();
    samples
        .par_chunks(d)
        .map(|x| {
            let s = score.scores(x, &ts)?;
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("time score on integration grid"));
            }
            Ok(combine_scores(&s, cfg))
        })
        .collect()
}

/// Mean and standard error of `log_ratio` over samples from the joint.
pub fn estimate_mi(
    score: &impl TimeScoreGrid,
    samples: &[f64],
    d: usize,
    cfg: &InferenceConfig,
) -> Result<MiEstimate> {
    let values = log_ratios(score, samples, d, cfg)?;
    Ok(mi_from_log_ratios(&values))
}

/// Aggregate per-sample log ratios into an MI estimate.
pub fn mi_from_log_ratios(values: &[f64]) -> MiEstimate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    MiEstimate { mi: mean, std_err: (var / n as f64).sqrt(), n }
}

/// `log p(x) = log r(x) + log p0(x)` for a known base density.
pub fn log_likelihood(
    score: &impl TimeScoreGrid,
    x: &[f64],
    base_log_pdf: impl Fn(&[f64]) -> f64,
    cfg: &InferenceConfig,
) -> Result<f64> {
    Ok(log_ratio(score, x, cfg)? + base_log_pdf(x))
}
