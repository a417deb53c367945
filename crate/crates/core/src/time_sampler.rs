//! Variance-based importance sampling of training times, `p(t) ∝ 1/(Var + eps)`.
//!
//! Sampling concentrates where the conditional score targets have low
//! variance, which both stabilizes training and absorbs the otherwise
//! optimal inverse-variance loss weighting into the time distribution.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::path::PathSchedule;
use crate::variance::{integrand, DataMoments, VarianceConfig};

/// Categorical table over time bins. The grid (bin midpoints) depends only
/// on the bin count and clamp, so rebuilding after a path update changes
/// weights but never the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSamplerTable {
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    pub probs: Vec<f64>,
    pub cdf: Vec<f64>,
}

/// Bin midpoints for `bins` equal bins on the clamped interval.
pub fn sampler_grid(bins: usize, t_clamp: f64) -> Vec<f64> {
    let width = (1.0 - 2.0 * t_clamp) / bins as f64;
    (0..bins).map(|i| t_clamp + (i as f64 + 0.5) * width).collect()
}

impl TimeSamplerTable {
    /// Build from per-bin variances: `weight_i = 1 / (var_i + eps_w)`.
    pub fn from_variances(grid: Vec<f64>, variances: &[f64], eps_w: f64) -> Result<Self> {
        if grid.is_empty() || grid.len() != variances.len() {
            return Err(Error::DimMismatch { expected: grid.len(), got: variances.len() });
        }
        if variances.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("time-sampler variance grid"));
        }
        let weights: Vec<f64> = variances.iter().map(|v| 1.0 / (v + eps_w)).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::NonFinite("time-sampler weight normalization"));
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        let last = *cdf.last().unwrap();
        debug_assert!((last - 1.0).abs() < 1e-12);
        *cdf.last_mut().unwrap() = 1.0;
        Ok(TimeSamplerTable { grid, weights, probs, cdf })
    }

    /// Inverse-CDF lookup; returns the selected bin's midpoint.
    pub fn sample_t(&self, u: f64) -> f64 {
        let idx = self.cdf.partition_point(|&c| c <= u);
        self.grid[idx.min(self.grid.len() - 1)]
    }

    pub fn draw(&self, rng: &mut ChaCha12Rng) -> f64 {
        self.sample_t(rng.gen::<f64>())
    }

    /// CSV dump: `t,weight,probability` rows.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t,weight,probability")?;
        for i in 0..self.grid.len() {
            writeln!(w, "{},{},{}", self.grid[i], self.weights[i], self.probs[i])?;
        }
        Ok(())
    }
}

/// Evaluate the variance integrand of `schedule` on the sampler grid and
/// build the table. `cfg.grid_points` is the bin count.
pub fn build_table(
    schedule: &PathSchedule,
    cfg: &VarianceConfig,
    m: &DataMoments,
    eps_w: f64,
) -> Result<TimeSamplerTable> {
    if !(eps_w > 0.0) {
        return Err(Error::domain("eps_w must be positive"));
    }
    cfg.validate()?;
    let compiled = schedule.compile()?;
    let grid = sampler_grid(cfg.grid_points, cfg.t_clamp);
    let mut vars = Vec::with_capacity(grid.len());
    for &t in &grid {
        let v = integrand(&compiled.eval(t), &cfg.interpolant, m)?;
        if !v.is_finite() {
            return Err(Error::NonFinite("variance on sampler grid"));
        }
        vars.push(v);
    }
    TimeSamplerTable::from_variances(grid, &vars, eps_w)
}
