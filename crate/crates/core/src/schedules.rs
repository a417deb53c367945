//! Fixed interpolation path schedules and constraint coupling.
//!
//! A path schedule is a pair `(alpha(t), beta(t))` on `t in [0, 1]` with
//! `alpha(0) = beta(1) = 1` and `alpha(1) = beta(0) = 0`, under either the
//! affine constraint `alpha + beta = 1` or the spherical constraint
//! `alpha^2 + beta^2 = 1`. Evaluation clamps `t` into `[EPS_T, 1 - EPS_T]`
//! to keep endpoint derivatives finite.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global time clamp applied before evaluating any schedule.
pub const EPS_T: f64 = 1e-5;

/// Additive guard under the square root of the spherical coupling.
pub const EPS_S: f64 = 1e-5;

/// Clamp `t` into `[EPS_T, 1 - EPS_T]`.
pub fn clamp_t(t: f64) -> f64 {
    t.clamp(EPS_T, 1.0 - EPS_T)
}

/// Clamp `t` into `[eps, 1 - eps]` for a configurable clamp.
pub fn clamp_t_with(t: f64, eps: f64) -> f64 {
    t.clamp(eps, 1.0 - eps)
}

/// Coupling rule deriving `beta` from `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    /// alpha + beta = 1
    Affine,
    /// alpha^2 + beta^2 = 1
    Spherical,
}

impl ConstraintKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "affine" => Ok(ConstraintKind::Affine),
            "spherical" => Ok(ConstraintKind::Spherical),
            other => Err(Error::domain(format!("unknown constraint '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConstraintKind::Affine => "affine",
            ConstraintKind::Spherical => "spherical",
        }
    }
}

/// One point of a schedule: values and time derivatives, plus the clamped
/// time they were evaluated at (the DDBI noise variance needs it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEval {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub dalpha: f64,
    pub dbeta: f64,
}

/// The five baseline schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedScheduleKind {
    Linear,
    Vp { beta0: f64, beta1: f64 },
    Cosine { s: f64 },
    Follmer,
    Trigonometric,
}

impl FixedScheduleKind {
    pub fn vp_default() -> Self {
        FixedScheduleKind::Vp { beta0: 0.1, beta1: 20.0 }
    }

    pub fn cosine_default() -> Self {
        FixedScheduleKind::Cosine { s: 0.008 }
    }

    /// All five baselines with their default parameters.
    pub fn all_defaults() -> [FixedScheduleKind; 5] {
        [
            FixedScheduleKind::Linear,
            FixedScheduleKind::vp_default(),
            FixedScheduleKind::cosine_default(),
            FixedScheduleKind::Follmer,
            FixedScheduleKind::Trigonometric,
        ]
    }

    /// The constraint each baseline satisfies.
    pub fn constraint(&self) -> ConstraintKind {
        match self {
            FixedScheduleKind::Linear => ConstraintKind::Affine,
            _ => ConstraintKind::Spherical,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FixedScheduleKind::Linear => "linear",
            FixedScheduleKind::Vp { .. } => "vp",
            FixedScheduleKind::Cosine { .. } => "cosine",
            FixedScheduleKind::Follmer => "follmer",
            FixedScheduleKind::Trigonometric => "trig",
        }
    }

    /// Accepts the lowercase names used in CLI and config files.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(FixedScheduleKind::Linear),
            "vp" => Ok(FixedScheduleKind::vp_default()),
            "cosine" => Ok(FixedScheduleKind::cosine_default()),
            "follmer" => Ok(FixedScheduleKind::Follmer),
            "trig" | "trigonometric" => Ok(FixedScheduleKind::Trigonometric),
            other => Err(Error::domain(format!("unknown schedule '{other}'"))),
        }
    }
}

/// Derive `(beta, dbeta)` from `(alpha, dalpha)` under the given constraint.
///
/// Spherical uses `beta = sqrt(1 - alpha^2 + EPS_S)`; the additive guard
/// keeps `dbeta = -alpha * dalpha / beta` finite at `alpha = 1`.
pub fn couple_beta(alpha: f64, dalpha: f64, kind: ConstraintKind) -> (f64, f64) {
    match kind {
        ConstraintKind::Affine => (1.0 - alpha, -dalpha),
        ConstraintKind::Spherical => {
            let beta = (1.0 - alpha * alpha + EPS_S).sqrt();
            (beta, -alpha * dalpha / beta)
        }
    }
}

/// Closed-form evaluation of a fixed schedule at clamped `t`.
pub fn eval_fixed(kind: FixedScheduleKind, t: f64) -> ScheduleEval {
    let t = clamp_t(t);
    match kind {
        FixedScheduleKind::Linear => {
            let alpha = 1.0 - t;
            let dalpha = -1.0;
            // Affine coupling, so the derived beta agrees bit-for-bit with a
            // degenerate (uniform) learned path.
            let (beta, dbeta) = couple_beta(alpha, dalpha, ConstraintKind::Affine);
            ScheduleEval { t, alpha, beta, dalpha, dbeta }
        }
        FixedScheduleKind::Vp { beta0, beta1 } => {
            let rate = 0.5 * ((beta1 - beta0) * t + beta0);
            let alpha = (-0.25 * t * t * (beta1 - beta0) - 0.5 * t * beta0).exp();
            let dalpha = -rate * alpha;
            let beta = (1.0 - alpha * alpha).sqrt();
            let dbeta = alpha * alpha * rate / beta;
            ScheduleEval { t, alpha, beta, dalpha, dbeta }
        }
        FixedScheduleKind::Cosine { s } => {
            let denom = (0.5 * PI * s / (1.0 + s)).cos();
            let arg = 0.5 * PI * (t + s) / (1.0 + s);
            let abar = arg.cos() / denom;
            let dabar = -(0.5 * PI / (1.0 + s)) * arg.sin() / denom;
            let alpha = abar.sqrt();
            let beta = (1.0 - abar).sqrt();
            let dalpha = dabar / (2.0 * alpha);
            let dbeta = -dabar / (2.0 * beta);
            ScheduleEval { t, alpha, beta, dalpha, dbeta }
        }
        FixedScheduleKind::Follmer => {
            let alpha = (1.0 - t * t).sqrt();
            let dalpha = -t / alpha;
            ScheduleEval { t, alpha, beta: t, dalpha, dbeta: 1.0 }
        }
        FixedScheduleKind::Trigonometric => {
            let (sin, cos) = (0.5 * PI * t).sin_cos();
            ScheduleEval {
                t,
                alpha: cos,
                beta: sin,
                dalpha: -0.5 * PI * sin,
                dbeta: 0.5 * PI * cos,
            }
        }
    }
}
