//! A schedule handle uniting the fixed baselines and the learned path.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kmm::{constrain, eval_kmm_params, KmmLatentParams, KmmParams};
use crate::schedules::{eval_fixed, ConstraintKind, FixedScheduleKind, ScheduleEval};

/// Either a named fixed schedule or a learned mixture path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PathSchedule {
    Fixed(FixedScheduleKind),
    Kmm { latent: KmmLatentParams, constraint: ConstraintKind },
}

impl PathSchedule {
    pub fn kmm(latent: KmmLatentParams, constraint: ConstraintKind) -> Self {
        PathSchedule::Kmm { latent, constraint }
    }

    pub fn constraint(&self) -> ConstraintKind {
        match self {
            PathSchedule::Fixed(k) => k.constraint(),
            PathSchedule::Kmm { constraint, .. } => *constraint,
        }
    }

    pub fn name(&self) -> String {
        match self {
            PathSchedule::Fixed(k) => k.name().to_string(),
            PathSchedule::Kmm { latent, .. } => format!("kmm{}", latent.k),
        }
    }

    /// Precompile into a cheap evaluator (constrains mixture parameters once).
    pub fn compile(&self) -> Result<CompiledSchedule> {
        Ok(match self {
            PathSchedule::Fixed(k) => CompiledSchedule::Fixed(*k),
            PathSchedule::Kmm { latent, constraint } => {
                CompiledSchedule::Kmm { params: constrain(latent)?, constraint: *constraint }
            }
        })
    }

    pub fn eval(&self, t: f64) -> Result<ScheduleEval> {
        Ok(self.compile()?.eval(t))
    }
}

/// Evaluation-ready form of a [`PathSchedule`].
#[derive(Debug, Clone)]
pub enum CompiledSchedule {
    Fixed(FixedScheduleKind),
    Kmm { params: KmmParams, constraint: ConstraintKind },
}

impl CompiledSchedule {
    pub fn eval(&self, t: f64) -> ScheduleEval {
        match self {
            CompiledSchedule::Fixed(k) => eval_fixed(*k, t),
            CompiledSchedule::Kmm { params, constraint } => {
                eval_kmm_params(params, *constraint, t)
            }
        }
    }

    /// Evaluate on a whole grid.
    pub fn eval_grid(&self, ts: &[f64]) -> Vec<ScheduleEval> {
        ts.iter().map(|&t| self.eval(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmm::init_diverse;

    #[test]
    fn uniform_kmm_matches_linear_bitwise() {
        // K=1, a=b=1 is the uniform mixture, whose path is exactly linear.
        let latent = KmmLatentParams {
            k: 1,
            w_hat: vec![0.0],
            a_hat: vec![crate::kmm::inv_softplus(1.0)],
            b_hat: vec![crate::kmm::inv_softplus(1.0)],
        };
        // inv_softplus round-trip is not exact for a=1, so build params directly.
        let compiled = CompiledSchedule::Kmm {
            params: KmmParams { weights: vec![1.0], a: vec![1.0], b: vec![1.0] },
            constraint: ConstraintKind::Affine,
        };
        let _ = latent;
        let lin = CompiledSchedule::Fixed(FixedScheduleKind::Linear);
        for &t in &crate::quad::linspace(1e-5, 1.0 - 1e-5, 257) {
            let a = compiled.eval(t);
            let b = lin.eval(t);
            assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
            assert_eq!(a.beta.to_bits(), b.beta.to_bits());
            assert_eq!(a.dalpha.to_bits(), b.dalpha.to_bits());
            assert_eq!(a.dbeta.to_bits(), b.dbeta.to_bits());
        }
    }

    #[test]
    fn kmm_handle_evaluates() {
        let sched = PathSchedule::kmm(init_diverse(5).unwrap(), ConstraintKind::Affine);
        let e = sched.eval(0.5).unwrap();
        assert!(e.alpha > 0.0 && e.alpha < 1.0);
        assert!((e.alpha + e.beta - 1.0).abs() < 1e-12);
    }
}
