//! Learnable path schedule backed by a Kumaraswamy mixture.
//!
//! The mixture CDF `F(t) = sum_k w_k [1 - (1 - t^a_k)^b_k]` defines
//! `alpha(t) = 1 - F(t)`, which is monotone decreasing from 1 to 0 by
//! construction, and `dalpha(t) = -pdf(t)`. Unconstrained latent parameters
//! map to valid mixture parameters through softmax (weights) and softplus
//! (shapes), so the path can be optimized without explicit constraints.
//!
//! All powers go through [`stable_pow`], which evaluates `x^y` as
//! `exp(y * log1p(x - 1))` to avoid cancellation near the interval ends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedules::{clamp_t, couple_beta, ConstraintKind, ScheduleEval};

/// Unconstrained latent parameters of a K-component mixture path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmmLatentParams {
    #[serde(rename = "K")]
    pub k: usize,
    pub w_hat: Vec<f64>,
    pub a_hat: Vec<f64>,
    pub b_hat: Vec<f64>,
}

/// Constrained mixture parameters: simplex weights and positive shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct KmmParams {
    pub weights: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl KmmLatentParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::domain("component count K must be >= 1"));
        }
        for v in [&self.w_hat, &self.a_hat, &self.b_hat] {
            if v.len() != self.k {
                return Err(Error::DimMismatch { expected: self.k, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("latent parameters"));
            }
        }
        Ok(())
    }

    /// Flat view (w_hat, a_hat, b_hat concatenated), for generic optimizers.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.k);
        out.extend_from_slice(&self.w_hat);
        out.extend_from_slice(&self.a_hat);
        out.extend_from_slice(&self.b_hat);
        out
    }

    pub fn from_flat(k: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != 3 * k {
            return Err(Error::DimMismatch { expected: 3 * k, got: flat.len() });
        }
        Ok(KmmLatentParams {
            k,
            w_hat: flat[..k].to_vec(),
            a_hat: flat[k..2 * k].to_vec(),
            b_hat: flat[2 * k..].to_vec(),
        })
    }
}

/// `x^y` computed as `exp(y * log1p(x - 1))`, exact for `y in {0, 1}`.
///
/// Errors when `x <= 0`.
pub fn stable_pow(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("stable_pow requires x > 0, got {x}")));
    }
    Ok(spow(x, y))
}

/// Internal power with limit handling at x = 0 (arises when t^a rounds to 1).
fn spow(x: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 1.0;
    }
    if y == 1.0 {
        return x;
    }
    if x <= 0.0 {
        return if y > 0.0 { 0.0 } else { f64::INFINITY };
    }
    (y * (x - 1.0).ln_1p()).exp()
}

/// Overflow-safe `log(1 + e^z)`.
pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else if z < -30.0 {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

/// Preimage of [`softplus`]: returns `z` with `softplus(z) = x` for `x > 0`.
pub fn inv_softplus(x: f64) -> f64 {
    if x > 1.0 {
        // ln(e^x - 1) = x + ln(1 - e^-x)
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|&v| v / s).collect()
}

/// Map latent parameters to valid mixture parameters.
pub fn constrain(latent: &KmmLatentParams) -> Result<KmmParams> {
    latent.validate()?;
    Ok(KmmParams {
        weights: softmax(&latent.w_hat),
        a: latent.a_hat.iter().map(|&z| softplus(z)).collect(),
        b: latent.b_hat.iter().map(|&z| softplus(z)).collect(),
    })
}

/// Mixture CDF at clamped `t`, in `[0, 1]`.
pub fn kmm_cdf(p: &KmmParams, t: f64) -> f64 {
    let t = clamp_t(t);
    let mut f = 0.0;
    for k in 0..p.weights.len() {
        let t_a = spow(t, p.a[k]);
        f += p.weights[k] * (1.0 - spow(1.0 - t_a, p.b[k]));
    }
    f.clamp(0.0, 1.0)
}

/// Mixture survival function `1 - F(t)`, summed directly so that tiny
/// values near `t = 1` keep full relative precision.
pub fn kmm_survival(p: &KmmParams, t: f64) -> f64 {
    let t = clamp_t(t);
    let mut s = 0.0;
    for k in 0..p.weights.len() {
        let t_a = spow(t, p.a[k]);
        s += p.weights[k] * spow(1.0 - t_a, p.b[k]);
    }
    s
}

/// Mixture PDF at clamped `t`.
pub fn kmm_pdf(p: &KmmParams, t: f64) -> f64 {
    let t = clamp_t(t);
    let mut d = 0.0;
    for k in 0..p.weights.len() {
        let (a, b) = (p.a[k], p.b[k]);
        let t_a = spow(t, a);
        d += p.weights[k] * a * b * spow(t, a - 1.0) * spow(1.0 - t_a, b - 1.0);
    }
    d
}

/// Schedule point of the learned path: `alpha = 1 - F`, `dalpha = -pdf`,
/// with `(beta, dbeta)` from the constraint coupling.
pub fn eval_kmm_params(p: &KmmParams, kind: ConstraintKind, t: f64) -> ScheduleEval {
    let t = clamp_t(t);
    let alpha = kmm_survival(p, t);
    let dalpha = -kmm_pdf(p, t);
    let (beta, dbeta) = couple_beta(alpha, dalpha, kind);
    ScheduleEval { t, alpha, beta, dalpha, dbeta }
}

/// Latent-parameter convenience wrapper around [`eval_kmm_params`].
pub fn eval_kmm_schedule(
    latent: &KmmLatentParams,
    kind: ConstraintKind,
    t: f64,
) -> Result<ScheduleEval> {
    let p = constrain(latent)?;
    Ok(eval_kmm_params(&p, kind, t))
}

/// Latent initialization with component modes spread across `[0, 1]`:
/// right-skewed shapes in the first half, left-skewed in the second,
/// uniform weights. `constrain(init_diverse(k))` reproduces the target
/// shape values to machine precision.
pub fn init_diverse(k: usize) -> Result<KmmLatentParams> {
    if k == 0 {
        return Err(Error::domain("component count K must be >= 1"));
    }
    let mut a_hat = Vec::with_capacity(k);
    let mut b_hat = Vec::with_capacity(k);
    for i in 0..k {
        let tau = (i as f64 + 0.5) / (k as f64 + 1.0);
        let (a, b) = if tau < 0.5 {
            (1.5 + 0.5 * i as f64, 3.0 + 2.0 * (k - i) as f64)
        } else {
            (3.0 + 2.0 * i as f64, 1.5 + 0.5 * (k - i) as f64)
        };
        a_hat.push(inv_softplus(a));
        b_hat.push(inv_softplus(b));
    }
    let w_hat = vec![(1.0 / k as f64).ln(); k];
    Ok(KmmLatentParams { k, w_hat, a_hat, b_hat })
}

/// Component modes `((a - 1) / (a b - 1))^(1/a)`, defined for `a, b > 1`.
/// Diagnostic only; reported in run manifests.
pub fn kmm_modes(p: &KmmParams) -> Vec<Option<f64>> {
    p.a.iter()
        .zip(&p.b)
        .map(|(&a, &b)| {
            if a > 1.0 && b > 1.0 {
                Some(((a - 1.0) / (a * b - 1.0)).powf(1.0 / a))
            } else {
                None
            }
        })
        .collect()
}
