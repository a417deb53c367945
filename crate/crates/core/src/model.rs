//! Joint score network: a plain feed-forward net mapping `(x, t)` to a
//! d-vector data score plus a scalar time score, with hand-rolled reverse
//! accumulation and an adaptive-moment optimizer.
//!
//! Time enters as three features, `t`, `sin 2 pi t`, `cos 2 pi t`, which
//! eases fitting near the interval ends. The output layout is fixed: `d`
//! data-score entries followed by one time-score entry.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TIME_FEATURES: usize = 3;
/// Fixed chunking for batch parallelism keeps reductions bit-deterministic
/// regardless of thread count.
const BATCH_CHUNKS: usize = 8;

/// Network shape: data dimension and hidden widths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub data_dim: usize,
    pub hidden: Vec<usize>,
}

impl MlpSpec {
    pub fn new(data_dim: usize) -> Self {
        MlpSpec { data_dim, hidden: vec![128, 128] }
    }

    pub fn with_hidden(data_dim: usize, hidden: Vec<usize>) -> Self {
        MlpSpec { data_dim, hidden }
    }

    pub fn in_features(&self) -> usize {
        self.data_dim + TIME_FEATURES
    }

    pub fn out_features(&self) -> usize {
        self.data_dim + 1
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.in_features());
        w.extend_from_slice(&self.hidden);
        w.push(self.out_features());
        w
    }

    pub fn param_count(&self) -> usize {
        self.widths().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.data_dim == 0 {
            return Err(Error::domain("data dimension must be >= 1"));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::domain("hidden widths must be >= 1"));
        }
        Ok(())
    }
}

/// The model: spec, flat parameter vector, and optimizer moments.
#[derive(Debug, Clone)]
pub struct JointScoreModel {
    pub spec: MlpSpec,
    pub params: Vec<f64>,
    pub adam: AdamState,
}

fn silu(z: f64) -> f64 {
    z / (1.0 + (-z).exp())
}

fn silu_deriv(z: f64) -> f64 {
    let s = 1.0 / (1.0 + (-z).exp());
    s * (1.0 + z * (1.0 - s))
}

fn time_features(t: f64, out: &mut [f64]) {
    let w = 2.0 * std::f64::consts::PI * t;
    out[0] = t;
    out[1] = w.sin();
    out[2] = w.cos();
}

/// Scratch space for one forward/backward pass.
struct Workspace {
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(widths: &[usize]) -> Self {
        Workspace {
            acts: widths.iter().map(|&w| vec![0.0; w]).collect(),
            pre: widths[1..].iter().map(|&w| vec![0.0; w]).collect(),
            deltas: widths[1..].iter().map(|&w| vec![0.0; w]).collect(),
        }
    }
}

impl JointScoreModel {
    /// Hidden layers get uniform Xavier init, the output layer starts at
    /// zero so an untrained model predicts zero scores everywhere.
    pub fn init(spec: MlpSpec, rng: &mut ChaCha12Rng) -> Result<Self> {
        spec.validate()?;
        let widths = spec.widths();
        let n_layers = widths.len() - 1;
        let mut params = Vec::with_capacity(spec.param_count());
        for l in 0..n_layers {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            if l + 1 == n_layers {
                params.extend(std::iter::repeat(0.0).take(fan_in * fan_out + fan_out));
            } else {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for _ in 0..fan_in * fan_out {
                    params.push(rng.gen_range(-limit..limit));
                }
                params.extend(std::iter::repeat(0.0).take(fan_out));
            }
        }
        let n = params.len();
        Ok(JointScoreModel { spec, params, adam: AdamState::new(n) })
    }

    fn layer_offsets(&self) -> Vec<(usize, usize, usize)> {
        // (offset, fan_in, fan_out) per layer; biases follow the weights.
        let widths = self.spec.widths();
        let mut out = Vec::with_capacity(widths.len() - 1);
        let mut off = 0;
        for w in widths.windows(2) {
            out.push((off, w[0], w[1]));
            off += w[0] * w[1] + w[1];
        }
        out
    }

    fn forward_into(&self, x: &[f64], t: f64, ws: &mut Workspace) {
        let layers = self.layer_offsets();
        ws.acts[0][..x.len()].copy_from_slice(x);
        time_features(t, &mut ws.acts[0][x.len()..]);
        let n_layers = layers.len();
        for (l, &(off, fan_in, fan_out)) in layers.iter().enumerate() {
            let (weights, bias) = {
                let w = &self.params[off..off + fan_in * fan_out];
                let b = &self.params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
                (w, b)
            };
            // Split borrow of the single activation that feeds this layer.
            let (prev_slice, rest) = ws.acts.split_at_mut(l + 1);
            let input = &prev_slice[l];
            let z = &mut ws.pre[l];
            for i in 0..fan_out {
                let row = &weights[i * fan_in..(i + 1) * fan_in];
                let mut acc = bias[i];
                for j in 0..fan_in {
                    acc += row[j] * input[j];
                }
                z[i] = acc;
            }
            let act = &mut rest[0];
            if l + 1 == n_layers {
                act.copy_from_slice(z);
            } else {
                for i in 0..fan_out {
                    act[i] = silu(z[i]);
                }
            }
        }
    }

    /// Deterministic forward pass, output `[data_score (d), time_score]`.
    pub fn forward(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        if x.len() != self.spec.data_dim {
            return Err(Error::DimMismatch { expected: self.spec.data_dim, got: x.len() });
        }
        let mut ws = Workspace::new(&self.spec.widths());
        self.forward_into(x, t, &mut ws);
        Ok(ws.acts.last().unwrap().clone())
    }

    /// Time-score head evaluated at one `x` across a grid of times.
    pub fn time_scores_grid(&self, x: &[f64], ts: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.spec.data_dim {
            return Err(Error::DimMismatch { expected: self.spec.data_dim, got: x.len() });
        }
        let mut ws = Workspace::new(&self.spec.widths());
        let d = self.spec.data_dim;
        Ok(ts
            .iter()
            .map(|&t| {
                self.forward_into(x, t, &mut ws);
                ws.acts.last().unwrap()[d]
            })
            .collect())
    }
}

/// One training batch, flattened row-major.
#[derive(Debug, Clone, Default)]
pub struct TrainBatch {
    pub n: usize,
    pub d: usize,
    /// n x d interpolated points
    pub xs: Vec<f64>,
    /// n times
    pub ts: Vec<f64>,
    /// n x (d+1) regression targets, data scores then time score
    pub targets: Vec<f64>,
}

/// Mean squared error over the batch, summed across the `d+1` output
/// components, together with its parameter gradient by reverse accumulation.
pub fn cjsm_loss_grad(model: &JointScoreModel, batch: &TrainBatch) -> Result<(f64, Vec<f64>)> {
    if batch.n == 0 {
        return Err(Error::Empty("training batch"));
    }
    if batch.d != model.spec.data_dim {
        return Err(Error::DimMismatch { expected: model.spec.data_dim, got: batch.d });
    }
    if batch.targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("score targets"));
    }
    let widths = model.spec.widths();
    let layers = model.layer_offsets();
    let n_layers = layers.len();
    let out_dim = model.spec.out_features();
    let inv_n = 1.0 / batch.n as f64;

    let chunk = batch.n.div_ceil(BATCH_CHUNKS);
    let ranges: Vec<(usize, usize)> = (0..batch.n)
        .step_by(chunk)
        .map(|s| (s, (s + chunk).min(batch.n)))
        .collect();

    let partials: Vec<(f64, Vec<f64>)> = ranges
        .par_iter()
        .map(|&(lo, hi)| {
            let mut ws = Workspace::new(&widths);
            let mut grad = vec![0.0; model.params.len()];
            let mut loss = 0.0;
            for nidx in lo..hi {
                let x = &batch.xs[nidx * batch.d..(nidx + 1) * batch.d];
                model.forward_into(x, batch.ts[nidx], &mut ws);
                let y = &batch.targets[nidx * out_dim..(nidx + 1) * out_dim];
                {
                    let out = ws.acts.last().unwrap();
                    let delta_out = &mut ws.deltas[n_layers - 1];
                    for i in 0..out_dim {
                        let r = out[i] - y[i];
                        loss += r * r;
                        delta_out[i] = 2.0 * r * inv_n;
                    }
                }
                for l in (0..n_layers).rev() {
                    let (off, fan_in, fan_out) = layers[l];
                    let (wslice, g) = (
                        &model.params[off..off + fan_in * fan_out],
                        &mut grad[off..off + fan_in * fan_out + fan_out],
                    );
                    let (gw, gb) = g.split_at_mut(fan_in * fan_out);
                    let input = &ws.acts[l];
                    let delta = &ws.deltas[l];
                    for i in 0..fan_out {
                        let di = delta[i];
                        if di != 0.0 {
                            let row = &mut gw[i * fan_in..(i + 1) * fan_in];
                            for j in 0..fan_in {
                                row[j] += di * input[j];
                            }
                            gb[i] += di;
                        }
                    }
                    if l > 0 {
                        let (head, tail) = ws.deltas.split_at_mut(l);
                        let prev = &mut head[l - 1];
                        let delta = &tail[0];
                        let zprev = &ws.pre[l - 1];
                        prev.fill(0.0);
                        // row-major accumulation keeps W access contiguous
                        for i in 0..fan_out {
                            let di = delta[i];
                            if di != 0.0 {
                                let row = &wslice[i * fan_in..(i + 1) * fan_in];
                                for j in 0..fan_in {
                                    prev[j] += row[j] * di;
                                }
                            }
                        }
                        for j in 0..fan_in {
                            prev[j] *= silu_deriv(zprev[j]);
                        }
                    }
                }
            }
            (loss, grad)
        })
        .collect();

    let mut grad = vec![0.0; model.params.len()];
    let mut loss = 0.0;
    for (l, g) in &partials {
        loss += l;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    Ok((loss * inv_n, grad))
}

/// Adaptive-moment optimizer state.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], step: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn apply(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        let b1t = 1.0 - self.beta1.powi(self.step as i32);
        let b2t = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / b1t;
            let vhat = self.v[i] / b2t;
            params[i] -= lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

/// Soft optimal uncertainty weights: `lambda_j ∝ exp(1/(T (L_j + eps)))`,
/// normalized to the simplex. Evaluated with max subtraction so tiny losses
/// cannot overflow. Treated as constants by the caller (stop-gradient).
pub fn uwso_weights(losses: &[f64], temperature: f64, eps: f64) -> Result<Vec<f64>> {
    if losses.is_empty() {
        return Err(Error::Empty("uwso losses"));
    }
    if !(temperature > 0.0) {
        return Err(Error::domain("uwso temperature must be positive"));
    }
    let exps: Vec<f64> = losses.iter().map(|&l| 1.0 / (temperature * (l + eps))).collect();
    let m = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let un: Vec<f64> = exps.iter().map(|&e| (e - m).exp()).collect();
    let s: f64 = un.iter().sum();
    // Floor at the smallest positive double: weights are positive by
    // definition even when the softmax underflows.
    Ok(un.iter().map(|&u| (u / s).max(f64::MIN_POSITIVE)).collect())
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"MVPJ";
const CHECKPOINT_VERSION: u32 = 1;

/// Flat binary checkpoint: magic, version, dims, little-endian doubles.
pub fn write_checkpoint<W: std::io::Write>(w: &mut W, model: &JointScoreModel) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(model.spec.data_dim as u32).to_le_bytes())?;
    w.write_all(&(model.spec.hidden.len() as u32).to_le_bytes())?;
    for &h in &model.spec.hidden {
        w.write_all(&(h as u32).to_le_bytes())?;
    }
    w.write_all(&(model.params.len() as u64).to_le_bytes())?;
    for &p in &model.params {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint<R: std::io::Read>(r: &mut R) -> Result<JointScoreModel> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    r.read_exact(&mut u32buf)?;
    let data_dim = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let n_hidden = u32::from_le_bytes(u32buf) as usize;
    let mut hidden = Vec::with_capacity(n_hidden);
    for _ in 0..n_hidden {
        r.read_exact(&mut u32buf)?;
        hidden.push(u32::from_le_bytes(u32buf) as usize);
    }
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)?;
    let n_params = u64::from_le_bytes(u64buf) as usize;
    let spec = MlpSpec::with_hidden(data_dim, hidden);
    spec.validate()
        .map_err(|e| Error::Checkpoint(format!("invalid spec: {e}")))?;
    if n_params != spec.param_count() {
        return Err(Error::Checkpoint(format!(
            "parameter count {n_params} does not match spec ({})",
            spec.param_count()
        )));
    }
    let mut params = Vec::with_capacity(n_params);
    let mut f64buf = [0u8; 8];
    for _ in 0..n_params {
        r.read_exact(&mut f64buf)?;
        params.push(f64::from_le_bytes(f64buf));
    }
    let adam = AdamState::new(params.len());
    Ok(JointScoreModel { spec, params, adam })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;

    fn small_model(seed: u64) -> JointScoreModel {
        let mut rng = stream_rng(seed, "model.init");
        JointScoreModel::init(MlpSpec::with_hidden(2, vec![16, 16]), &mut rng).unwrap()
    }

    fn randomize(model: &mut JointScoreModel, seed: u64) {
        let mut rng = stream_rng(seed, "model.randomize");
        for p in model.params.iter_mut() {
            *p += 0.1 * rng.gen_range(-1.0..1.0);
        }
    }

    #[test]
    fn zero_final_layer_outputs_zero() {
        let model = small_model(1);
        for &t in &[0.1, 0.5, 0.9] {
            let out = model.forward(&[0.3, -0.7], t).unwrap();
            assert!(out.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn forward_is_stateless_across_order() {
        let mut model = small_model(2);
        randomize(&mut model, 3);
        let a = model.forward(&[0.1, 0.2], 0.4).unwrap();
        let _ = model.forward(&[5.0, -3.0], 0.9).unwrap();
        let b = model.forward(&[0.1, 0.2], 0.4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn loss_zero_when_output_equals_target() {
        let model = small_model(4); // outputs zero
        let batch = TrainBatch {
            n: 3,
            d: 2,
            xs: vec![0.0; 6],
            ts: vec![0.2, 0.5, 0.8],
            targets: vec![0.0; 9],
        };
        let (loss, grad) = cjsm_loss_grad(&model, &batch).unwrap();
        assert_abs_diff_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn zero_model_loss_is_target_mean_square() {
        let model = small_model(5);
        let targets = vec![1.0, 2.0, 3.0, -1.0, 0.5, 2.0];
        let msq: f64 = targets.iter().map(|v| v * v).sum::<f64>() / 2.0;
        let batch = TrainBatch {
            n: 2,
            d: 2,
            xs: vec![0.3, 0.4, -0.1, 0.9],
            ts: vec![0.3, 0.6],
            targets,
        };
        let (loss, _) = cjsm_loss_grad(&model, &batch).unwrap();
        assert_relative_eq!(loss, msq, max_relative = 1e-12);
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut model = small_model(6);
        randomize(&mut model, 7);
        let mut rng = stream_rng(8, "batch");
        let n = 5;
        let batch = TrainBatch {
            n,
            d: 2,
            xs: (0..n * 2).map(|_| rng.gen_range(-1.5..1.5)).collect(),
            ts: (0..n).map(|_| rng.gen_range(0.05..0.95)).collect(),
            targets: (0..n * 3).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        };
        let (_, grad) = cjsm_loss_grad(&model, &batch).unwrap();
        let mut idx_rng = stream_rng(9, "probe");
        for _ in 0..20 {
            let i = idx_rng.gen_range(0..model.params.len());
            let h = 1e-5 * model.params[i].abs().max(1.0);
            let orig = model.params[i];
            model.params[i] = orig + h;
            let (up, _) = cjsm_loss_grad(&model, &batch).unwrap();
            model.params[i] = orig - h;
            let (down, _) = cjsm_loss_grad(&model, &batch).unwrap();
            model.params[i] = orig;
            let fd = (up - down) / (2.0 * h);
            if fd.abs() > 1e-10 {
                assert!(
                    ((grad[i] - fd) / fd).abs() <= 1e-4,
                    "param {i}: grad={} fd={fd}",
                    grad[i]
                );
            } else {
                assert!(grad[i].abs() < 1e-8);
            }
        }
    }

    #[test]
    fn adam_first_step_moves_by_lr_sign() {
        let mut model = small_model(10);
        let n = model.params.len();
        let grad: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 3.0 } else { -0.25 }).collect();
        let before = model.params.clone();
        let mut adam = AdamState::new(n);
        adam.apply(&mut model.params, &grad, 1e-3);
        for i in 0..n {
            let step = model.params[i] - before[i];
            assert_relative_eq!(step, -1e-3 * grad[i].signum(), max_relative = 1e-6);
        }
    }

    #[test]
    fn uwso_examples() {
        let w = uwso_weights(&[3.7, 3.7, 3.7], 2.0, 1e-8).unwrap();
        for v in &w {
            assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-12);
        }

        let w = uwso_weights(&[1.0, 1e6], 2.0, 1e-12).unwrap();
        let e = 0.5f64.exp();
        assert_relative_eq!(w[0], e / (e + 1.0), max_relative = 1e-4);
        assert_relative_eq!(w[1], 1.0 / (e + 1.0), max_relative = 1e-4);

        assert_eq!(uwso_weights(&[42.0], 2.0, 1e-8).unwrap(), vec![1.0]);

        // tiny losses: stabilized evaluation must stay finite and normalized
        let w = uwso_weights(&[0.0, 1.0], 2.0, 1e-8).unwrap();
        assert!(w.iter().all(|v| v.is_finite() && *v > 0.0));
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn checkpoint_round_trip_bytes() {
        let mut model = small_model(11);
        randomize(&mut model, 12);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &model).unwrap();
        let back = read_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(model.spec, back.spec);
        assert_eq!(model.params, back.params);
        let mut buf2 = Vec::new();
        write_checkpoint(&mut buf2, &back).unwrap();
        assert_eq!(buf, buf2);

        let mut corrupted = buf.clone();
        corrupted[0] = b'X';
        assert!(read_checkpoint(&mut corrupted.as_slice()).is_err());
    }
}
