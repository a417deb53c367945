//! Training loop: conditional joint score matching with an alternating
//! path update.
//!
//! Each step draws times from the variance-based sampler, builds bridge
//! samples and closed-form conditional targets for the current path, and
//! takes one adaptive-moment step on the network. Every
//! `path_update_every` steps the learned path takes one descent step on
//! the analytic path variance and the time sampler is rebuilt. The two
//! objectives are balanced by soft optimal uncertainty weights; the path
//! update itself uses the raw variance gradient.

use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::interpolants::{ddbi_targets, di_targets, sample_ddbi, sample_di, DdbiTimeForm};
use crate::kmm::{init_diverse, KmmLatentParams};
use crate::model::{cjsm_loss_grad, uwso_weights, JointScoreModel, MlpSpec, TrainBatch};
use crate::path::{CompiledSchedule, PathSchedule};
use crate::rng::{standard_normal_matrix, stream_rng};
use crate::schedules::{ConstraintKind, FixedScheduleKind, EPS_T};
use crate::time_sampler::{build_table, TimeSamplerTable};
use crate::variance::{
    estimate_moments, optimize_path, path_variance, DataMoments, InterpolantKind,
    VarianceConfig,
};
use crate::benchmarks::TaskSpec;

/// Fixed baseline path or learned mixture path.
#[derive(Debug, Clone, PartialEq)]
pub enum PathMode {
    Fixed(FixedScheduleKind),
    Mvp { k: usize, constraint: ConstraintKind },
}

/// Learning-rate schedule of the score optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrDecay {
    /// Constant learning rate.
    None,
    /// Cosine decay from `lr` to zero over the run; lowers the late-phase
    /// gradient-noise floor of the adaptive optimizer.
    Cosine,
}

impl LrDecay {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(LrDecay::None),
            "cosine" => Ok(LrDecay::Cosine),
            other => Err(Error::domain(format!("unknown lr decay '{other}'"))),
        }
    }

    pub fn factor(&self, step: usize, total: usize) -> f64 {
        match self {
            LrDecay::None => 1.0,
            LrDecay::Cosine => {
                0.5 * (1.0 + (std::f64::consts::PI * step as f64 / total as f64).cos())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub steps: usize,
    pub lr: f64,
    pub lr_decay: LrDecay,
    /// Score steps between path updates; `usize::MAX` freezes the path.
    pub path_update_every: usize,
    /// Learning rate of the path-variance descent.
    pub path_lr: f64,
    pub uwso_temperature: f64,
    pub uwso_eps: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    /// Bin count of the time sampler and grid of the variance quadrature.
    pub grid_points: usize,
    pub t_clamp: f64,
    /// Additive constant in the inverse-variance sampling weights.
    pub eps_w: f64,
    /// Draws used to estimate the endpoint second moments.
    pub moment_samples: usize,
}

impl TrainConfig {
    pub fn new(seed: u64, steps: usize) -> Self {
        TrainConfig {
            batch_size: 512,
            steps,
            lr: 1e-3,
            lr_decay: LrDecay::None,
            path_update_every: 50,
            path_lr: 0.05,
            uwso_temperature: 2.0,
            uwso_eps: 1e-8,
            seed,
            hidden: vec![128, 128],
            grid_points: 1000,
            t_clamp: EPS_T,
            eps_w: 1e-2,
            moment_samples: 32_768,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.steps == 0 {
            return Err(Error::domain("batch_size and steps must be positive"));
        }
        if !(self.lr > 0.0 && self.path_lr > 0.0) {
            return Err(Error::domain("learning rates must be positive"));
        }
        if self.moment_samples == 0 {
            return Err(Error::domain("moment_samples must be positive"));
        }
        Ok(())
    }
}

/// Per-step record of the training objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub cjsm: f64,
    pub path_variance: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

#[derive(Debug)]
pub struct TrainOutput {
    pub model: JointScoreModel,
    pub path: PathSchedule,
    pub trace: Vec<TraceRow>,
    pub moments: DataMoments,
    pub final_variance: f64,
}

/// CSV dump of the loss trace: `step,cjsm,path_variance,lambda1,lambda2`.
pub fn write_trace_csv<W: std::io::Write>(w: &mut W, trace: &[TraceRow]) -> Result<()> {
    writeln!(w, "step,cjsm,path_variance,lambda1,lambda2")?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.step, r.cjsm, r.path_variance, r.lambda1, r.lambda2
        )?;
    }
    Ok(())
}

const DIVERGENCE_RUN: usize = 10;

struct PathState {
    schedule: PathSchedule,
    compiled: CompiledSchedule,
    latent: Option<KmmLatentParams>,
    constraint: ConstraintKind,
    variance: f64,
    table: TimeSamplerTable,
}

fn make_path_state(
    schedule: PathSchedule,
    latent: Option<KmmLatentParams>,
    constraint: ConstraintKind,
    var_cfg: &VarianceConfig,
    m: &DataMoments,
    eps_w: f64,
) -> Result<PathState> {
    let variance = path_variance(&schedule, var_cfg, m)?;
    let table = build_table(&schedule, var_cfg, m, eps_w)?;
    let compiled = schedule.compile()?;
    Ok(PathState { schedule, compiled, latent, constraint, variance, table })
}

fn build_batch(
    compiled: &CompiledSchedule,
    interp: &InterpolantKind,
    ts: &[f64],
    x0: &[f64],
    x1: &[f64],
    z: Option<&[f64]>,
    d: usize,
) -> Result<TrainBatch> {
    let n = ts.len();
    let mut xs = Vec::with_capacity(n * d);
    let mut targets = Vec::with_capacity(n * (d + 1));
    for i in 0..n {
        let sched = compiled.eval(ts[i]);
        let x0i = &x0[i * d..(i + 1) * d];
        let x1i = &x1[i * d..(i + 1) * d];
        let target = match interp {
            InterpolantKind::Di => {
                let bridge = sample_di(&sched, x0i, x1i)?;
                xs.extend_from_slice(&bridge.x_t);
                di_targets(&sched, x0i, x1i)?
            }
            InterpolantKind::Ddbi(cfg) => {
                let zi = &z.expect("bridge noise required for ddbi")[i * d..(i + 1) * d];
                let bridge = sample_ddbi(&sched, cfg, x0i, x1i, zi)?;
                xs.extend_from_slice(&bridge.x_t);
                ddbi_targets(&sched, cfg, &bridge, DdbiTimeForm::UnitNoise)?
            }
        };
        targets.extend_from_slice(&target.data_score);
        targets.push(target.time_score);
    }
    Ok(TrainBatch { n, d, xs, ts: ts.to_vec(), targets })
}

/// Estimate endpoint moments from the task's seeded samplers.
pub fn task_moments(task: &TaskSpec, seed: u64, n: usize) -> Result<DataMoments> {
    let x0 = (task.sampler_p0)(&mut stream_rng(seed, "moments.x0"), n);
    let x1 = (task.sampler_p1)(&mut stream_rng(seed, "moments.x1"), n);
    estimate_moments(&x0, &x1, task.dim)
}

/// Run the alternating training loop. Deterministic given the seed.
pub fn train(
    task: &TaskSpec,
    interp: InterpolantKind,
    path_mode: PathMode,
    cfg: &TrainConfig,
) -> Result<TrainOutput> {
    cfg.validate()?;
    let d = task.dim;
    let m = task_moments(task, cfg.seed, cfg.moment_samples)?;
    let var_cfg = VarianceConfig {
        interpolant: interp,
        grid_points: cfg.grid_points,
        t_clamp: cfg.t_clamp,
        method: crate::variance::VarianceMethod::Quadrature,
    };

    let mut state = match &path_mode {
        PathMode::Fixed(kind) => make_path_state(
            PathSchedule::Fixed(*kind),
            None,
            kind.constraint(),
            &var_cfg,
            &m,
            cfg.eps_w,
        )?,
        PathMode::Mvp { k, constraint } => {
            let latent = init_diverse(*k)?;
            make_path_state(
                PathSchedule::kmm(latent.clone(), *constraint),
                Some(latent),
                *constraint,
                &var_cfg,
                &m,
                cfg.eps_w,
            )?
        }
    };

    let mut model = JointScoreModel::init(
        MlpSpec::with_hidden(d, cfg.hidden.clone()),
        &mut stream_rng(cfg.seed, "model.init"),
    )?;

    let mut rng_t = stream_rng(cfg.seed, "train.t");
    let mut rng_x0 = stream_rng(cfg.seed, "train.x0");
    let mut rng_x1 = stream_rng(cfg.seed, "train.x1");
    let mut rng_z = stream_rng(cfg.seed, "train.z");

    let needs_z = matches!(interp, InterpolantKind::Ddbi(_));
    let mut trace = Vec::with_capacity(cfg.steps);
    let mut bad_run = 0usize;

    for step in 1..=cfg.steps {
        let ts: Vec<f64> = (0..cfg.batch_size).map(|_| state.table.draw(&mut rng_t)).collect();
        let x0 = (task.sampler_p0)(&mut rng_x0, cfg.batch_size);
        let x1 = (task.sampler_p1)(&mut rng_x1, cfg.batch_size);
        let z = needs_z.then(|| standard_normal_matrix(&mut rng_z, cfg.batch_size, d));

        let step_loss = build_batch(&state.compiled, &interp, &ts, &x0, &x1, z.as_deref(), d)
            .and_then(|batch| cjsm_loss_grad(&model, &batch));

        let (loss, lambda) = match step_loss {
            Ok((loss, grad)) if loss.is_finite() => {
                bad_run = 0;
                let lambda =
                    uwso_weights(&[loss, state.variance], cfg.uwso_temperature, cfg.uwso_eps)?;
                let scaled: Vec<f64> = grad.iter().map(|g| lambda[0] * g).collect();
                let lr = cfg.lr * cfg.lr_decay.factor(step, cfg.steps);
                model.adam.apply(&mut model.params, &scaled, lr);
                (loss, lambda)
            }
            Ok(_) | Err(Error::NonFinite(_)) => {
                bad_run += 1;
                if bad_run >= DIVERGENCE_RUN {
                    return Err(Error::Diverged { step, run: bad_run });
                }
                (f64::NAN, vec![f64::NAN, f64::NAN])
            }
            Err(e) => return Err(e),
        };

        trace.push(TraceRow {
            step,
            cjsm: loss,
            path_variance: state.variance,
            lambda1: lambda[0],
            lambda2: lambda[1],
        });

        let update_path = state.latent.is_some()
            && cfg.path_update_every != usize::MAX
            && step % cfg.path_update_every == 0;
        if update_path {
            let latent = state.latent.take().unwrap();
            let (new_latent, _) =
                optimize_path(&latent, state.constraint, &var_cfg, &m, 1, cfg.path_lr)?;
            state = make_path_state(
                PathSchedule::kmm(new_latent.clone(), state.constraint),
                Some(new_latent),
                state.constraint,
                &var_cfg,
                &m,
                cfg.eps_w,
            )?;
        }
    }

    Ok(TrainOutput {
        final_variance: state.variance,
        path: state.schedule,
        model,
        trace,
        moments: m,
    })
}

/// Average conditional joint score loss of a model over freshly drawn
/// batches (no parameter update); used for zero-model baselines and
/// held-out evaluation.
pub fn eval_cjsm_loss(
    task: &TaskSpec,
    interp: InterpolantKind,
    schedule: &PathSchedule,
    model: &JointScoreModel,
    table: &TimeSamplerTable,
    seed: u64,
    batches: usize,
    batch_size: usize,
) -> Result<f64> {
    let compiled = schedule.compile()?;
    let d = task.dim;
    let mut rng_t = stream_rng(seed, "eval.t");
    let mut rng_x0 = stream_rng(seed, "eval.x0");
    let mut rng_x1 = stream_rng(seed, "eval.x1");
    let mut rng_z = stream_rng(seed, "eval.z");
    let needs_z = matches!(interp, InterpolantKind::Ddbi(_));
    let mut acc = 0.0;
    for _ in 0..batches {
        let ts: Vec<f64> = (0..batch_size).map(|_| table.draw(&mut rng_t)).collect();
        let x0 = (task.sampler_p0)(&mut rng_x0, batch_size);
        let x1 = (task.sampler_p1)(&mut rng_x1, batch_size);
        let z = needs_z.then(|| standard_normal_matrix(&mut rng_z, batch_size, d));
        let batch = build_batch(&compiled, &interp, &ts, &x0, &x1, z.as_deref(), d)?;
        let (loss, _) = cjsm_loss_grad(model, &batch)?;
        acc += loss;
    }
    Ok(acc / batches as f64)
}

/// One deterministic chunk of an rng stream, exposed for tests.
pub fn train_rng(seed: u64, purpose: &str) -> ChaCha12Rng {
    stream_rng(seed, purpose)
}
