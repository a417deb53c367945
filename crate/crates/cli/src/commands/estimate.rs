//! `estimate`: mutual information or negative log-likelihood from a
//! trained checkpoint, or from the exact Gaussian marginal score.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mvp_core::benchmarks::TaskSpec;
use mvp_core::estimator::{
    log_ratios, mi_from_log_ratios, InferenceConfig, IntegrationRule, PreparedGaussianScore,
};
use mvp_core::kmm::KmmLatentParams;
use mvp_core::model::read_checkpoint;
use mvp_core::path::PathSchedule;
use mvp_core::rng::stream_rng;
use mvp_core::schedules::{ConstraintKind, FixedScheduleKind};
use mvp_core::special::std_normal_log_pdf;

use crate::config::Config;
use crate::manifest::RunManifest;
use crate::tasks::build_task;
use crate::CliError;

pub struct Args<'a> {
    pub checkpoint: Option<PathBuf>,
    pub task_name: &'a str,
    pub metric: &'a str,
    pub analytic_score: bool,
    pub path_json: Option<PathBuf>,
    pub cfg: &'a Config,
    pub out: &'a Path,
    pub force: bool,
}

pub fn inference_config(cfg: &Config) -> Result<InferenceConfig, CliError> {
    Ok(InferenceConfig {
        steps: cfg.usize("infer.steps")?,
        rule: IntegrationRule::parse(cfg.raw("infer.rule"))?,
        t_clamp: cfg.f64("variance.t_clamp")?,
    })
}

fn analytic_schedule(args: &Args) -> Result<PathSchedule, CliError> {
    if let Some(path) = &args.path_json {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::ArtifactMismatch(format!("cannot read path json {}: {e}", path.display()))
        })?;
        let latent: KmmLatentParams = serde_json::from_str(&text)
            .map_err(|e| CliError::ArtifactMismatch(format!("path json: {e}")))?;
        let constraint = ConstraintKind::parse(args.cfg.raw("constraint"))?;
        Ok(PathSchedule::kmm(latent, constraint))
    } else {
        Ok(PathSchedule::Fixed(FixedScheduleKind::parse(
            args.cfg.raw("infer.analytic_schedule"),
        )?))
    }
}

fn per_sample_log_ratios(
    args: &Args,
    task: &TaskSpec,
    samples: &[f64],
    infer: &InferenceConfig,
) -> Result<Vec<f64>, CliError> {
    if args.analytic_score {
        let marginal = task.gaussian_marginal.as_ref().ok_or_else(|| {
            CliError::Usage(format!(
                "task '{}' has no analytic Gaussian marginal; drop --analytic-score",
                task.name
            ))
        })?;
        let schedule = analytic_schedule(args)?.compile()?;
        let prepared = PreparedGaussianScore::new(marginal, &schedule, &infer.grid());
        Ok(log_ratios(&prepared, samples, task.dim, infer)?)
    } else {
        let ckpt_path = args.checkpoint.as_ref().ok_or_else(|| {
            CliError::Usage("either --checkpoint or --analytic-score is required".into())
        })?;
        let mut file = std::fs::File::open(ckpt_path).map_err(|e| {
            CliError::ArtifactMismatch(format!(
                "cannot open checkpoint {}: {e}",
                ckpt_path.display()
            ))
        })?;
        let model = read_checkpoint(&mut file)?;
        if model.spec.data_dim != task.dim {
            return Err(CliError::ArtifactMismatch(format!(
                "checkpoint dimension {} does not match task dimension {}",
                model.spec.data_dim, task.dim
            )));
        }
        Ok(log_ratios(&model, samples, task.dim, infer)?)
    }
}

pub fn run(args: Args<'_>) -> Result<(), CliError> {
    super::prepare_out_dir(args.out, args.force)?;
    let t0 = Instant::now();
    let task = build_task(args.task_name, args.cfg)?;
    let seed = args.cfg.u64("seed")?;
    let infer = inference_config(args.cfg)?;
    let n = args.cfg.usize("infer.eval_samples")?;

    let samples = (task.sampler_p1)(&mut stream_rng(seed, "eval.samples"), n);
    let values = per_sample_log_ratios(&args, &task, &samples, &infer)?;

    let mut w = super::create_file(&super::out_file(args.out, "log_ratios.csv"))?;
    writeln!(w, "sample_index,log_ratio").map_err(|e| CliError::Internal(e.to_string()))?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{i},{v}").map_err(|e| CliError::Internal(e.to_string()))?;
    }
    super::finish_file(w)?;

    let mut manifest = RunManifest::new("estimate", seed, args.cfg);
    let (estimate, std_err, oracle) = match args.metric {
        "mi" => {
            let est = mi_from_log_ratios(&values);
            (est.mi, est.std_err, task.oracle_mi()?)
        }
        "nll" => {
            let lls: Vec<f64> = samples
                .chunks_exact(task.dim)
                .zip(&values)
                .map(|(x, lr)| -(lr + std_normal_log_pdf(x)))
                .collect();
            let est = mi_from_log_ratios(&lls);
            let oracle = task.exact_log_ratio.as_ref().map(|f| {
                let vals: Vec<f64> = samples
                    .chunks_exact(task.dim)
                    .map(|x| -(f(x) + std_normal_log_pdf(x)))
                    .collect();
                vals.iter().sum::<f64>() / vals.len() as f64
            });
            (est.mi, est.std_err, oracle)
        }
        other => return Err(CliError::Usage(format!("metric must be mi or nll, got '{other}'"))),
    };

    let mut summary = serde_json::Map::new();
    summary.insert("metric".into(), serde_json::json!(args.metric));
    summary.insert("estimate".into(), finite_json("estimate", estimate)?);
    summary.insert("std_err".into(), finite_json("std_err", std_err)?);
    summary.insert("steps".into(), serde_json::json!(infer.steps));
    summary.insert("rule".into(), serde_json::json!(infer.rule.name()));
    summary.insert("n".into(), serde_json::json!(values.len()));
    manifest.metrics.put("estimate", estimate)?;
    manifest.metrics.put("std_err", std_err)?;
    if let Some(oracle) = oracle {
        summary.insert("oracle".into(), finite_json("oracle", oracle)?);
        summary.insert("abs_error".into(), finite_json("abs_error", (estimate - oracle).abs())?);
        manifest.metrics.put("oracle", oracle)?;
        manifest.metrics.put("abs_error", (estimate - oracle).abs())?;
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(summary))
        .map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(super::out_file(args.out, "summary.json"), text + "\n")
        .map_err(|e| CliError::Internal(e.to_string()))?;

    manifest.phase("total", super::secs_since(t0));
    manifest.write(&super::out_file(args.out, "manifest.json"))?;
    println!(
        "estimate: {} = {estimate:.6} +/- {std_err:.6} ({} samples), wrote {}",
        args.metric,
        values.len(),
        args.out.display()
    );
    Ok(())
}

fn finite_json(name: &str, v: f64) -> Result<serde_json::Value, CliError> {
    if !v.is_finite() {
        return Err(CliError::Internal(format!("summary value '{name}' is non-finite")));
    }
    Ok(serde_json::json!(v))
}
