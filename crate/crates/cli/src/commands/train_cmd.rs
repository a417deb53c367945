//! `train`: run the alternating training loop, write checkpoint, traces,
//! optimized path, sampler table, and manifest.

use std::path::Path;
use std::time::Instant;

use mvp_core::kmm::{constrain, kmm_modes};
use mvp_core::model::write_checkpoint;
use mvp_core::path::PathSchedule;
use mvp_core::schedules::{ConstraintKind, FixedScheduleKind};
use mvp_core::time_sampler::build_table;
use mvp_core::train::{train, write_trace_csv, PathMode, TrainConfig};
use mvp_core::variance::VarianceMethod;

use crate::config::Config;
use crate::manifest::RunManifest;
use crate::tasks::{build_task, resolve_interpolant};
use crate::CliError;

pub fn parse_path_mode(s: &str, cfg: &Config) -> Result<PathMode, CliError> {
    if s == "mvp" {
        return Ok(PathMode::Mvp {
            k: cfg.usize("path.k")?,
            constraint: ConstraintKind::parse(cfg.raw("constraint"))?,
        });
    }
    if let Some(name) = s.strip_prefix("fixed:") {
        return Ok(PathMode::Fixed(FixedScheduleKind::parse(name)?));
    }
    Err(CliError::Usage(format!("path mode must be 'mvp' or 'fixed:<name>', got '{s}'")))
}

pub fn train_config(cfg: &Config) -> Result<TrainConfig, CliError> {
    let seed = cfg.u64("seed")?;
    let mut tc = TrainConfig::new(seed, cfg.usize("train.steps")?);
    tc.batch_size = cfg.usize("train.batch_size")?;
    tc.lr = cfg.f64("train.lr")?;
    tc.path_update_every = cfg.usize_or_inf("train.path_update_every")?;
    tc.path_lr = cfg.f64("path.lr")?;
    tc.uwso_temperature = cfg.f64("train.uwso_temperature")?;
    tc.uwso_eps = cfg.f64("train.uwso_eps")?;
    tc.hidden = cfg.usize_list("train.hidden")?;
    tc.grid_points = cfg.usize("variance.grid_points")?;
    tc.t_clamp = cfg.f64("variance.t_clamp")?;
    tc.eps_w = cfg.f64("sampler.eps_w")?;
    tc.moment_samples = cfg.usize("train.moment_samples")?;
    Ok(tc)
}

pub fn run(
    task_name: &str,
    path_mode: &str,
    cfg: &Config,
    out: &Path,
    force: bool,
) -> Result<(), CliError> {
    super::prepare_out_dir(out, force)?;
    let t0 = Instant::now();
    let task = build_task(task_name, cfg)?;
    let interp = resolve_interpolant(&task, cfg)?;
    let mode = parse_path_mode(path_mode, cfg)?;
    let tc = train_config(cfg)?;
    let seed = tc.seed;

    let result = train(&task, interp, mode, &tc)?;
    let train_secs = super::secs_since(t0);

    let mut w = super::create_file(&super::out_file(out, "checkpoint.bin"))?;
    write_checkpoint(&mut w, &result.model)?;
    super::finish_file(w)?;

    let mut w = super::create_file(&super::out_file(out, "loss_trace.csv"))?;
    write_trace_csv(&mut w, &result.trace)?;
    super::finish_file(w)?;

    let mut manifest = RunManifest::new("train", seed, cfg);
    if let PathSchedule::Kmm { latent, .. } = &result.path {
        let json = serde_json::to_string_pretty(latent)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(super::out_file(out, "path.json"), json + "\n")
            .map_err(|e| CliError::Internal(e.to_string()))?;
        manifest.kmm_modes = Some(kmm_modes(&constrain(latent)?));
    }

    // Final time-sampler table, for plotting the sampling density.
    let var_cfg = mvp_core::variance::VarianceConfig {
        interpolant: interp,
        grid_points: tc.grid_points,
        t_clamp: tc.t_clamp,
        method: VarianceMethod::Quadrature,
    };
    let table = build_table(&result.path, &var_cfg, &result.moments, tc.eps_w)?;
    let mut w = super::create_file(&super::out_file(out, "sampler_table.csv"))?;
    table.write_csv(&mut w)?;
    super::finish_file(w)?;

    let tail = result.trace.len().saturating_sub(100);
    let final_loss =
        result.trace[tail..].iter().map(|r| r.cjsm).sum::<f64>() / (result.trace.len() - tail) as f64;
    manifest.metrics.put("final_cjsm_mean100", final_loss)?;
    manifest.metrics.put("final_path_variance", result.final_variance)?;
    manifest.metrics.put("moments.c0", result.moments.c0)?;
    manifest.metrics.put("moments.c1", result.moments.c1)?;
    manifest.metrics.put("moments.c01", result.moments.c01)?;
    manifest.phase("train", train_secs);
    manifest.phase("total", super::secs_since(t0));
    manifest.write(&super::out_file(out, "manifest.json"))?;
    println!(
        "train: {} steps on {}, final loss {final_loss:.6}, wrote {}",
        tc.steps,
        task.name,
        out.display()
    );
    Ok(())
}
