//! `compare-paths`: path variance of the five fixed schedules and the
//! optimized learnable path, with plot-ready curve files.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use mvp_core::kmm::{constrain, init_diverse, kmm_modes};
use mvp_core::path::PathSchedule;
use mvp_core::quad::linspace;
use mvp_core::schedules::{ConstraintKind, FixedScheduleKind};
use mvp_core::train::task_moments;
use mvp_core::variance::{
    integrand, optimize_path, path_variance, write_opt_trace, DataMoments, VarianceConfig,
    VarianceMethod,
};

use crate::config::Config;
use crate::manifest::RunManifest;
use crate::tasks::{build_task, resolve_interpolant};
use crate::CliError;

pub fn variance_config(cfg: &Config, task: &mvp_core::benchmarks::TaskSpec) -> Result<VarianceConfig, CliError> {
    Ok(VarianceConfig {
        interpolant: resolve_interpolant(task, cfg)?,
        grid_points: cfg.usize("variance.grid_points")?,
        t_clamp: cfg.f64("variance.t_clamp")?,
        method: VarianceMethod::Quadrature,
    })
}

fn write_curve(
    path: &Path,
    schedule: &PathSchedule,
    var_cfg: &VarianceConfig,
    m: &DataMoments,
) -> Result<(), CliError> {
    let compiled = schedule.compile()?;
    let mut w = super::create_file(path)?;
    writeln!(w, "t,alpha,beta,dalpha,dbeta,integrand")
        .map_err(|e| CliError::Internal(e.to_string()))?;
    for &t in &linspace(var_cfg.t_clamp, 1.0 - var_cfg.t_clamp, var_cfg.grid_points) {
        let s = compiled.eval(t);
        let f = integrand(&s, &var_cfg.interpolant, m)?;
        writeln!(w, "{},{},{},{},{},{}", s.t, s.alpha, s.beta, s.dalpha, s.dbeta, f)
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    super::finish_file(w)
}

pub fn run(task_name: &str, cfg: &Config, out: &Path, force: bool) -> Result<(), CliError> {
    super::prepare_out_dir(out, force)?;
    let t0 = Instant::now();
    let task = build_task(task_name, cfg)?;
    let seed = cfg.u64("seed")?;
    let var_cfg = variance_config(cfg, &task)?;
    let m = task_moments(&task, seed, cfg.usize("train.moment_samples")?)?;

    let mut manifest = RunManifest::new("compare-paths", seed, cfg);
    let mut rows: Vec<(String, String, f64)> = Vec::new();

    for kind in FixedScheduleKind::all_defaults() {
        let sched = PathSchedule::Fixed(kind);
        let v = path_variance(&sched, &var_cfg, &m)?;
        write_curve(&super::out_file(out, &format!("curve_{}.csv", kind.name())), &sched, &var_cfg, &m)?;
        manifest.metrics.put(&format!("variance.{}", kind.name()), v)?;
        rows.push((kind.name().to_string(), kind.constraint().name().to_string(), v));
    }

    let constraint = ConstraintKind::parse(cfg.raw("constraint"))?;
    let init = init_diverse(cfg.usize("path.k")?)?;
    let (opt_latent, trace) = optimize_path(
        &init,
        constraint,
        &var_cfg,
        &m,
        cfg.usize("path.opt_steps")?,
        cfg.f64("path.lr")?,
    )?;
    let mvp_sched = PathSchedule::kmm(opt_latent.clone(), constraint);
    let v_mvp = path_variance(&mvp_sched, &var_cfg, &m)?;
    write_curve(&super::out_file(out, "curve_mvp.csv"), &mvp_sched, &var_cfg, &m)?;
    manifest.metrics.put("variance.mvp", v_mvp)?;
    rows.push(("mvp".to_string(), constraint.name().to_string(), v_mvp));

    let mut w = super::create_file(&super::out_file(out, "variance_table.csv"))?;
    writeln!(w, "schedule,constraint,variance").map_err(|e| CliError::Internal(e.to_string()))?;
    for (name, constraint, v) in &rows {
        writeln!(w, "{name},{constraint},{v}").map_err(|e| CliError::Internal(e.to_string()))?;
    }
    super::finish_file(w)?;

    let mut w = super::create_file(&super::out_file(out, "opt_trace.csv"))?;
    write_opt_trace(&mut w, &trace)?;
    super::finish_file(w)?;

    let json = serde_json::to_string_pretty(&opt_latent)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(super::out_file(out, "path.json"), json + "\n")
        .map_err(|e| CliError::Internal(e.to_string()))?;

    manifest.kmm_modes = Some(kmm_modes(&constrain(&opt_latent)?));
    manifest.phase("total", super::secs_since(t0));
    manifest.write(&super::out_file(out, "manifest.json"))?;
    println!("compare-paths: wrote {} (mvp variance {v_mvp})", out.display());
    Ok(())
}
