//! `export-schedule`: plot-ready schedule curves.

use std::io::Write;
use std::path::Path;

use mvp_core::kmm::KmmLatentParams;
use mvp_core::path::PathSchedule;
use mvp_core::quad::linspace;
use mvp_core::schedules::{ConstraintKind, FixedScheduleKind, EPS_T};

use crate::CliError;

pub fn parse_schedule(spec: &str, constraint: &str) -> Result<PathSchedule, CliError> {
    if let Some(name) = spec.strip_prefix("fixed:") {
        return Ok(PathSchedule::Fixed(FixedScheduleKind::parse(name)?));
    }
    if let Some(path) = spec.strip_prefix("kmm:") {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::ArtifactMismatch(format!("cannot read path json {path}: {e}"))
        })?;
        let latent: KmmLatentParams = serde_json::from_str(&text)
            .map_err(|e| CliError::ArtifactMismatch(format!("path json: {e}")))?;
        latent.validate()?;
        return Ok(PathSchedule::kmm(latent, ConstraintKind::parse(constraint)?));
    }
    Err(CliError::Usage(format!(
        "schedule must be 'fixed:<name>' or 'kmm:<latent.json>', got '{spec}'"
    )))
}

pub fn run(schedule: &str, constraint: &str, grid: usize, out: &Path) -> Result<(), CliError> {
    if grid < 2 {
        return Err(CliError::Usage("grid must be >= 2".into()));
    }
    let sched = parse_schedule(schedule, constraint)?;
    let compiled = sched.compile()?;
    let mut w = super::create_file(out)?;
    writeln!(w, "t,alpha,beta,dalpha,dbeta").map_err(|e| CliError::Internal(e.to_string()))?;
    for &t in &linspace(EPS_T, 1.0 - EPS_T, grid) {
        let s = compiled.eval(t);
        writeln!(w, "{},{},{},{},{}", s.t, s.alpha, s.beta, s.dalpha, s.dbeta)
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    super::finish_file(w)?;
    println!("export-schedule: wrote {}", out.display());
    Ok(())
}
