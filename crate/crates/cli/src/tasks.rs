//! Task construction from config keys.

use mvp_core::benchmarks::{
    additive_noise_task, asinh_task, edge_singular_task, gamma_exponential_task,
    gaussian_block_task, gaussian_isotropic_task, load_tabular_csv, toy2d_task,
    InterpolantPreference, TaskSpec, ToyName,
};
use mvp_core::interpolants::DdbiNoiseConfig;
use mvp_core::variance::InterpolantKind;

use crate::config::Config;
use crate::CliError;

pub fn build_task(name: &str, cfg: &Config) -> Result<TaskSpec, CliError> {
    let task = match name {
        "gaussian_block" => gaussian_block_task(cfg.usize("task.dim")?, cfg.f64("task.rho")?)?,
        "gaussian_iso" => {
            gaussian_isotropic_task(cfg.usize("task.dim")?, cfg.f64("task.sigma1_sq")?)?
        }
        "edge_singular" => edge_singular_task(cfg.f64("task.rho")?)?,
        "halfcube" => halfcube(cfg)?,
        "asinh" => asinh_task(cfg.f64("task.rho")?)?,
        "additive_noise" => additive_noise_task(cfg.f64("task.eps")?)?,
        "gamma_exp" => gamma_exponential_task(cfg.f64("task.rho")?)?,
        "tabular" => {
            let path = cfg.raw("task.path");
            if path.is_empty() {
                return Err(CliError::Usage("task.path is required for tabular".into()));
            }
            load_tabular_csv(std::path::Path::new(path), cfg.bool("task.standardize")?)?
        }
        other => match ToyName::parse(other) {
            Ok(toy) => toy2d_task(toy),
            Err(_) => {
                return Err(CliError::Usage(format!(
                    "unknown task '{other}' (expected gaussian_block, gaussian_iso, \
                     edge_singular, halfcube, asinh, additive_noise, gamma_exp, tabular, \
                     or a 2-D toy name)"
                )))
            }
        },
    };
    Ok(task)
}

fn halfcube(cfg: &Config) -> Result<TaskSpec, CliError> {
    Ok(mvp_core::benchmarks::halfcube_task(cfg.f64("task.rho")?)?)
}

/// Resolve `interpolant = auto|di|ddbi` against the task preference.
pub fn resolve_interpolant(task: &TaskSpec, cfg: &Config) -> Result<InterpolantKind, CliError> {
    let ddbi = DdbiNoiseConfig { gamma: cfg.f64("ddbi.gamma")?, epsilon: cfg.f64("ddbi.epsilon")? };
    Ok(match cfg.raw("interpolant") {
        "di" => InterpolantKind::Di,
        "ddbi" => InterpolantKind::Ddbi(ddbi),
        "auto" => match task.preferred {
            InterpolantPreference::Di => InterpolantKind::Di,
            InterpolantPreference::Ddbi => InterpolantKind::Ddbi(ddbi),
        },
        other => return Err(CliError::Usage(format!("unknown interpolant '{other}'"))),
    })
}
