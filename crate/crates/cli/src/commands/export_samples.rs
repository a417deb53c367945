//! `export-samples`: dump task samples for external plotting.

use std::path::Path;

use mvp_core::rng::stream_rng;

use crate::config::Config;
use crate::tasks::build_task;
use crate::CliError;

pub fn run(task_name: &str, cfg: &Config, n: usize, out: &Path) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("sample count must be positive".into()));
    }
    let task = build_task(task_name, cfg)?;
    let seed = cfg.u64("seed")?;
    let mut rng = stream_rng(seed, "export.samples");
    let mut w = super::create_file(out)?;
    task.export_samples_csv(&mut w, &mut rng, seed, n)?;
    super::finish_file(w)?;
    println!("export-samples: wrote {} ({} rows)", out.display(), n);
    Ok(())
}
