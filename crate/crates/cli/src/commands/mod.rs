pub mod compare;
pub mod estimate;
pub mod export_samples;
pub mod export_schedule;
pub mod train_cmd;

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Create `dir` if absent; refuse to reuse a non-empty directory unless
/// `force` is set.
pub fn prepare_out_dir(dir: &Path, force: bool) -> Result<(), CliError> {
    if dir.exists() {
        let non_empty = std::fs::read_dir(dir)
            .map_err(|e| CliError::Internal(format!("reading {}: {e}", dir.display())))?
            .next()
            .is_some();
        if non_empty && !force {
            return Err(CliError::OutputConflict(format!(
                "output directory {} is not empty (use --force to overwrite)",
                dir.display()
            )));
        }
    } else {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Internal(format!("creating {}: {e}", dir.display())))?;
    }
    Ok(())
}

pub fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Buffered writer creation with a uniform error message.
pub fn create_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
    let f = std::fs::File::create(path)
        .map_err(|e| CliError::Internal(format!("creating {}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(f))
}

pub fn finish_file(mut w: std::io::BufWriter<std::fs::File>) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::Internal(format!("flush: {e}")))
}

/// Seconds elapsed since `t0`, for manifest wall-time entries.
pub fn secs_since(t0: std::time::Instant) -> f64 {
    t0.elapsed().as_secs_f64()
}
