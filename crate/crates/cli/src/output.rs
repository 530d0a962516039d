//! Artifact writing: every file lands atomically (full content or nothing).
//!
//! Files are staged as named temporaries in the destination directory and
//! persisted over the final name, so a crash or a concurrent reader never
//! observes a half-written table.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Writes `contents` to `dir/name` atomically, creating `dir` if needed.
/// Returns the final path.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)?;
    let final_path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(&final_path)
        .map_err(|e| CliError::Failure(format!("persisting {}: {}", final_path.display(), e.error)))?;
    // Temp files are created owner-only; artifacts are ordinary data files.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&final_path, std::fs::Permissions::from_mode(0o644))?;
    }
    Ok(final_path)
}
