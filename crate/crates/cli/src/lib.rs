//! Command-line front end: model files, commands, fixtures and the timing
//! harness.

use std::io::Write;
use std::path::Path;

pub mod bench;
pub mod commands;
pub mod config;
pub mod fixtures;
pub mod model_io;
pub mod simval;

/// Writes through a temporary file in the target directory so readers never
/// see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(parent)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
