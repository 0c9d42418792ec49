use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Write via a temp file in the same directory plus rename, so an
/// interrupted run never leaves a half-written output behind.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp_name = path.as_os_str().to_owned();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("moving into place at {}", path.display()))?;
    Ok(())
}
