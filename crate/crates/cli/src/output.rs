use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tempfile::NamedTempFile;

/// Consulted when `--out` is absent.
pub const OUT_DIR_ENV: &str = "INTERLOCK_OUT_DIR";

#[derive(Debug)]
pub struct OutputDir {
    path: PathBuf,
}

impl OutputDir {
    /// `--out`, else `$INTERLOCK_OUT_DIR`, else the working directory.
    pub fn resolve(flag: Option<&Path>) -> Result<Self> {
        let path = match flag {
            Some(p) => p.to_path_buf(),
            None => std::env::var_os(OUT_DIR_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(".")),
        };
        std::fs::create_dir_all(&path)
            .with_context(|| format!("cannot create output directory {}", path.display()))?;
        Ok(Self { path })
    }

    /// Stages every file in the target directory, then renames them into
    /// place. Nothing is renamed unless all files were staged.
    pub fn write_all(&self, files: &[(String, String)]) -> Result<()> {
        let mut staged = Vec::with_capacity(files.len());
        for (name, contents) in files {
            let mut tmp = NamedTempFile::new_in(&self.path)
                .with_context(|| format!("cannot write to {}", self.path.display()))?;
            tmp.write_all(contents.as_bytes())?;
            tmp.as_file().sync_all()?;
            staged.push((tmp, self.path.join(name)));
        }
        for (tmp, dest) in staged {
            tmp.persist(&dest)
                .with_context(|| format!("cannot write {}", dest.display()))?;
        }
        Ok(())
    }
}
