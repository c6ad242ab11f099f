use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

/// Header line of every CSV artifact.
pub const CSV_HEADER: &str = "# xy-loops schema v1";

/// Standard output, or a file replaced atomically once the content is complete.
pub struct Output {
    path: Option<PathBuf>,
}

impl Output {
    pub fn stdout() -> Self {
        Output { path: None }
    }

    pub fn to(path: Option<&Path>) -> Self {
        Output {
            path: path.map(Path::to_path_buf),
        }
    }

    pub fn write(&self, bytes: &[u8]) -> anyhow::Result<()> {
        match &self.path {
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
                Ok(())
            }
            Some(p) => write_atomic(p, bytes),
        }
    }

    pub fn json<T: Serialize>(&self, value: &T) -> anyhow::Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(s.as_bytes())
    }
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().context("output path has no file name")?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = std::fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}

/// Formats a float so that identical values always print identically.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else {
        x.to_string()
    }
}
