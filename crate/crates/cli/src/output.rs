//! Atomic artifact writing.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Round-trip-exact decimal form of a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Output directory. Every file is written to a temporary sibling and
/// renamed into place, so a reader never sees a partial artifact.
#[derive(Debug, Clone)]
pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn bytes(&self, name: &str, data: &[u8]) -> std::io::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(data)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.dir.join(name)).map_err(|e| e.error)?;
        log::debug!("wrote {}", self.dir.join(name).display());
        Ok(())
    }

    pub fn text(&self, name: &str, data: &str) -> std::io::Result<()> {
        self.bytes(name, data.as_bytes())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> std::io::Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        s.push('\n');
        self.text(name, &s)
    }
}
