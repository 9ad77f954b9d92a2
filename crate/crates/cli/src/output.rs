use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use strainmap_core::json;
use strainmap_core::mspace::fmt_f64;
use tempfile::NamedTempFile;

/// Write via a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// To `path` if given, else stdout.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = json::to_string(value)?;
    s.push('\n');
    Ok(s)
}

pub fn num(v: f64) -> String {
    fmt_f64(v)
}

#[derive(Default)]
pub struct Csv(String);

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self(header.join(",") + "\n")
    }

    pub fn row(&mut self, cells: &[String]) {
        self.0.push_str(&cells.join(","));
        self.0.push('\n');
    }

    pub fn finish(self) -> String {
        self.0
    }
}
