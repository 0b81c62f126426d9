pub mod calibrate;
pub mod price;
pub mod simulate;
pub mod validate;

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Output directory; created on first write.
#[derive(Debug, Clone)]
pub struct OutDir(pub PathBuf);

impl OutDir {
    pub fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.0.join(name);
        let fail = |e: std::io::Error| CliError::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        std::fs::create_dir_all(&self.0).map_err(fail)?;
        std::fs::write(&path, contents).map_err(fail)?;
        Ok(path)
    }

    pub fn path(&self) -> &Path {
        &self.0
    }
}

pub fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

/// CSV cell of an optional number; empty when missing.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
