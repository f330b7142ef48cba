//! Artifact writing. Files are written once, in a fixed order, with no
//! timestamps, so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Output { path: dir.to_path_buf(), reason: e.to_string() })?;
        Ok(Artifacts { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Output { path: path.clone(), reason: e.to_string() })?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::Output { path, reason: e.to_string() })?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let fail = |e: &dyn std::fmt::Display| CliError::Output { path: path.clone(), reason: e.to_string() };
        let mut w = csv::Writer::from_path(&path).map_err(|e| fail(&e))?;
        for row in rows {
            w.serialize(row).map_err(|e| fail(&e))?;
        }
        w.flush().map_err(|e| fail(&e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }
}
