//! Output files are buffered in memory and only written once the whole
//! command has succeeded, each through a temporary file renamed into place.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::CliError;

pub struct Outputs {
    dir: PathBuf,
    files: BTreeMap<String, Vec<u8>>,
}

impl Outputs {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Outputs {
            dir: dir.into(),
            files: BTreeMap::new(),
        }
    }

    pub fn path_of(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        let name = name.into();
        if self.files.insert(name.clone(), bytes).is_some() {
            log::debug!("output {name} produced twice, keeping the later one");
        }
    }

    /// Runs a writer against an in-memory buffer.
    pub fn with<E: Display>(
        &mut self,
        name: impl Into<String>,
        f: impl FnOnce(&mut Vec<u8>) -> Result<(), E>,
    ) -> Result<(), CliError> {
        let name = name.into();
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| CliError::Usage(format!("formatting {name}: {e}")))?;
        self.add(name, buf);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) -> Result<(), CliError> {
        self.with(name, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value)?;
            buf.push(b'\n');
            Ok::<(), serde_json::Error>(())
        })
    }

    /// Writes one buffered file now, leaving the rest pending.
    pub fn flush_one(&mut self, name: &str) -> Result<PathBuf, CliError> {
        let bytes = self
            .files
            .remove(name)
            .ok_or_else(|| CliError::Usage(format!("no pending output {name}")))?;
        persist(&self.dir, name, &bytes)
    }

    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        self.files
            .iter()
            .map(|(name, bytes)| persist(&self.dir, name, bytes))
            .collect()
    }
}

fn persist(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let target = dir.join(name);
    let fail = |source: std::io::Error| CliError::Output {
        path: target.clone(),
        source,
    };
    fs::create_dir_all(dir).map_err(fail)?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(&target).map_err(|e| fail(e.error))?;
    log::info!("wrote {}", target.display());
    Ok(target)
}
