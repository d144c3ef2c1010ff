use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileEntry {
    pub fn of(name: &str, data: &[u8]) -> Self {
        let digest = Sha256::digest(data);
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Self { name: name.to_string(), bytes: data.len() as u64, sha256 }
    }
}

/// Provenance record written next to every run's outputs. Holds no
/// timestamps or absolute paths so identical reruns produce identical bytes.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
}

/// Collects inputs read and outputs produced by one subcommand, then writes
/// them all at once.
pub struct Run {
    command: &'static str,
    out_dir: PathBuf,
    parameters: BTreeMap<String, String>,
    inputs: Vec<FileEntry>,
    outputs: Vec<(String, Vec<u8>)>,
}

impl Run {
    pub fn new(command: &'static str, out_dir: &Path) -> Self {
        Self {
            command,
            out_dir: out_dir.to_path_buf(),
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    /// Reads an input file and records its digest.
    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let data = std::fs::read(path).map_err(CliError::io(path))?;
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        self.inputs.push(FileEntry::of(&name, &data));
        Ok(data)
    }

    pub fn output(&mut self, name: &str, data: Vec<u8>) {
        self.outputs.push((name.to_string(), data));
    }

    pub fn finish(self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir).map_err(CliError::io(&self.out_dir))?;
        let mut entries = Vec::with_capacity(self.outputs.len());
        for (name, data) in &self.outputs {
            let path = self.out_dir.join(name);
            std::fs::write(&path, data).map_err(CliError::io(&path))?;
            entries.push(FileEntry::of(name, data));
        }
        let manifest = RunManifest {
            tool: "cimon",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            parameters: self.parameters,
            inputs: self.inputs,
            outputs: entries,
        };
        let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        json.push('\n');
        let path = self.out_dir.join("manifest.json");
        std::fs::write(&path, json).map_err(CliError::io(&path))
    }
}
