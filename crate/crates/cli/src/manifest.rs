use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::io::{pretty, write_file};
use crate::CliError;

/// Record of one run: enough to repeat it and check the inputs match.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub argv: Vec<String>,
    pub options: Value,
    pub seeds: Vec<u64>,
    pub version: String,
    pub threads: usize,
    pub input: Option<InputDigest>,
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, options: Value) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            argv: std::env::args().collect(),
            options,
            seeds: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            input: None,
        }
    }

    pub fn with_input(mut self, path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        self.input = Some(InputDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) });
        Ok(self)
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }

    /// Writes `<out>.manifest.json` next to the primary output, or to stderr
    /// when the output went to stdout.
    pub fn emit(&self, out: Option<&Path>) -> Result<(), CliError> {
        let text = pretty(&serde_json::to_value(self).expect("manifest"));
        match out {
            Some(p) => write_file(&manifest_path(p), &text),
            None => {
                eprint!("{text}");
                Ok(())
            }
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
