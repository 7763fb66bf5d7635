//! Run manifests: a JSON sidecar describing how an output was produced, with
//! content digests so a later `replay` can confirm it is reproducible.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Context, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let file = File::open(path).at(path.display().to_string())?;
        let mut hasher = Sha256::new();
        let bytes =
            io::copy(&mut BufReader::new(file), &mut hasher).at(path.display().to_string())?;
        Ok(FileDigest {
            path: path.to_owned(),
            sha256: hex::encode(hasher.finalize()),
            bytes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: u32,
    pub tool_version: String,
    pub command: String,
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub cwd: PathBuf,
    /// Environment the run depended on.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub env: BTreeMap<String, String>,
    /// Resolved settings: operators, seeds, ratios, transport and so on.
    pub params: BTreeMap<String, Value>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String]) -> Self {
        RunManifest {
            format: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            argv: argv.to_vec(),
            cwd: std::env::current_dir().unwrap_or_default(),
            env: BTreeMap::new(),
            params: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let value = serde_json::to_value(value).expect("parameters serialize to JSON");
        self.params.insert(key.to_owned(), value);
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> Result<&mut Self> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(self)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        fs::write(path, s).at(path.display().to_string())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).at(path.display().to_string())?;
        serde_json::from_str(&s).at(path.display().to_string())
    }
}

/// `out.jsonl` -> `out.jsonl.manifest.json`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
