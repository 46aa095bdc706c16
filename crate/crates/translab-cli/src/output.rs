//! Single-writer output stage: every artifact is written to a temporary file in the target
//! directory and renamed into place, and carries the hash of the configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// SHA-256 of the canonical JSON form of the configuration, excluding the output directory.
pub fn config_hash(config: &RunConfig) -> String {
    let mut value = serde_json::to_value(config).expect("configuration serializes");
    if let Value::Object(map) = &mut value {
        map.remove("output_dir");
    }
    let digest = Sha256::digest(value.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub struct OutputStage {
    dir: PathBuf,
    hash: String,
    written: Vec<String>,
}

impl OutputStage {
    pub fn new(dir: &Path, hash: String) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), hash, written: Vec::new() })
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
        let target = self.dir.join(name);
        let temp = self.dir.join(format!(".{name}.tmp"));
        {
            let mut file = fs::File::create(&temp)?;
            file.write_all(bytes)?;
            file.sync_all()?;
        }
        fs::rename(&temp, &target)?;
        self.written.push(name.to_string());
        Ok(target)
    }

    /// Pretty JSON with a top-level `config_hash` field; keys are sorted.
    pub fn write_json<T: Serialize>(&mut self, name: &str, report: &T) -> std::io::Result<PathBuf> {
        let mut value = serde_json::to_value(report).map_err(std::io::Error::other)?;
        match &mut value {
            Value::Object(map) => {
                map.insert("config_hash".into(), Value::String(self.hash.clone()));
            }
            other => {
                let inner = std::mem::take(other);
                *other = serde_json::json!({ "config_hash": self.hash, "data": inner });
            }
        }
        let mut text = serde_json::to_string_pretty(&value).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Text artifact preceded by a `# config_sha256 = ...` comment line.
    pub fn write_commented(&mut self, name: &str, body: &[u8]) -> std::io::Result<PathBuf> {
        let mut bytes = format!("# config_sha256 = {}\n", self.hash).into_bytes();
        bytes.extend_from_slice(body);
        self.write_bytes(name, &bytes)
    }
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub seed: u64,
    pub threads: usize,
    pub translab_version: &'a str,
    pub cli_version: &'a str,
    pub wall_time_seconds: f64,
    pub exit_code: i32,
    pub outputs: Vec<String>,
}
