//! Settings resolution: built-in defaults < config file < command-line flags.

use std::fmt;
use std::path::Path;

use dicke_core::Error;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const METADATA_FILE: &str = "metadata.json";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::DimensionlessUndefined | Error::MissingModelParams => {
                CliError::Usage(e.to_string())
            }
            e => CliError::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Everything needed to repeat a run.
#[derive(Debug, Serialize, Deserialize)]
pub struct Metadata {
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub workers: usize,
    pub config: Value,
}

/// Contents of a `--config` file: either a bare settings object or a metadata record.
pub struct ConfigFile {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub settings: Value,
}

pub fn load_config(path: &Path) -> CliResult<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    if let Ok(meta) = serde_json::from_value::<Metadata>(value.clone()) {
        return Ok(ConfigFile {
            command: Some(meta.command),
            seed: Some(meta.seed),
            settings: meta.config,
        });
    }
    if !value.is_object() {
        return Err(CliError::Usage(format!("config {} must hold a JSON object", path.display())));
    }
    Ok(ConfigFile {
        command: None,
        seed: None,
        settings: value,
    })
}

fn overlay(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => overlay(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Merge command-line settings over the file settings of the same command.
pub fn merge<T: Serialize + DeserializeOwned>(cli: &T, file: Option<&Value>) -> CliResult<T> {
    let Some(file) = file else {
        return Ok(serde_json::from_value(to_value(cli)?).expect("settings round-trip"));
    };
    let mut merged = file.clone();
    overlay(&mut merged, to_value(cli)?);
    serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("bad config: {e}")))
}

pub fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn write_metadata(out: &Path, command: &str, seed: u64, workers: usize, config: Value) -> CliResult<()> {
    let meta = Metadata {
        tool_version: dicke_core::sweep::TOOL_VERSION.into(),
        command: command.into(),
        seed,
        workers,
        config,
    };
    dicke_core::io::write_json(&out.join(METADATA_FILE), &meta)?;
    Ok(())
}
