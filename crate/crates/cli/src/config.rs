use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Entropy,
    Typicality,
    Eof,
    DilutePure,
    DiluteMixed,
    ConverseBound,
    MajorizationCheck,
    Gibbs,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandName::Entropy => "entropy",
            CommandName::Typicality => "typicality",
            CommandName::Eof => "eof",
            CommandName::DilutePure => "dilute-pure",
            CommandName::DiluteMixed => "dilute-mixed",
            CommandName::ConverseBound => "converse-bound",
            CommandName::MajorizationCheck => "majorization-check",
            CommandName::Gibbs => "gibbs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Experiment file accepted by `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandName,
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_path: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
    }
}

/// `--params` value: inline JSON, or `@path` to a JSON file.
pub fn parse_params(raw: &str) -> CliResult<Value> {
    let text = match raw.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)?,
        None => raw.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("--params: {e}")))
}
