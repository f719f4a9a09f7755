//! Role and activity configuration read from the JSON sidecar file.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use dea_core::madea::{ActivityIo, ActivityStructure};
use dea_core::{validate_dataset, Dataset, RawTable, Roles};
use serde::Deserialize;

/// Missing or malformed configuration. Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError {
    pub path: PathBuf,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub activities: Option<Activities>,
    #[serde(default)]
    pub shared_inputs: Vec<String>,
    #[serde(default)]
    pub split_outputs: Vec<SplitOutput>,
    #[serde(default)]
    pub bounds: Option<Bounds>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Activities {
    pub teaching: ActivitySpec,
    pub research: ActivitySpec,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivitySpec {
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SplitOutput {
    Name(String),
    Detailed {
        name: String,
        #[serde(default)]
        #[allow(dead_code)]
        teaching_share_var: Option<String>,
    },
}

impl SplitOutput {
    fn name(&self) -> &str {
        match self {
            SplitOutput::Name(n) => n,
            SplitOutput::Detailed { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    #[serde(default)]
    pub lambda: Option<(f64, f64)>,
    #[serde(default)]
    pub beta: Option<(f64, f64)>,
}

pub struct RunConfig {
    pub path: PathBuf,
    pub file: ConfigFile,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let err = |message: String| ConfigError {
            path: path.to_path_buf(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| err(format!("cannot read config: {e}")))?;
        let file: ConfigFile = serde_json::from_str(&text).map_err(|e| err(format!("malformed config: {e}")))?;
        if file.inputs.is_empty() || file.outputs.is_empty() {
            return Err(err("`inputs` and `outputs` must be non-empty".into()));
        }
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    fn error(&self, message: impl Into<String>) -> ConfigError {
        ConfigError {
            path: self.path.clone(),
            message: message.into(),
        }
    }

    pub fn roles(&self) -> Roles {
        Roles {
            inputs: self.file.inputs.clone(),
            outputs: self.file.outputs.clone(),
        }
    }

    /// Activity wiring, resolved to dataset indices.
    pub fn structure(&self) -> Result<ActivityStructure, ConfigError> {
        let acts = self
            .file
            .activities
            .as_ref()
            .ok_or_else(|| self.error("`activities` is required for the multi-activity model"))?;
        let input_idx: HashMap<&str, usize> =
            self.file.inputs.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let output_idx: HashMap<&str, usize> =
            self.file.outputs.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let lookup = |table: &HashMap<&str, usize>, kind: &str, name: &str| {
            table
                .get(name)
                .copied()
                .ok_or_else(|| self.error(format!("`{name}` is not a declared {kind}")))
        };
        let resolve = |table: &HashMap<&str, usize>, kind: &str, names: &[String]| {
            names
                .iter()
                .map(|n| lookup(table, kind, n))
                .collect::<Result<Vec<_>, _>>()
        };
        let structure = ActivityStructure {
            teaching: ActivityIo {
                name: "teaching".into(),
                inputs: resolve(&input_idx, "input", &acts.teaching.inputs)?,
                outputs: resolve(&output_idx, "output", &acts.teaching.outputs)?,
            },
            research: ActivityIo {
                name: "research".into(),
                inputs: resolve(&input_idx, "input", &acts.research.inputs)?,
                outputs: resolve(&output_idx, "output", &acts.research.outputs)?,
            },
            shared_inputs: resolve(&input_idx, "input", &self.file.shared_inputs)?,
            split_outputs: self
                .file
                .split_outputs
                .iter()
                .map(|s| lookup(&output_idx, "output", s.name()))
                .collect::<Result<_, _>>()?,
        };
        structure
            .validate(self.file.inputs.len(), self.file.outputs.len())
            .map_err(|e| self.error(e.to_string()))?;
        Ok(structure)
    }

    pub fn bounds(&self) -> Option<Bounds> {
        self.file.bounds
    }
}

pub fn load_dataset(data: &Path, config: &RunConfig) -> anyhow::Result<Dataset> {
    let file = fs::File::open(data).map_err(|e| anyhow::anyhow!("cannot open {}: {e}", data.display()))?;
    let raw = RawTable::from_csv(file).map_err(|e| anyhow::anyhow!("{}: {e}", data.display()))?;
    validate_dataset(&raw, &config.roles()).map_err(|e| anyhow::anyhow!("{}: {e}", data.display()))
}
